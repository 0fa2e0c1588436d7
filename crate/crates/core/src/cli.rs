//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (reported as
//! `file:line: message` where a line is known), 3 internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::corpus_tools::{
    core_frequencies, count_events, length_histogram, load_corpus, load_predictions, resolve_predictions, save_corpus,
    split_corpus, write_records, Corpus, CorpusError,
};
use crate::decoder::{beam_search, DecodeConfig, EchoScorer, NextTokenScorer, RandomScorer, Vocabulary};
use crate::error_analysis::{
    classify_corpus, error_summary, not_in_source_rate, write_reports, DEFAULT_RARITY_THRESHOLD,
};
use crate::event_model::{AnnotatedRecord, MedicalRecord};
use crate::extractor_baseline::{rule_extract_with, ExtractError, ExtractorConfig, Lexicon};
use crate::linearizer::{Linearizer, OutputFormat, TokenSet};
use crate::metrics::{score_corpus, MatchMode, ScoreReport};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data {
        location: String,
        message: String,
    },
    Internal(String),
    /// Standard output was closed by the reader, as in `medevent ... | head`.
    OutputClosed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
            CliError::Internal(_) => 3,
            CliError::OutputClosed => 0,
        }
    }

    fn data(location: impl AsRef<Path>, message: impl ToString) -> Self {
        CliError::Data {
            location: location.as_ref().display().to_string(),
            message: message.to_string(),
        }
    }

    fn corpus(path: &Path, err: CorpusError) -> Self {
        match err.line() {
            Some(line) => {
                let full = err.to_string();
                let prefix = format!("line {line}: ");
                CliError::Data {
                    location: format!("{}:{line}", path.display()),
                    message: full.strip_prefix(&prefix).unwrap_or(&full).to_string(),
                }
            }
            None => match err {
                CorpusError::Io { path, source } => CliError::data(path, source),
                other => CliError::data(path, other),
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data { location, message } => write!(f, "{location}: {message}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
            CliError::OutputClosed => f.write_str("output closed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Special,
    Baseline,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Special => OutputFormat::SpecialToken,
            FormatArg::Baseline => OutputFormat::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Full,
    Core,
    Attrs,
    StrictPos,
    All,
}

impl ModeArg {
    fn modes(self) -> Vec<MatchMode> {
        match self {
            ModeArg::Full => vec![MatchMode::FullEvent],
            ModeArg::Core => vec![MatchMode::CoreWord],
            ModeArg::Attrs => vec![MatchMode::OtherAttributes],
            ModeArg::StrictPos => vec![MatchMode::CoreWordStrictPosition],
            ModeArg::All => MatchMode::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "medevent",
    version,
    about = "Clinical event linearization, decoding, scoring and error analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linearize every record's events; writes {"id","text","output"} lines.
    Encode {
        /// Corpus JSONL.
        corpus: PathBuf,
        /// Target string format.
        #[arg(long, value_enum, default_value = "special")]
        format: FormatArg,
        /// Write bare output strings, one per line, instead of JSON.
        #[arg(long)]
        plain: bool,
        /// Output file (default: standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Parse {"id","output"} lines back into a corpus.
    Decode {
        /// JSON lines with "id" and "output", or full corpus lines.
        input: PathBuf,
        /// Format of the "output" strings.
        #[arg(long, value_enum, default_value = "special")]
        format: FormatArg,
        /// Corpus supplying texts for lines that carry no "text".
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Write parse diagnostics here as JSON lines (default: standard error).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Output corpus file (default: standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Precision, recall and F1 of predictions against gold as JSON.
    Score {
        /// Gold corpus JSONL.
        gold: PathBuf,
        /// Prediction corpus, or {"id","output"} lines.
        pred: PathBuf,
        /// Matching mode; `all` prints every mode as an array.
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        /// Format of raw "output" strings in the prediction file.
        #[arg(long, value_enum, default_value = "special")]
        format: FormatArg,
    },
    /// Record and event counts and the length histogram.
    Stats {
        /// Corpus JSONL.
        corpus: PathBuf,
        /// Histogram bucket width in characters.
        #[arg(long, default_value = "20")]
        bucket_width: NonZeroUsize,
        /// Report the share of records at most this long; repeatable.
        #[arg(long = "threshold", default_values_t = [200])]
        thresholds: Vec<usize>,
        /// Also write the histogram as CSV (bucket_start,bucket_end,count).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Shuffle with a seed and cut into training and validation files.
    Split {
        /// Corpus JSONL.
        corpus: PathBuf,
        /// Number of records in the training half.
        #[arg(long)]
        train_size: usize,
        /// Shuffle seed.
        #[arg(long)]
        seed: u64,
        /// Default: <stem>.train.jsonl next to the input.
        #[arg(long)]
        train_out: Option<PathBuf>,
        /// Default: <stem>.valid.jsonl next to the input.
        #[arg(long)]
        valid_out: Option<PathBuf>,
    },
    /// Run the lexicon extractor over a corpus; writes a prediction corpus.
    Extract {
        /// Corpus JSONL; existing events are ignored.
        corpus: PathBuf,
        /// Lexicon JSON with core_terms, anatomy_terms, negation_cues and characteristic_terms.
        #[arg(long)]
        lexicon: PathBuf,
        /// Negation window in characters.
        #[arg(long, default_value = "6")]
        window: usize,
        /// Output corpus file (default: standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Grammar-constrained beam search with a fixture scorer; writes
    /// {"id","text","output","score","truncated"} lines.
    BeamDecode {
        /// Corpus JSONL supplying source texts.
        corpus: PathBuf,
        /// JSON scorer fixture: {"kind":"echo","targets":{id: string}} or
        /// {"kind":"random","seed":n,"min_len":n,"content_penalty":x}.
        #[arg(long)]
        scorer: PathBuf,
        /// Hypotheses kept per step.
        #[arg(long, default_value = "3", value_parser = clap::value_parser!(u32).range(1..))]
        beam_width: u32,
        /// Most tokens generated, end-of-sequence included.
        #[arg(long, default_value = "128", value_parser = clap::value_parser!(u32).range(1..))]
        max_len: u32,
        /// Only allow values that occur in the source text.
        #[arg(long)]
        copy_constraint: bool,
        /// Rank finished outputs by mean instead of total score.
        #[arg(long)]
        length_normalization: bool,
        /// Output file (default: standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Classify unmatched events and measure text absent from the source.
    Analyze {
        /// Gold corpus JSONL.
        gold: PathBuf,
        /// Prediction corpus, or {"id","output"} lines.
        pred: PathBuf,
        /// Training corpus for core-word frequencies.
        #[arg(long)]
        train: PathBuf,
        /// Core words seen at most this often in training count as rare.
        #[arg(long, default_value_t = DEFAULT_RARITY_THRESHOLD)]
        rarity_threshold: usize,
        /// Format of raw "output" strings in the prediction file.
        #[arg(long, value_enum, default_value = "special")]
        format: FormatArg,
        /// Write error reports here as JSON lines.
        #[arg(long)]
        reports: Option<PathBuf>,
    },
}

/// Parse `args` (program name first) and run the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) | Err(CliError::OutputClosed) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn io_error(path: Option<&Path>) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| match path {
        Some(p) => CliError::data(p, e),
        None if e.kind() == io::ErrorKind::BrokenPipe => CliError::OutputClosed,
        None => CliError::Internal(format!("writing output: {e}")),
    }
}

/// Run `f` against the file at `path`, or against `out` when there is none.
fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_error(Some(p)))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(io_error(Some(p)))
        }
        None => f(out).map_err(io_error(None)),
    }
}

fn load(path: &Path) -> Result<Corpus, CliError> {
    load_corpus(path).map_err(|e| CliError::corpus(path, e))
}

fn load_resolved(path: &Path, reference: &Corpus, format: OutputFormat) -> Result<Vec<AnnotatedRecord>, CliError> {
    let entries = load_predictions(path).map_err(|e| CliError::corpus(path, e))?;
    let (records, _) = resolve_predictions(entries, Some(reference), &Linearizer::default(), format)
        .map_err(|e| CliError::corpus(path, e))?;
    Ok(records)
}

#[derive(Serialize)]
struct OutputLine<'a> {
    id: &'a str,
    text: &'a str,
    output: &'a str,
}

#[derive(Serialize)]
struct DecodedLine {
    id: String,
    text: String,
    output: String,
    score: f64,
    truncated: bool,
}

fn json_line<W: Write + ?Sized, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    writeln!(w)
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Encode {
            corpus,
            format,
            plain,
            output,
        } => {
            let c = load(&corpus)?;
            let lin = Linearizer::default();
            let mut lines = Vec::with_capacity(c.len());
            for r in c.records() {
                let s = lin
                    .encode(&r.events, format.into())
                    .map_err(|e| CliError::Internal(format!("record {:?}: {e}", r.id())))?;
                lines.push((r.id(), r.text(), s));
            }
            with_output(output.as_deref(), out, |w| {
                for (id, text, s) in &lines {
                    if plain {
                        writeln!(w, "{s}")?;
                    } else {
                        json_line(w, &OutputLine { id, text, output: s })?;
                    }
                }
                Ok(())
            })
        }
        Command::Decode {
            input,
            format,
            reference,
            diagnostics,
            output,
        } => {
            let reference = reference.as_deref().map(load).transpose()?;
            let entries = load_predictions(&input).map_err(|e| CliError::corpus(&input, e))?;
            let (records, diags) =
                resolve_predictions(entries, reference.as_ref(), &Linearizer::default(), format.into())
                    .map_err(|e| CliError::corpus(&input, e))?;
            with_output(output.as_deref(), out, |w| write_records(&records, w))?;
            match diagnostics {
                Some(p) => with_output(Some(&p), out, |w| diags.iter().try_for_each(|d| json_line(w, d)))?,
                None => {
                    for d in &diags {
                        for x in &d.diagnostics {
                            let _ = writeln!(
                                err,
                                "{}:{}: {} at {}: {}",
                                input.display(),
                                d.line,
                                x.kind,
                                x.position,
                                x.message
                            );
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Score {
            gold,
            pred,
            mode,
            format,
        } => {
            let g = load(&gold)?;
            let p = load_resolved(&pred, &g, format.into())?;
            let reports: Vec<ScoreReport> = mode
                .modes()
                .into_iter()
                .map(|m| score_corpus(g.records(), &p, m))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::data(&pred, e))?;
            let text = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(&reports)
            }
            .map_err(|e| CliError::Internal(e.to_string()))?;
            writeln!(out, "{text}").map_err(io_error(None))
        }
        Command::Stats {
            corpus,
            bucket_width,
            thresholds,
            csv,
        } => {
            let c = load(&corpus)?;
            let hist = length_histogram(&c, bucket_width, &thresholds);
            if let Some(p) = csv.as_deref() {
                with_output(Some(p), out, |w| hist.write_csv(w))?;
            }
            let summary = json!({
                "records": c.len(),
                "events": count_events(&c),
                "histogram": hist,
            });
            let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
            writeln!(out, "{text}").map_err(io_error(None))
        }
        Command::Split {
            corpus,
            train_size,
            seed,
            train_out,
            valid_out,
        } => {
            let c = load(&corpus)?;
            let (train, valid) = split_corpus(&c, train_size, seed).map_err(|e| CliError::corpus(&corpus, e))?;
            let sibling = |suffix: &str| {
                let stem = corpus
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                corpus.with_file_name(format!("{stem}.{suffix}.jsonl"))
            };
            let train_path = train_out.unwrap_or_else(|| sibling("train"));
            let valid_path = valid_out.unwrap_or_else(|| sibling("valid"));
            save_corpus(&train, &train_path).map_err(|e| CliError::corpus(&train_path, e))?;
            save_corpus(&valid, &valid_path).map_err(|e| CliError::corpus(&valid_path, e))?;
            writeln!(
                out,
                "{}",
                json!({
                    "train": {"path": train_path, "records": train.len(), "events": count_events(&train)},
                    "valid": {"path": valid_path, "records": valid.len(), "events": count_events(&valid)},
                })
            )
            .map_err(io_error(None))
        }
        Command::Extract {
            corpus,
            lexicon,
            window,
            output,
        } => {
            let c = load(&corpus)?;
            let lex = Lexicon::load(&lexicon).map_err(|e| match e {
                ExtractError::Io { source, .. } => CliError::data(&lexicon, source),
                ExtractError::Parse { source, .. } => CliError::data(&lexicon, source),
                other => CliError::data(&lexicon, other),
            })?;
            let cfg = ExtractorConfig {
                negation_window: window,
            };
            let mut records = Vec::with_capacity(c.len());
            for r in c.records() {
                let events = rule_extract_with(&r.record, &lex, &cfg).map_err(|e| CliError::data(&lexicon, e))?;
                records.push(AnnotatedRecord::new(r.record.clone(), events));
            }
            with_output(output.as_deref(), out, |w| write_records(&records, w))
        }
        Command::BeamDecode {
            corpus,
            scorer,
            beam_width,
            max_len,
            copy_constraint,
            length_normalization,
            output,
        } => {
            let config = DecodeConfig {
                beam_width: beam_width as usize,
                max_output_len: max_len as usize,
                copy_constraint,
                length_normalization,
            };
            let c = load(&corpus)?;
            let fixture = ScorerFixture::load(&scorer)?;
            let texts = c
                .records()
                .iter()
                .map(|r| r.text().to_string())
                .chain(fixture.target_texts());
            let texts: Vec<String> = texts.collect();
            let vocab = Vocabulary::from_chars(TokenSet::default(), texts.iter().map(String::as_str))
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let mut lines = Vec::with_capacity(c.len());
            for r in c.records() {
                let out = fixture.decode(&scorer, &r.record, &vocab, &config)?;
                lines.push(DecodedLine {
                    id: r.id().to_string(),
                    text: r.text().to_string(),
                    output: out.text,
                    score: out.score,
                    truncated: out.truncated,
                });
            }
            with_output(output.as_deref(), out, |w| {
                lines.iter().try_for_each(|l| json_line(w, l))
            })
        }
        Command::Analyze {
            gold,
            pred,
            train,
            rarity_threshold,
            format,
            reports,
        } => {
            let g = load(&gold)?;
            let p = load_resolved(&pred, &g, format.into())?;
            let t = load(&train)?;
            let freq = core_frequencies(&t);
            let found =
                classify_corpus(g.records(), &p, &freq, rarity_threshold).map_err(|e| CliError::data(&pred, e))?;
            if let Some(path) = reports.as_deref() {
                with_output(Some(path), out, |w| write_reports(&found, w))?;
            }
            let nis = not_in_source_rate(&p);
            let summary = error_summary(&found);
            writeln!(
                out,
                "not-in-source: {}/{} predicted values ({:.4}); tendency values excluded",
                nis.not_in_source, nis.total_attribute_instances, nis.rate
            )
            .and_then(|_| writeln!(out, "{summary}"))
            .map_err(io_error(None))
        }
    }
}

/// Scorer selected by a JSON fixture file.
#[derive(Debug, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ScorerFixture {
    Echo {
        #[serde(default)]
        targets: BTreeMap<String, String>,
    },
    Random {
        seed: u64,
        #[serde(default)]
        min_len: usize,
        #[serde(default)]
        content_penalty: f64,
    },
}

impl ScorerFixture {
    fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
        serde_json::from_str(&raw).map_err(|e| CliError::Data {
            location: format!("{}:{}", path.display(), e.line()),
            message: e.to_string(),
        })
    }

    fn target_texts(&self) -> Vec<String> {
        match self {
            ScorerFixture::Echo { targets } => targets.values().cloned().collect(),
            ScorerFixture::Random { .. } => Vec::new(),
        }
    }

    fn decode(
        &self,
        path: &Path,
        record: &MedicalRecord,
        vocab: &Vocabulary,
        config: &DecodeConfig,
    ) -> Result<crate::decoder::DecodeOutput, CliError> {
        let scorer: Box<dyn NextTokenScorer> = match self {
            ScorerFixture::Echo { targets } => {
                let target = targets.get(&record.id).map(String::as_str).unwrap_or("");
                Box::new(EchoScorer::new(target, vocab).map_err(|e| CliError::data(path, e))?)
            }
            ScorerFixture::Random {
                seed,
                min_len,
                content_penalty,
            } => Box::new(
                RandomScorer::new(*seed, vocab)
                    .min_len(*min_len)
                    .content_penalty(*content_penalty),
            ),
        };
        beam_search(&scorer.as_ref(), record, vocab, config).map_err(|e| CliError::Internal(e.to_string()))
    }
}
