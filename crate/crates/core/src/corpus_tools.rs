//! JSON Lines corpora: loading, saving, splitting and length statistics.
//!
//! One record per line:
//!
//! ```text
//! {"id": "r1", "text": "...", "events": [{"core_name": "cancer", "tendency": "yes",
//!   "characteristics": ["postoperation"], "anatomies": ["rectum"], "core_span": null}]}
//! ```
//!
//! Prediction files use the same layout, or `{"id": ..., "output": ...}` with
//! a raw linearized string that is decoded before scoring.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::event_model::{normalize_event, AnnotatedRecord, ClinicalEvent, EventError, MedicalRecord};
use crate::linearizer::{Linearizer, OutputFormat, ParseDiagnostic};
use crate::text;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing or mistyped field `{field}`")]
    Schema { line: usize, field: String },
    #[error("line {line}: {source}")]
    InvalidRecord {
        line: usize,
        #[source]
        source: EventError,
    },
    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: record id {id:?} is not in the reference corpus")]
    UnknownRecordId { line: usize, id: String },
    #[error("requested {requested} training records but the corpus has {available}")]
    Size { requested: usize, available: usize },
}

impl CorpusError {
    /// Line number the error refers to, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Parse { line, .. }
            | CorpusError::Schema { line, .. }
            | CorpusError::InvalidRecord { line, .. }
            | CorpusError::DuplicateId { line, .. }
            | CorpusError::UnknownRecordId { line, .. } => Some(*line),
            CorpusError::Io { .. } | CorpusError::Size { .. } => None,
        }
    }
}

/// Records with unique ids, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    records: Vec<AnnotatedRecord>,
}

impl Corpus {
    pub fn new(records: Vec<AnnotatedRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id()) {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: r.id().to_string(),
                });
            }
        }
        Ok(Corpus { records })
    }

    pub fn records(&self) -> &[AnnotatedRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<AnnotatedRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedRecord> {
        self.records.iter().find(|r| r.id() == id)
    }
}

/// On-disk record layout; field order here is the byte order on save.
#[derive(Serialize, Deserialize)]
struct RecordLine {
    id: String,
    text: String,
    events: Vec<ClinicalEvent>,
}

fn require(line: usize, obj: &serde_json::Map<String, Value>, field: &str, prefix: &str) -> Result<(), CorpusError> {
    if obj.get(field).is_none_or(Value::is_null) {
        return Err(CorpusError::Schema {
            line,
            field: format!("{prefix}{field}"),
        });
    }
    Ok(())
}

fn parse_value(line: usize, raw: &str) -> Result<serde_json::Map<String, Value>, CorpusError> {
    match serde_json::from_str::<Value>(raw) {
        Ok(Value::Object(obj)) => Ok(obj),
        Ok(_) => Err(CorpusError::Parse {
            line,
            message: "expected a JSON object".into(),
        }),
        Err(e) => Err(CorpusError::Parse {
            line,
            message: e.to_string(),
        }),
    }
}

/// Check required fields, then build and normalize the record.
fn record_from_object(line: usize, obj: serde_json::Map<String, Value>) -> Result<AnnotatedRecord, CorpusError> {
    require(line, &obj, "id", "")?;
    require(line, &obj, "text", "")?;
    require(line, &obj, "events", "")?;
    if let Some(Value::Array(events)) = obj.get("events") {
        for (k, e) in events.iter().enumerate() {
            match e {
                Value::Object(eo) => require(line, eo, "core_name", &format!("events[{k}]."))?,
                _ => {
                    return Err(CorpusError::Schema {
                        line,
                        field: format!("events[{k}]"),
                    })
                }
            }
        }
    }
    let parsed: RecordLine = serde_json::from_value(Value::Object(obj)).map_err(|e| {
        let message = e.to_string();
        // Invariant violations surface through serde as custom errors.
        CorpusError::Parse { line, message }
    })?;
    let record =
        MedicalRecord::new(parsed.id, parsed.text).map_err(|source| CorpusError::InvalidRecord { line, source })?;
    let events = parsed
        .events
        .iter()
        .map(|e| {
            let e = normalize_event(e)?;
            e.check_span(&record.text)?;
            Ok(e)
        })
        .collect::<Result<Vec<_>, EventError>>()
        .map_err(|source| CorpusError::InvalidRecord { line, source })?;
    Ok(AnnotatedRecord::new(record, events))
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Read a corpus from JSON Lines. Blank lines are skipped; events are
/// normalized and spans checked against the text.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (line, raw) in lines(reader) {
        let raw = raw.map_err(io_err(Path::new("<input>")))?;
        if raw.trim().is_empty() {
            continue;
        }
        let record = record_from_object(line, parse_value(line, &raw)?)?;
        if !seen.insert(record.id().to_string()) {
            return Err(CorpusError::DuplicateId {
                line,
                id: record.id().to_string(),
            });
        }
        records.push(record);
    }
    Ok(Corpus { records })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W) -> io::Result<()> {
    write_records(corpus.records(), writer)
}

pub fn write_records<W: Write>(records: &[AnnotatedRecord], mut writer: W) -> io::Result<()> {
    for r in records {
        let line = RecordLine {
            id: r.record.id.clone(),
            text: r.record.text.clone(),
            events: r.events.clone(),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    write_corpus(corpus, BufWriter::new(file)).map_err(io_err(path))
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionLine {
    Events {
        line: usize,
        record: AnnotatedRecord,
    },
    Raw {
        line: usize,
        id: String,
        text: Option<String>,
        output: String,
    },
}

impl PredictionLine {
    pub fn id(&self) -> &str {
        match self {
            PredictionLine::Events { record, .. } => record.id(),
            PredictionLine::Raw { id, .. } => id,
        }
    }

    pub fn line(&self) -> usize {
        match self {
            PredictionLine::Events { line, .. } | PredictionLine::Raw { line, .. } => *line,
        }
    }
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionLine>, CorpusError> {
    let mut out = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (line, raw) in lines(reader) {
        let raw = raw.map_err(io_err(Path::new("<input>")))?;
        if raw.trim().is_empty() {
            continue;
        }
        let obj = parse_value(line, &raw)?;
        let entry = if obj.contains_key("output") {
            let field = |name: &str| -> Result<Option<String>, CorpusError> {
                match obj.get(name) {
                    None | Some(Value::Null) => Ok(None),
                    Some(Value::String(s)) => Ok(Some(s.clone())),
                    Some(_) => Err(CorpusError::Schema {
                        line,
                        field: name.to_string(),
                    }),
                }
            };
            let id = field("id")?.ok_or_else(|| CorpusError::Schema {
                line,
                field: "id".into(),
            })?;
            PredictionLine::Raw {
                line,
                id,
                text: field("text")?,
                output: field("output")?.unwrap_or_default(),
            }
        } else {
            PredictionLine::Events {
                line,
                record: record_from_object(line, obj)?,
            }
        };
        if !seen.insert(entry.id().to_string()) {
            return Err(CorpusError::DuplicateId {
                line,
                id: entry.id().to_string(),
            });
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionLine>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_predictions(BufReader::new(file))
}

/// Decode diagnostics of one raw prediction line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineDiagnostics {
    pub id: String,
    pub line: usize,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Turn prediction lines into annotated records. Raw outputs are decoded
/// with `linearizer` and normalized; a missing text is taken from the
/// reference corpus when one is given.
pub fn resolve_predictions(
    entries: Vec<PredictionLine>,
    reference: Option<&Corpus>,
    linearizer: &Linearizer,
    format: OutputFormat,
) -> Result<(Vec<AnnotatedRecord>, Vec<LineDiagnostics>), CorpusError> {
    let texts: HashMap<&str, &str> = reference
        .map(|c| c.records().iter().map(|r| (r.id(), r.text())).collect())
        .unwrap_or_default();
    let mut records = Vec::with_capacity(entries.len());
    let mut diagnostics = Vec::new();
    for entry in entries {
        match entry {
            PredictionLine::Events { record, .. } => records.push(record),
            PredictionLine::Raw { line, id, text, output } => {
                let text = match text.or_else(|| texts.get(id.as_str()).map(|t| t.to_string())) {
                    Some(t) => t,
                    None => return Err(CorpusError::UnknownRecordId { line, id }),
                };
                let record = MedicalRecord::new(id.clone(), text)
                    .map_err(|source| CorpusError::InvalidRecord { line, source })?;
                let (events, diags) = linearizer.decode(&output, format);
                let events = events.iter().filter_map(|e| normalize_event(e).ok()).collect();
                if !diags.is_empty() {
                    diagnostics.push(LineDiagnostics {
                        id,
                        line,
                        diagnostics: diags,
                    });
                }
                records.push(AnnotatedRecord::new(record, events));
            }
        }
    }
    Ok((records, diagnostics))
}

/// Shuffle with `seed` and cut after `train_size` records.
pub fn split_corpus(corpus: &Corpus, train_size: usize, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if train_size > corpus.len() {
        return Err(CorpusError::Size {
            requested: train_size,
            available: corpus.len(),
        });
    }
    let mut records = corpus.records.clone();
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let valid = records.split_off(train_size);
    Ok((Corpus { records }, Corpus { records: valid }))
}

pub fn count_events(corpus: &Corpus) -> usize {
    corpus.records.iter().map(|r| r.events.len()).sum()
}

/// How often each core name occurs across the corpus.
pub fn core_frequencies(corpus: &Corpus) -> BTreeMap<String, usize> {
    let mut freq = BTreeMap::new();
    for e in corpus.records.iter().flat_map(|r| &r.events) {
        *freq.entry(e.core_name().to_string()).or_insert(0) += 1;
    }
    freq
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdFraction {
    pub threshold: usize,
    pub at_most: usize,
    pub fraction: f64,
    /// False when the corpus is empty and `fraction` is a placeholder 0.
    pub defined: bool,
}

/// Distribution of record lengths in code points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthHistogram {
    pub bucket_width: usize,
    /// Bucket `k` counts lengths in `[k * width, (k + 1) * width)`.
    pub buckets: BTreeMap<usize, usize>,
    pub total: usize,
    pub thresholds: Vec<ThresholdFraction>,
}

impl LengthHistogram {
    /// CSV with one row per bucket from 0 to the last non-empty one.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "bucket_start,bucket_end,count")?;
        if let Some(&last) = self.buckets.keys().next_back() {
            for k in 0..=last {
                let count = self.buckets.get(&k).copied().unwrap_or(0);
                writeln!(w, "{},{},{}", k * self.bucket_width, (k + 1) * self.bucket_width, count)?;
            }
        }
        w.flush()
    }
}

pub fn length_histogram(corpus: &Corpus, bucket_width: NonZeroUsize, thresholds: &[usize]) -> LengthHistogram {
    let width = bucket_width.get();
    let lengths: Vec<usize> = corpus.records.iter().map(|r| text::char_len(r.text())).collect();
    let mut buckets = BTreeMap::new();
    for &len in &lengths {
        *buckets.entry(len / width).or_insert(0) += 1;
    }
    let total = lengths.len();
    let thresholds = thresholds
        .iter()
        .map(|&threshold| {
            let at_most = lengths.iter().filter(|&&l| l <= threshold).count();
            ThresholdFraction {
                threshold,
                at_most,
                fraction: if total == 0 { 0.0 } else { at_most as f64 / total as f64 },
                defined: total > 0,
            }
        })
        .collect();
    LengthHistogram {
        bucket_width: width,
        buckets,
        total,
        thresholds,
    }
}
