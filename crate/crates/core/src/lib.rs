//! Structured-output tooling for clinical event extraction: linearization of
//! event sets, grammar-constrained beam search over a pluggable scorer,
//! event-level evaluation, corpus utilities and error analysis.

pub mod event_model;
pub mod linearizer;
pub mod text;

pub use event_model::{
    event_key, normalize_event, AnnotatedRecord, CanonicalEventKey, ClinicalEvent, EventError, MedicalRecord, Slot,
};
pub use linearizer::{
    decode_events, encode_events, roundtrip_check, DiagnosticKind, Linearizer, OutputFormat, ParseDiagnostic, TokenSet,
};
pub mod metrics;
pub use metrics::{f1_from_counts, match_record, score_corpus, MatchCounts, MatchMode, ScoreReport};
pub mod corpus_tools;
pub use corpus_tools::{
    count_events, length_histogram, load_corpus, save_corpus, split_corpus, Corpus, CorpusError, LengthHistogram,
};
pub mod decoder;
pub use decoder::{beam_search, DecodeConfig, EchoScorer, NextTokenScorer, RandomScorer, Vocabulary};
pub mod extractor_baseline;
pub use extractor_baseline::{rule_extract, ExtractError, Lexicon};
pub mod error_analysis;
pub use error_analysis::{classify_errors, error_summary, not_in_source_rate, ErrorCategory, ErrorReport};
pub mod cli;
