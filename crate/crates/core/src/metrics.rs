//! Precision, recall and F1 under exact matching, micro-averaged over a
//! corpus.
//!
//! Four matching units are supported:
//!
//! * whole events, compared by [`CanonicalEventKey`];
//! * core words alone;
//! * individual non-core attribute instances, as `(slot, value)` pairs;
//! * core words tied to the occurrence of the word in the source sentence.
//!
//! In every mode a record contributes `tp` = size of the multiset
//! intersection of its gold and predicted units, `fp = |pred| - tp` and
//! `fn = |gold| - tp`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::event_model::{event_key, AnnotatedRecord, ClinicalEvent, MedicalRecord, Slot};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("strict-position matching needs the source text")]
    MissingSource,
    #[error("prediction for unknown record id {0:?}")]
    UnknownRecordId(String),
    #[error("record id {0:?} appears more than once")]
    DuplicateRecordId(String),
    #[error("unknown match mode {0:?} (expected full, core, attrs or strict-pos)")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchMode {
    FullEvent,
    CoreWord,
    OtherAttributes,
    CoreWordStrictPosition,
}

impl MatchMode {
    pub const ALL: [MatchMode; 4] = [
        MatchMode::FullEvent,
        MatchMode::CoreWord,
        MatchMode::OtherAttributes,
        MatchMode::CoreWordStrictPosition,
    ];

    /// Command-line spelling.
    pub fn name(self) -> &'static str {
        match self {
            MatchMode::FullEvent => "full",
            MatchMode::CoreWord => "core",
            MatchMode::OtherAttributes => "attrs",
            MatchMode::CoreWordStrictPosition => "strict-pos",
        }
    }

    /// What one counted item is in this mode.
    pub fn unit(self) -> &'static str {
        match self {
            MatchMode::FullEvent => "event",
            MatchMode::CoreWord => "core_word",
            MatchMode::OtherAttributes => "attribute_instance",
            MatchMode::CoreWordStrictPosition => "core_word_occurrence",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatchMode {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MatchMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MetricsError::UnknownMode(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl MatchCounts {
    pub fn new(true_pos: usize, false_pos: usize, false_neg: usize) -> Self {
        MatchCounts {
            true_pos,
            false_pos,
            false_neg,
        }
    }

    fn from_intersection(tp: usize, gold: usize, pred: usize) -> Self {
        debug_assert!(tp <= gold && tp <= pred);
        MatchCounts::new(tp, pred - tp, gold - tp)
    }
}

impl std::ops::Add for MatchCounts {
    type Output = MatchCounts;

    fn add(self, o: MatchCounts) -> MatchCounts {
        MatchCounts::new(
            self.true_pos + o.true_pos,
            self.false_pos + o.false_pos,
            self.false_neg + o.false_neg,
        )
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> Self {
        iter.fold(MatchCounts::default(), |a, b| a + b)
    }
}

/// `(precision, recall, f1)`; any ratio with a zero denominator is 0.
pub fn f1_from_counts(c: MatchCounts) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall = ratio(c.true_pos, c.true_pos + c.false_neg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub mode: MatchMode,
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreReport {
    pub fn from_counts(mode: MatchMode, counts: MatchCounts) -> Self {
        let (precision, recall, f1) = f1_from_counts(counts);
        ScoreReport {
            mode,
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// Round to the four decimals used in printed reports.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Serialize)]
struct ExactScores {
    precision: f64,
    recall: f64,
    f1: f64,
}

#[derive(Serialize)]
struct ReportJson {
    mode: &'static str,
    unit: &'static str,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    exact: ExactScores,
}

impl Serialize for ScoreReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReportJson {
            mode: self.mode.name(),
            unit: self.mode.unit(),
            tp: self.counts.true_pos,
            fp: self.counts.false_pos,
            fn_: self.counts.false_neg,
            precision: round4(self.precision),
            recall: round4(self.recall),
            f1: round4(self.f1),
            exact: ExactScores {
                precision: self.precision,
                recall: self.recall,
                f1: self.f1,
            },
        }
        .serialize(serializer)
    }
}

fn multiset<T: Eq + Hash>(items: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for item in items {
        *m.entry(item).or_insert(0) += 1;
    }
    m
}

fn intersection_size<T: Eq + Hash>(gold: &HashMap<T, usize>, pred: &HashMap<T, usize>) -> usize {
    gold.iter()
        .map(|(k, &n)| n.min(pred.get(k).copied().unwrap_or(0)))
        .sum()
}

fn count_units<T: Eq + Hash>(gold: Vec<T>, pred: Vec<T>) -> MatchCounts {
    let (ng, np) = (gold.len(), pred.len());
    let tp = intersection_size(&multiset(gold), &multiset(pred));
    MatchCounts::from_intersection(tp, ng, np)
}

fn attribute_units(events: &[ClinicalEvent]) -> Vec<(Slot, &str)> {
    events.iter().flat_map(ClinicalEvent::attribute_instances).collect()
}

/// Occurrence (start offset in code points) that each event refers to.
///
/// Events with a span claim their span first. Every other event then takes,
/// in list order, the leftmost non-overlapping occurrence of its core word
/// that nobody has claimed yet; `None` when the word is not found or all of
/// its occurrences are taken.
pub fn align_occurrences(events: &[ClinicalEvent], source: &str) -> Vec<Option<usize>> {
    let mut claimed: HashSet<(&str, usize)> = events
        .iter()
        .filter_map(|e| e.core_span().map(|(start, _)| (e.core_name(), start)))
        .collect();
    let mut found: HashMap<&str, Vec<usize>> = HashMap::new();
    events
        .iter()
        .map(|e| {
            if let Some((start, _)) = e.core_span() {
                return Some(start);
            }
            let occ = found
                .entry(e.core_name())
                .or_insert_with(|| text::occurrences(source, e.core_name()));
            let pick = occ.iter().copied().find(|&s| !claimed.contains(&(e.core_name(), s)));
            if let Some(s) = pick {
                claimed.insert((e.core_name(), s));
            }
            pick
        })
        .collect()
}

/// Match one record's predicted events against its gold events.
pub fn match_record(
    gold: &[ClinicalEvent],
    pred: &[ClinicalEvent],
    mode: MatchMode,
    source: Option<&MedicalRecord>,
) -> Result<MatchCounts, MetricsError> {
    Ok(match mode {
        MatchMode::FullEvent => count_units(
            gold.iter().map(event_key).collect(),
            pred.iter().map(event_key).collect(),
        ),
        MatchMode::CoreWord => count_units(
            gold.iter().map(ClinicalEvent::core_name).collect(),
            pred.iter().map(ClinicalEvent::core_name).collect(),
        ),
        MatchMode::OtherAttributes => count_units(attribute_units(gold), attribute_units(pred)),
        MatchMode::CoreWordStrictPosition => {
            let source = source.ok_or(MetricsError::MissingSource)?;
            let positioned = |events: &[ClinicalEvent]| -> Vec<Option<(String, usize)>> {
                events
                    .iter()
                    .zip(align_occurrences(events, &source.text))
                    .map(|(e, occ)| occ.map(|s| (e.core_name().to_string(), s)))
                    .collect()
            };
            let g = positioned(gold);
            let p = positioned(pred);
            // Unaligned events can never match but still count as fp/fn.
            let tp = intersection_size(&multiset(g.iter().flatten()), &multiset(p.iter().flatten()));
            MatchCounts::from_intersection(tp, g.len(), p.len())
        }
    })
}

/// Micro-averaged score of `pred` against `gold`, records paired by id.
/// Gold records without a prediction count as empty predictions.
pub fn score_corpus(
    gold: &[AnnotatedRecord],
    pred: &[AnnotatedRecord],
    mode: MatchMode,
) -> Result<ScoreReport, MetricsError> {
    let mut by_id: HashMap<&str, &AnnotatedRecord> = HashMap::with_capacity(pred.len());
    for p in pred {
        if by_id.insert(p.id(), p).is_some() {
            return Err(MetricsError::DuplicateRecordId(p.id().to_string()));
        }
    }
    let mut gold_ids = HashSet::with_capacity(gold.len());
    for g in gold {
        if !gold_ids.insert(g.id()) {
            return Err(MetricsError::DuplicateRecordId(g.id().to_string()));
        }
    }
    if let Some(p) = pred.iter().find(|p| !gold_ids.contains(p.id())) {
        return Err(MetricsError::UnknownRecordId(p.id().to_string()));
    }

    let mut total = MatchCounts::default();
    for g in gold {
        let events = by_id.get(g.id()).map_or(&[][..], |p| p.events.as_slice());
        total = total + match_record(&g.events, events, mode, Some(&g.record))?;
    }
    Ok(ScoreReport::from_counts(mode, total))
}
