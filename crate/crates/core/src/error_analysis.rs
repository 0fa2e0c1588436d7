//! Diagnostics over predictions: how much generated text is absent from the
//! source sentence, and which kind of mistake each unmatched event is.
//!
//! Classification works on events left unmatched by whole-event matching.
//! Each such gold event gets one of
//!
//! * `RareCoreWordMissed`: its core word is rare in training (at most the
//!   rarity threshold) and no prediction carries that core word;
//! * `MergedEvents`: it shares a clause with another unmatched gold event
//!   and exactly one unmatched prediction took attributes from both;
//! * `VocabularyDrift`: an unmatched prediction's core word contains its
//!   core word or is contained in it;
//! * `Other`.
//!
//! Predictions not consumed by one of those reports are `Other` when they
//! share a core word or an attribute value with some gold event of the
//! record, `SpuriousEvent` otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{event_key, AnnotatedRecord, ClinicalEvent, Slot};
use crate::metrics::align_occurrences;
use crate::text;

pub const DEFAULT_RARITY_THRESHOLD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("gold record {gold:?} paired with prediction {pred:?}")]
    MisalignedRecords { gold: String, pred: String },
    #[error("prediction for unknown record id {0:?}")]
    UnknownRecordId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    RareCoreWordMissed,
    MergedEvents,
    VocabularyDrift,
    SpuriousEvent,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 5] = [
        ErrorCategory::RareCoreWordMissed,
        ErrorCategory::MergedEvents,
        ErrorCategory::VocabularyDrift,
        ErrorCategory::SpuriousEvent,
        ErrorCategory::Other,
    ];
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorReport {
    pub record_id: String,
    pub category: ErrorCategory,
    #[serde(rename = "gold")]
    pub gold_event: Option<ClinicalEvent>,
    #[serde(rename = "pred")]
    pub pred_event: Option<ClinicalEvent>,
    pub evidence: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NotInSourceStats {
    pub total_attribute_instances: usize,
    pub not_in_source: usize,
    pub rate: f64,
}

/// Share of predicted strings that do not occur in their source text.
/// Counted: every core name, characteristic and anatomy value. Tendency
/// values are labels rather than copied text and are left out.
pub fn not_in_source_rate(pred: &[AnnotatedRecord]) -> NotInSourceStats {
    let mut total = 0;
    let mut missing = 0;
    for r in pred {
        for e in &r.events {
            let values = std::iter::once(e.core_name())
                .chain(e.characteristics().iter().map(String::as_str))
                .chain(e.anatomies().iter().map(String::as_str));
            for v in values {
                total += 1;
                if !r.text().contains(v) {
                    missing += 1;
                }
            }
        }
    }
    NotInSourceStats {
        total_attribute_instances: total,
        not_in_source: missing,
        rate: if total == 0 { 0.0 } else { missing as f64 / total as f64 },
    }
}

fn attribute_values(e: &ClinicalEvent) -> BTreeSet<(Slot, &str)> {
    e.attribute_instances()
        .filter(|(slot, _)| *slot != Slot::Tendency)
        .collect()
}

fn drifted(a: &str, b: &str) -> bool {
    a != b && (a.contains(b) || b.contains(a))
}

/// Events of `all` not consumed by whole-event matching against `other`.
fn unmatched(all: &[ClinicalEvent], other: &[ClinicalEvent]) -> Vec<ClinicalEvent> {
    let mut budget: BTreeMap<_, usize> = BTreeMap::new();
    for e in other {
        *budget.entry(event_key(e)).or_insert(0) += 1;
    }
    let mut sorted: Vec<&ClinicalEvent> = all.iter().collect();
    sorted.sort_by_key(|e| (event_key(e), e.core_span()));
    let mut out = Vec::new();
    for e in sorted {
        match budget.get_mut(&event_key(e)) {
            Some(n) if *n > 0 => *n -= 1,
            _ => out.push(e.clone()),
        }
    }
    out
}

/// Clause of each gold event: where its core word is, else where its first
/// locatable attribute value is, else the only clause of a one-clause text.
fn gold_clauses(events: &[ClinicalEvent], source: &str) -> Vec<Option<usize>> {
    let clause = text::clause_ids(source);
    let single = text::non_blank_clause_count(source) == 1;
    let aligned = align_occurrences(events, source);
    events
        .iter()
        .zip(aligned)
        .map(|(e, at)| {
            at.or_else(|| {
                attribute_values(e)
                    .into_iter()
                    .filter_map(|(_, v)| text::occurrences(source, v).first().copied())
                    .min()
            })
            .and_then(|pos| clause.get(pos).copied())
            .or(if single { Some(0) } else { None })
        })
        .collect()
}

pub fn classify_errors(
    gold: &AnnotatedRecord,
    pred: &AnnotatedRecord,
    train_core_freq: &BTreeMap<String, usize>,
    rarity_threshold: usize,
) -> Result<Vec<ErrorReport>, AnalysisError> {
    if gold.id() != pred.id() {
        return Err(AnalysisError::MisalignedRecords {
            gold: gold.id().to_string(),
            pred: pred.id().to_string(),
        });
    }
    let id = gold.id().to_string();
    let ug = unmatched(&gold.events, &pred.events);
    let up = unmatched(&pred.events, &gold.events);
    let clauses = gold_clauses(&ug, gold.text());
    let gold_attrs: Vec<_> = ug.iter().map(attribute_values).collect();
    let pred_attrs: Vec<_> = up.iter().map(attribute_values).collect();

    // absorbed[p]: unmatched gold events whose attributes p shares.
    let absorbed: Vec<Vec<usize>> = pred_attrs
        .iter()
        .map(|pa| (0..ug.len()).filter(|&g| !pa.is_disjoint(&gold_attrs[g])).collect())
        .collect();
    let merge_partner = |g: usize| -> Option<usize> {
        let cl = clauses[g]?;
        let candidates: Vec<usize> = (0..up.len())
            .filter(|&p| absorbed[p].contains(&g) && absorbed[p].iter().any(|&o| o != g && clauses[o] == Some(cl)))
            .collect();
        match candidates[..] {
            [p] => Some(p),
            _ => None,
        }
    };

    let mut consumed = vec![false; up.len()];
    let mut reports = Vec::new();
    let mut report = |category, g: Option<&ClinicalEvent>, p: Option<&ClinicalEvent>, evidence: String| {
        reports.push(ErrorReport {
            record_id: id.clone(),
            category,
            gold_event: g.cloned(),
            pred_event: p.cloned(),
            evidence,
        });
    };

    for (g, ge) in ug.iter().enumerate() {
        let core = ge.core_name();
        let freq = train_core_freq.get(core).copied().unwrap_or(0);
        if freq <= rarity_threshold && pred.events.iter().all(|p| p.core_name() != core) {
            report(
                ErrorCategory::RareCoreWordMissed,
                Some(ge),
                None,
                format!("core word {core:?} seen {freq} time(s) in training and never predicted"),
            );
            continue;
        }
        if let Some(p) = merge_partner(g) {
            let attach = !consumed[p];
            consumed[p] = true;
            let others = absorbed[p].len() - 1;
            report(
                ErrorCategory::MergedEvents,
                Some(ge),
                attach.then_some(&up[p]),
                format!(
                    "prediction {:?} holds attributes of this event and {others} other gold event(s) in the same clause",
                    up[p].core_name()
                ),
            );
            continue;
        }
        if let Some(p) = (0..up.len()).find(|&p| !consumed[p] && drifted(core, up[p].core_name())) {
            consumed[p] = true;
            report(
                ErrorCategory::VocabularyDrift,
                Some(ge),
                Some(&up[p]),
                format!("predicted core word {:?} for gold {core:?}", up[p].core_name()),
            );
            continue;
        }
        let same_core = (0..up.len()).find(|&p| !consumed[p] && up[p].core_name() == core);
        if let Some(p) = same_core {
            consumed[p] = true;
        }
        report(
            ErrorCategory::Other,
            Some(ge),
            same_core.map(|p| &up[p]),
            match same_core {
                Some(_) => "core word found with different attributes".to_string(),
                None => "gold event not predicted".to_string(),
            },
        );
    }

    for (p, pe) in up.iter().enumerate() {
        if consumed[p] {
            continue;
        }
        let touches = gold.events.iter().any(|g| {
            g.core_name() == pe.core_name()
                || drifted(g.core_name(), pe.core_name())
                || !attribute_values(g).is_disjoint(&pred_attrs[p])
        });
        if touches {
            report(
                ErrorCategory::Other,
                None,
                Some(pe),
                "prediction overlaps a gold event without matching it".to_string(),
            );
        } else {
            report(
                ErrorCategory::SpuriousEvent,
                None,
                Some(pe),
                "prediction shares nothing with any gold event".to_string(),
            );
        }
    }
    Ok(reports)
}

/// Classify every record of `gold`, taking predictions by id; a record
/// without predictions counts as predicting nothing.
pub fn classify_corpus(
    gold: &[AnnotatedRecord],
    pred: &[AnnotatedRecord],
    train_core_freq: &BTreeMap<String, usize>,
    rarity_threshold: usize,
) -> Result<Vec<ErrorReport>, AnalysisError> {
    let by_id: BTreeMap<&str, &AnnotatedRecord> = pred.iter().map(|p| (p.id(), p)).collect();
    let gold_ids: BTreeSet<&str> = gold.iter().map(|g| g.id()).collect();
    if let Some(extra) = by_id.keys().find(|id| !gold_ids.contains(*id)) {
        return Err(AnalysisError::UnknownRecordId(extra.to_string()));
    }
    let mut out = Vec::new();
    for g in gold {
        let empty;
        let p = match by_id.get(g.id()) {
            Some(p) => *p,
            None => {
                empty = AnnotatedRecord::new(g.record.clone(), Vec::new());
                &empty
            }
        };
        out.extend(classify_errors(g, p, train_core_freq, rarity_threshold)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub total: usize,
    pub counts: BTreeMap<ErrorCategory, usize>,
    /// Share of `total` per category, in percent; 0 when there are no reports.
    pub percentages: BTreeMap<ErrorCategory, f64>,
}

pub fn error_summary(reports: &[ErrorReport]) -> ErrorSummary {
    let mut counts: BTreeMap<ErrorCategory, usize> = ErrorCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for r in reports {
        *counts.entry(r.category).or_insert(0) += 1;
    }
    let total = reports.len();
    let percentages = counts
        .iter()
        .map(|(&c, &n)| {
            (
                c,
                if total == 0 {
                    0.0
                } else {
                    100.0 * n as f64 / total as f64
                },
            )
        })
        .collect();
    ErrorSummary {
        total,
        counts,
        percentages,
    }
}

impl fmt::Display for ErrorSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>7} {:>8}", "category", "count", "percent")?;
        for (c, n) in &self.counts {
            writeln!(f, "{:<20} {:>7} {:>7.2}%", c.to_string(), n, self.percentages[c])?;
        }
        write!(f, "{:<20} {:>7}", "total", self.total)
    }
}

/// One JSON object per line: record_id, category, gold, pred, evidence.
pub fn write_reports<W: Write>(reports: &[ErrorReport], mut w: W) -> io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::MedicalRecord;

    fn ev(core: &str, chars: &[&str]) -> ClinicalEvent {
        ClinicalEvent::builder(core)
            .tendency("yes")
            .characteristics(chars.iter().copied())
            .build()
            .unwrap()
    }

    fn rec(text: &str, events: Vec<ClinicalEvent>) -> AnnotatedRecord {
        AnnotatedRecord::new(MedicalRecord::new("r", text).unwrap(), events)
    }

    fn categories(reports: &[ErrorReport]) -> Vec<ErrorCategory> {
        reports.iter().map(|r| r.category).collect()
    }

    #[test]
    fn not_in_source_counts_values_but_not_tendency() {
        let text = "intermittent coughing of dark red blood";
        let stats = not_in_source_rate(&[rec(text, vec![ev("blood", &["dark red", "sticky"])])]);
        assert_eq!(stats.total_attribute_instances, 3);
        assert_eq!(stats.not_in_source, 1);
        assert!((stats.rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(not_in_source_rate(&[]).rate, 0.0);
    }

    #[test]
    fn matched_events_produce_no_reports() {
        let g = rec("stool", vec![ev("stool", &[])]);
        let p = rec("stool", vec![ev("stool", &[])]);
        assert!(classify_errors(&g, &p, &BTreeMap::new(), 2).unwrap().is_empty());
    }

    #[test]
    fn rare_core_word() {
        let freq = BTreeMap::from([("right dominant coronary artery".to_string(), 1)]);
        let g = rec("coronary cta", vec![ev("right dominant coronary artery", &[])]);
        let p = rec("coronary cta", vec![]);
        let reports = classify_errors(&g, &p, &freq, 2).unwrap();
        assert_eq!(categories(&reports), [ErrorCategory::RareCoreWordMissed]);
        let reports = classify_errors(&g, &p, &freq, 0).unwrap();
        assert_eq!(categories(&reports), [ErrorCategory::Other]);
    }

    #[test]
    fn merged_events() {
        let text = "intermittent white phlegm, intermittent coughing of dark red blood";
        let g = rec(
            text,
            vec![
                ev("cough up phlegm", &["intermittent", "white", "sticky"]),
                ev("cough up blood", &["dark red", "intermittent"]),
            ],
        );
        let p = rec(
            text,
            vec![ev("cough up phlegm", &["dark red", "white", "sticky", "intermittent"])],
        );
        let freq = BTreeMap::from([("cough up phlegm".into(), 9), ("cough up blood".into(), 9)]);
        let reports = classify_errors(&g, &p, &freq, 2).unwrap();
        assert_eq!(categories(&reports), [ErrorCategory::MergedEvents; 2]);
        assert_eq!(reports.iter().filter(|r| r.pred_event.is_some()).count(), 1);
    }

    #[test]
    fn vocabulary_drift() {
        let g = rec("no white pottery stool", vec![ev("stool", &["white pottery stool"])]);
        let p = rec("no white pottery stool", vec![ev("stool characteristics", &[])]);
        let freq = BTreeMap::from([("stool".into(), 50)]);
        let reports = classify_errors(&g, &p, &freq, 2).unwrap();
        assert_eq!(categories(&reports), [ErrorCategory::VocabularyDrift]);
        assert!(reports[0].gold_event.is_some() && reports[0].pred_event.is_some());
    }

    #[test]
    fn spurious_and_overlapping_predictions() {
        let g = rec("stool and cough", vec![ev("stool", &["white"])]);
        let p = rec("stool and cough", vec![ev("cough", &[]), ev("fever", &["white"])]);
        let freq = BTreeMap::from([("stool".into(), 50)]);
        let mut cats = categories(&classify_errors(&g, &p, &freq, 2).unwrap());
        cats.sort();
        assert_eq!(
            cats,
            [ErrorCategory::SpuriousEvent, ErrorCategory::Other, ErrorCategory::Other]
        );
    }

    #[test]
    fn misaligned_ids_are_rejected() {
        let g = rec("x", vec![]);
        let p = AnnotatedRecord::new(MedicalRecord::new("other", "x").unwrap(), vec![]);
        assert!(matches!(
            classify_errors(&g, &p, &BTreeMap::new(), 2),
            Err(AnalysisError::MisalignedRecords { .. })
        ));
    }

    #[test]
    fn summary_counts_every_category() {
        assert_eq!(error_summary(&[]).counts.values().sum::<usize>(), 0);
        assert_eq!(error_summary(&[]).counts.len(), 5);
        let mk = |c| ErrorReport {
            record_id: "r".into(),
            category: c,
            gold_event: None,
            pred_event: None,
            evidence: String::new(),
        };
        let s = error_summary(&[
            mk(ErrorCategory::Other),
            mk(ErrorCategory::Other),
            mk(ErrorCategory::SpuriousEvent),
        ]);
        assert_eq!(s.counts[&ErrorCategory::Other], 2);
        assert_eq!(s.counts[&ErrorCategory::SpuriousEvent], 1);
        assert!((s.percentages[&ErrorCategory::Other] - 200.0 / 3.0).abs() < 1e-12);
        assert!(s.to_string().contains("SpuriousEvent"));
    }
}
