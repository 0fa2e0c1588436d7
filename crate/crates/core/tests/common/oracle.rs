//! Reference scorer written from the matching rules alone: every mode is
//! reduced to "which (gold, pred) pairs are compatible" and solved by
//! exhaustive maximum bipartite matching.

use std::collections::BTreeSet;

use medevent::{AnnotatedRecord, ClinicalEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    FullEvent,
    CoreWord,
    OtherAttributes,
    StrictPosition,
}

pub const ALL_MODES: [OracleMode; 4] = [
    OracleMode::FullEvent,
    OracleMode::CoreWord,
    OracleMode::OtherAttributes,
    OracleMode::StrictPosition,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Size of a maximum matching in the bipartite graph given by `compatible`,
/// found by trying every assignment of left vertices.
pub fn exhaustive_matching(n_left: usize, n_right: usize, compatible: &dyn Fn(usize, usize) -> bool) -> usize {
    fn go(i: usize, n_left: usize, n_right: usize, used: &mut Vec<bool>, c: &dyn Fn(usize, usize) -> bool) -> usize {
        if i == n_left {
            return 0;
        }
        // Leave i unmatched.
        let mut best = go(i + 1, n_left, n_right, used, c);
        for j in 0..n_right {
            if !used[j] && c(i, j) {
                used[j] = true;
                best = best.max(1 + go(i + 1, n_left, n_right, used, c));
                used[j] = false;
            }
        }
        best
    }
    go(0, n_left, n_right, &mut vec![false; n_right], compatible)
}

/// Maximum matching by augmenting paths; used where the exhaustive search
/// would be too slow (attribute instances).
pub fn augmenting_matching(n_left: usize, n_right: usize, compatible: &dyn Fn(usize, usize) -> bool) -> usize {
    fn augment(
        u: usize,
        n_right: usize,
        seen: &mut Vec<bool>,
        owner: &mut Vec<Option<usize>>,
        c: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        for v in 0..n_right {
            if c(u, v) && !seen[v] {
                seen[v] = true;
                if owner[v].is_none() || augment(owner[v].unwrap(), n_right, seen, owner, c) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    let mut size = 0;
    for u in 0..n_left {
        let mut seen = vec![false; n_right];
        if augment(u, n_right, &mut seen, &mut owner, compatible) {
            size += 1;
        }
    }
    size
}

fn as_set(values: &[String]) -> BTreeSet<&str> {
    values.iter().map(String::as_str).collect()
}

fn full_equal(a: &ClinicalEvent, b: &ClinicalEvent) -> bool {
    a.core_name() == b.core_name()
        && a.tendency().unwrap_or("") == b.tendency().unwrap_or("")
        && as_set(a.characteristics()) == as_set(b.characteristics())
        && as_set(a.anatomies()) == as_set(b.anatomies())
}

fn attribute_units(events: &[ClinicalEvent]) -> Vec<(u8, String)> {
    let mut out = Vec::new();
    for e in events {
        if let Some(t) = e.tendency() {
            out.push((1, t.to_string()));
        }
        for c in e.characteristics() {
            out.push((2, c.clone()));
        }
        for a in e.anatomies() {
            out.push((3, a.clone()));
        }
    }
    out
}

/// Non-overlapping left-to-right occurrences, over a char vector.
fn occurrence_starts(text: &[char], needle: &[char]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + needle.len() <= text.len() {
        if text[i..i + needle.len()] == *needle {
            out.push(i);
            i += needle.len();
        } else {
            i += 1;
        }
    }
    out
}

/// Occurrence claimed by each event: its span start when it has one,
/// otherwise the leftmost occurrence of its core word not claimed by a span
/// or by an earlier span-less event.
pub fn oracle_alignment(events: &[ClinicalEvent], text: &str) -> Vec<Option<usize>> {
    let chars: Vec<char> = text.chars().collect();
    let mut claimed: Vec<(String, usize)> = events
        .iter()
        .filter_map(|e| e.core_span().map(|(s, _)| (e.core_name().to_string(), s)))
        .collect();
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        if let Some((s, _)) = e.core_span() {
            out.push(Some(s));
            continue;
        }
        let needle: Vec<char> = e.core_name().chars().collect();
        let pick = occurrence_starts(&chars, &needle)
            .into_iter()
            .find(|&s| !claimed.iter().any(|(c, p)| c == e.core_name() && *p == s));
        if let Some(s) = pick {
            claimed.push((e.core_name().to_string(), s));
        }
        out.push(pick);
    }
    out
}

pub fn oracle_record(gold: &[ClinicalEvent], pred: &[ClinicalEvent], text: &str, mode: OracleMode) -> OracleCounts {
    let tp = match mode {
        OracleMode::FullEvent => exhaustive_matching(gold.len(), pred.len(), &|i, j| full_equal(&gold[i], &pred[j])),
        OracleMode::CoreWord => exhaustive_matching(gold.len(), pred.len(), &|i, j| {
            gold[i].core_name() == pred[j].core_name()
        }),
        OracleMode::OtherAttributes => {
            let g = attribute_units(gold);
            let p = attribute_units(pred);
            let tp = augmenting_matching(g.len(), p.len(), &|i, j| g[i] == p[j]);
            return OracleCounts {
                tp,
                fp: p.len() - tp,
                fn_: g.len() - tp,
            };
        }
        OracleMode::StrictPosition => {
            let ga = oracle_alignment(gold, text);
            let pa = oracle_alignment(pred, text);
            exhaustive_matching(gold.len(), pred.len(), &|i, j| {
                gold[i].core_name() == pred[j].core_name() && ga[i].is_some() && ga[i] == pa[j]
            })
        }
    };
    OracleCounts {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
    }
}

/// Best strict-position tp achievable if span-less predicted events could be
/// placed on any distinct occurrence of their core word.
pub fn optimal_strict_tp(gold: &[ClinicalEvent], pred: &[ClinicalEvent], text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let ga = oracle_alignment(gold, text);
    // Every predicted (event, occurrence) option; choose at most one option
    // per event and per (core, occurrence), maximizing compatible gold pairs.
    let options: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| match p.core_span() {
            Some((s, _)) => vec![s],
            None => occurrence_starts(&chars, &p.core_name().chars().collect::<Vec<_>>()),
        })
        .collect();
    fn go(
        j: usize,
        pred: &[ClinicalEvent],
        options: &[Vec<usize>],
        chosen: &mut Vec<Option<usize>>,
        gold: &[ClinicalEvent],
        ga: &[Option<usize>],
    ) -> usize {
        if j == pred.len() {
            return exhaustive_matching(gold.len(), pred.len(), &|g, p| {
                gold[g].core_name() == pred[p].core_name() && ga[g].is_some() && ga[g] == chosen[p]
            });
        }
        chosen.push(None);
        let mut best = go(j + 1, pred, options, chosen, gold, ga);
        chosen.pop();
        for &o in &options[j] {
            let taken = pred[j].core_span().is_none()
                && (0..j).any(|k| {
                    pred[k].core_span().is_none() && chosen[k] == Some(o) && pred[k].core_name() == pred[j].core_name()
                });
            if !taken {
                chosen.push(Some(o));
                best = best.max(go(j + 1, pred, options, chosen, gold, ga));
                chosen.pop();
            }
        }
        best
    }
    go(0, pred, &options, &mut Vec::new(), gold, &ga)
}

/// Micro-averaged counts over aligned corpora (pred looked up by id).
pub fn oracle_corpus(gold: &[AnnotatedRecord], pred: &[AnnotatedRecord], mode: OracleMode) -> OracleCounts {
    let mut total = OracleCounts::default();
    for g in gold {
        let p = pred
            .iter()
            .find(|p| p.record.id == g.record.id)
            .map(|p| p.events.as_slice())
            .unwrap_or(&[]);
        let c = oracle_record(&g.events, p, &g.record.text, mode);
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn_ += c.fn_;
    }
    total
}

/// Precision, recall and F1 straight from the textbook formulas.
pub fn oracle_prf(c: OracleCounts) -> (f64, f64, f64) {
    let p = if c.tp + c.fp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    let r = if c.tp + c.fn_ == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}
