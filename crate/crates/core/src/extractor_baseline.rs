//! Lexicon-and-rules event extractor.
//!
//! Core terms are matched leftmost-longest without overlap and each match
//! becomes one event. A negation cue shortly before a core term makes the
//! tendency "negative", otherwise it is "yes". Characteristic and anatomy
//! terms attach to the nearest core term in the same clause.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{ClinicalEvent, MedicalRecord, RESERVED_LITERALS};
use crate::text;

pub const NEGATIVE: &str = "negative";
pub const AFFIRMED: &str = "yes";

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("lexicon has no core terms")]
    EmptyLexicon,
    #[error("lexicon contains an empty term")]
    EmptyTerm,
    #[error("lexicon term {0:?} has surrounding whitespace")]
    UntrimmedTerm(String),
    #[error("lexicon term {term:?} contains the reserved literal {literal:?}")]
    ReservedTerm { term: String, literal: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    #[serde(default)]
    pub core_terms: BTreeSet<String>,
    #[serde(default)]
    pub anatomy_terms: BTreeSet<String>,
    #[serde(default)]
    pub negation_cues: BTreeSet<String>,
    #[serde(default)]
    pub characteristic_terms: BTreeSet<String>,
}

impl Lexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExtractError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let raw = fs::read_to_string(path).map_err(|source| ExtractError::Io {
            path: shown.clone(),
            source,
        })?;
        let lexicon: Lexicon =
            serde_json::from_str(&raw).map_err(|source| ExtractError::Parse { path: shown, source })?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    /// Only the core terms are required; the other sets may be empty.
    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.core_terms.is_empty() {
            return Err(ExtractError::EmptyLexicon);
        }
        for term in self.all_terms() {
            if term.is_empty() {
                return Err(ExtractError::EmptyTerm);
            }
            if term.trim() != term {
                return Err(ExtractError::UntrimmedTerm(term.clone()));
            }
            if let Some(lit) = RESERVED_LITERALS.iter().find(|l| term.contains(*l)) {
                return Err(ExtractError::ReservedTerm {
                    term: term.clone(),
                    literal: lit.to_string(),
                });
            }
        }
        Ok(())
    }

    fn all_terms(&self) -> impl Iterator<Item = &String> {
        self.core_terms
            .iter()
            .chain(&self.anatomy_terms)
            .chain(&self.negation_cues)
            .chain(&self.characteristic_terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    /// Most characters allowed between a negation cue and its core term,
    /// not counting characters covered by attribute terms.
    pub negation_window: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig { negation_window: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Characteristic,
    Anatomy,
}

#[derive(Debug, Clone, Copy)]
struct Match {
    start: usize,
    end: usize,
}

/// Leftmost-longest, non-overlapping matches of `terms` over `chars`,
/// skipping positions where `blocked` is set.
fn scan<'t>(chars: &[char], terms: impl IntoIterator<Item = &'t String>, blocked: &[bool]) -> Vec<Match> {
    let terms: Vec<Vec<char>> = terms.into_iter().map(|t| t.chars().collect()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let best = terms
            .iter()
            .filter(|t| {
                i + t.len() <= chars.len() && chars[i..i + t.len()] == t[..] && !blocked[i..i + t.len()].contains(&true)
            })
            .map(Vec::len)
            .max();
        match best {
            Some(len) => {
                out.push(Match { start: i, end: i + len });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

fn mark(covered: &mut [bool], m: &Match) {
    covered[m.start..m.end].iter_mut().for_each(|c| *c = true);
}

fn distance(a: &Match, b: &Match) -> usize {
    if a.end <= b.start {
        b.start - a.end
    } else {
        a.start.saturating_sub(b.end)
    }
}

pub fn rule_extract(record: &MedicalRecord, lexicon: &Lexicon) -> Result<Vec<ClinicalEvent>, ExtractError> {
    rule_extract_with(record, lexicon, &ExtractorConfig::default())
}

pub fn rule_extract_with(
    record: &MedicalRecord,
    lexicon: &Lexicon,
    config: &ExtractorConfig,
) -> Result<Vec<ClinicalEvent>, ExtractError> {
    lexicon.validate()?;
    let chars: Vec<char> = record.text.chars().collect();
    let clause = text::clause_ids(&record.text);
    let free = vec![false; chars.len()];

    let cores = scan(&chars, &lexicon.core_terms, &free);
    let mut covered = free.clone();
    cores.iter().for_each(|m| mark(&mut covered, m));

    let attr_terms = lexicon
        .characteristic_terms
        .iter()
        .map(|t| (t, Kind::Characteristic))
        .chain(lexicon.anatomy_terms.iter().map(|t| (t, Kind::Anatomy)));
    // A term listed under both kinds counts as a characteristic.
    let mut kind_of: BTreeMap<&str, Kind> = BTreeMap::new();
    for (t, k) in attr_terms {
        kind_of.entry(t.as_str()).or_insert(k);
    }
    let attr_list: Vec<String> = kind_of.keys().map(|s| s.to_string()).collect();
    let attrs = scan(&chars, &attr_list, &covered);
    attrs.iter().for_each(|m| mark(&mut covered, m));
    let mut attribute_covered = free.clone();
    attrs.iter().for_each(|m| mark(&mut attribute_covered, m));

    let cues = scan(&chars, &lexicon.negation_cues, &covered);

    let surface = |m: &Match| -> String { chars[m.start..m.end].iter().collect() };

    let mut characteristics: Vec<Vec<String>> = vec![Vec::new(); cores.len()];
    let mut anatomies: Vec<Vec<String>> = vec![Vec::new(); cores.len()];
    for a in &attrs {
        let nearest = cores
            .iter()
            .enumerate()
            .filter(|(_, c)| clause[c.start] == clause[a.start])
            .min_by_key(|(k, c)| (distance(a, c), *k));
        let Some((k, _)) = nearest else { continue };
        let value = surface(a);
        let slot = match kind_of[value.as_str()] {
            Kind::Characteristic => &mut characteristics[k],
            Kind::Anatomy => &mut anatomies[k],
        };
        if !slot.contains(&value) {
            slot.push(value);
        }
    }

    let negated = |core: &Match| {
        cues.iter().any(|cue| {
            cue.end <= core.start
                && clause[cue.start] == clause[core.start]
                && (cue.end..core.start).filter(|&i| !attribute_covered[i]).count() <= config.negation_window
        })
    };

    let events = cores
        .iter()
        .enumerate()
        .map(|(k, m)| {
            ClinicalEvent::builder(surface(m))
                .tendency(if negated(m) { NEGATIVE } else { AFFIRMED })
                .characteristics(std::mem::take(&mut characteristics[k]))
                .anatomies(std::mem::take(&mut anatomies[k]))
                .span(m.start, m.end)
                .build()
                .expect("lexicon terms are validated")
        })
        .collect();
    Ok(events)
}
