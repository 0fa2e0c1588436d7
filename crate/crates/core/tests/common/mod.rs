//! Shared test support: independent reference scorers and random corpus
//! generators. Nothing here calls into `medevent::metrics`.

#![allow(dead_code)]

pub mod decoding;
pub mod oracle;

use medevent::{AnnotatedRecord, ClinicalEvent, MedicalRecord};
use rand::seq::SliceRandom;
use rand::Rng;

const CORES: [&str; 5] = ["stool", "cough", "ab", "a", "便"];
const TENDENCIES: [Option<&str>; 3] = [None, Some("yes"), Some("negative")];
const CHARS: [&str; 4] = ["white", "dark red", "sticky", "intermittent"];
const ANATS: [&str; 3] = ["rectum", "lung", "右肺"];
const FILLER: [&str; 4] = [" x ", "，", " and ", "无"];

/// A source sentence made of random fillers and core words, so that core
/// words repeat and overlap ("a" inside "ab").
pub fn random_text<R: Rng>(rng: &mut R) -> String {
    let parts = rng.gen_range(1..7);
    let mut text = String::from("s");
    for _ in 0..parts {
        text.push_str(FILLER.choose(rng).unwrap());
        text.push_str(CORES.choose(rng).unwrap());
    }
    text
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[&str], max: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max);
    let mut out: Vec<String> = Vec::new();
    for _ in 0..n {
        let v = pool.choose(rng).unwrap().to_string();
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn char_occurrences(text: &str, needle: &str) -> Vec<usize> {
    let t: Vec<char> = text.chars().collect();
    let n: Vec<char> = needle.chars().collect();
    (0..t.len().saturating_sub(n.len() - 1))
        .filter(|&i| t[i..].starts_with(&n))
        .collect()
}

/// A random normalized event whose core may carry a valid span into `text`.
pub fn random_event<R: Rng>(rng: &mut R, text: &str, with_spans: bool) -> ClinicalEvent {
    let core = *CORES.choose(rng).unwrap();
    let mut b = ClinicalEvent::builder(core)
        .maybe_tendency(TENDENCIES.choose(rng).unwrap().map(String::from))
        .characteristics(random_subset(rng, &CHARS, 3))
        .anatomies(random_subset(rng, &ANATS, 2));
    if with_spans && rng.gen_bool(0.4) {
        let occ = char_occurrences(text, core);
        if let Some(&start) = occ.choose(rng) {
            b = b.span(start, start + core.chars().count());
        }
    }
    b.build().unwrap()
}

/// Copy of `e` with one attribute perturbed.
pub fn perturb<R: Rng>(rng: &mut R, e: &ClinicalEvent, text: &str) -> ClinicalEvent {
    match rng.gen_range(0..4) {
        0 => random_event(rng, text, true),
        1 => ClinicalEvent::builder(e.core_name())
            .maybe_tendency(TENDENCIES.choose(rng).unwrap().map(String::from))
            .characteristics(e.characteristics().to_vec())
            .anatomies(e.anatomies().to_vec())
            .build()
            .unwrap(),
        2 => {
            let mut chars = e.characteristics().to_vec();
            chars.reverse();
            let mut b = ClinicalEvent::builder(e.core_name())
                .maybe_tendency(e.tendency().map(String::from))
                .characteristics(chars)
                .anatomies(random_subset(rng, &ANATS, 2));
            if let Some((s, t)) = e.core_span() {
                b = b.span(s, t);
            }
            b.build().unwrap()
        }
        _ => e.without_span(),
    }
}

/// Random gold/pred corpora with the same record ids: at most `max_records`
/// records, at most `max_events` events per side per record.
pub fn random_corpora<R: Rng>(
    rng: &mut R,
    max_records: usize,
    max_events: usize,
) -> (Vec<AnnotatedRecord>, Vec<AnnotatedRecord>) {
    let n = rng.gen_range(0..=max_records);
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for i in 0..n {
        let text = random_text(rng);
        let record = MedicalRecord::new(format!("r{i}"), text.clone()).unwrap();
        let g: Vec<ClinicalEvent> = (0..rng.gen_range(0..=max_events))
            .map(|_| random_event(rng, &text, true))
            .collect();
        let mut p: Vec<ClinicalEvent> = Vec::new();
        for e in &g {
            if rng.gen_bool(0.8) {
                p.push(if rng.gen_bool(0.5) {
                    e.clone()
                } else {
                    perturb(rng, e, &text)
                });
            }
        }
        while p.len() < max_events && rng.gen_bool(0.3) {
            p.push(random_event(rng, &text, true));
        }
        p.shuffle(rng);
        p.truncate(max_events);
        gold.push(AnnotatedRecord::new(record.clone(), g));
        pred.push(AnnotatedRecord::new(record, p));
    }
    (gold, pred)
}
