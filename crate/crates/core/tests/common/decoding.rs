//! Toy vocabulary and random sources for decoder tests.

use medevent::decoder::Vocabulary;
use medevent::linearizer::TokenSet;
use medevent::{ClinicalEvent, MedicalRecord};
use rand::seq::SliceRandom;
use rand::Rng;

/// Content tokens of the 30-token toy vocabulary (EOS and 7 literals
/// make up the rest).
pub const CONTENT: [&str; 22] = [
    "a", "b", "c", "d", "e", "n", "t", "u", "l", "k", "p", "<", ">", "便", "血", "咳", "痰", " ", "ab", "cd", "yes",
    "no",
];

pub fn toy_vocab() -> Vocabulary {
    let v = Vocabulary::new(TokenSet::default(), CONTENT).unwrap();
    assert_eq!(v.len(), 30);
    v
}

pub fn random_source<R: Rng>(rng: &mut R) -> MedicalRecord {
    let len = rng.gen_range(1..20);
    let text: String = (0..len).map(|_| *CONTENT[..18].choose(rng).unwrap()).collect();
    MedicalRecord::new("r", format!("a{text}")).unwrap()
}

fn random_value<R: Rng>(rng: &mut R) -> String {
    let pool = ["a", "b", "c", "d", "便", "血", "ab", "yes", "no", " "];
    let n = rng.gen_range(1..4);
    let v: String = (0..n).map(|_| *pool.choose(rng).unwrap()).collect();
    if v.trim().is_empty() {
        "a".into()
    } else {
        v
    }
}

/// Up to three events spelled entirely in toy-vocabulary tokens.
pub fn random_events<R: Rng>(rng: &mut R) -> Vec<ClinicalEvent> {
    (0..rng.gen_range(0..4))
        .map(|_| {
            let mut b = ClinicalEvent::builder(random_value(rng));
            if rng.gen_bool(0.6) {
                b = b.tendency(random_value(rng));
            }
            for _ in 0..rng.gen_range(0..3) {
                b = b.characteristic(random_value(rng));
            }
            for _ in 0..rng.gen_range(0..3) {
                b = b.anatomy(random_value(rng));
            }
            b.build().unwrap()
        })
        .collect()
}
