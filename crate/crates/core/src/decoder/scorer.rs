use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::event_model::MedicalRecord;

use super::vocab::{TokenId, TokenizationError, Vocabulary};

/// Source of next-token log-scores; the slot where a trained model plugs in.
///
/// `score` must return one finite value per vocabulary id.
pub trait NextTokenScorer {
    fn score(&self, prefix: &[TokenId], source: &MedicalRecord) -> Vec<f64>;
}

impl<S: NextTokenScorer + ?Sized> NextTokenScorer for &S {
    fn score(&self, prefix: &[TokenId], source: &MedicalRecord) -> Vec<f64> {
        (**self).score(prefix, source)
    }
}

/// Score given to every token the echo scorer does not want.
pub const REJECT: f64 = -1e9;

/// Wants exactly one token sequence: 0 for the next target token, [`REJECT`]
/// elsewhere. Once the prefix is the whole target, or has left it, EOS gets 0.
#[derive(Debug, Clone)]
pub struct EchoScorer {
    target: Vec<TokenId>,
    vocab_len: usize,
    eos: TokenId,
}

impl EchoScorer {
    pub fn new(target: &str, vocab: &Vocabulary) -> Result<Self, TokenizationError> {
        Ok(EchoScorer {
            target: vocab.tokenize(target)?,
            vocab_len: vocab.len(),
            eos: vocab.eos(),
        })
    }

    pub fn target(&self) -> &[TokenId] {
        &self.target
    }
}

impl NextTokenScorer for EchoScorer {
    fn score(&self, prefix: &[TokenId], _source: &MedicalRecord) -> Vec<f64> {
        let mut scores = vec![REJECT; self.vocab_len];
        let on_track = self.target.starts_with(prefix);
        match self.target.get(prefix.len()) {
            Some(&next) if on_track => scores[next] = 0.0,
            _ => scores[self.eos] = 0.0,
        }
        scores
    }
}

/// Pseudo-random scores in `(-1, 0]`, a pure function of the seed and the
/// prefix. EOS is rejected until the prefix has `min_len` tokens, and
/// content tokens can be made more expensive with `content_penalty`, which
/// keeps generated values short.
#[derive(Debug, Clone)]
pub struct RandomScorer {
    seed: u64,
    vocab_len: usize,
    eos: TokenId,
    first_content: TokenId,
    min_len: usize,
    content_penalty: f64,
}

impl RandomScorer {
    pub fn new(seed: u64, vocab: &Vocabulary) -> Self {
        RandomScorer {
            seed,
            vocab_len: vocab.len(),
            eos: vocab.eos(),
            first_content: vocab.content_ids().start,
            min_len: 0,
            content_penalty: 0.0,
        }
    }

    pub fn min_len(mut self, min_len: usize) -> Self {
        self.min_len = min_len;
        self
    }

    pub fn content_penalty(mut self, penalty: f64) -> Self {
        self.content_penalty = penalty;
        self
    }

    fn prefix_seed(&self, prefix: &[TokenId]) -> u64 {
        // splitmix64 over the prefix.
        let mut h = self.seed;
        for &t in prefix.iter().chain(std::iter::once(&usize::MAX)) {
            h = h.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64);
            let mut z = h;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            h = z ^ (z >> 31);
        }
        h
    }
}

impl NextTokenScorer for RandomScorer {
    fn score(&self, prefix: &[TokenId], _source: &MedicalRecord) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.prefix_seed(prefix));
        let mut scores: Vec<f64> = (0..self.vocab_len).map(|_| -rng.gen::<f64>()).collect();
        for s in &mut scores[self.first_content..] {
            *s -= self.content_penalty;
        }
        if prefix.len() < self.min_len {
            scores[self.eos] = REJECT;
        }
        scores
    }
}
