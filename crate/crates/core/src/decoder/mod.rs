//! Grammar-constrained beam search.
//!
//! Hypotheses only ever grow by tokens the output automaton admits, so a
//! hypothesis that ends with EOS always decodes without diagnostics. The
//! model side is the [`NextTokenScorer`] trait; only test scorers ship here.

mod beam;
mod grammar;
mod scorer;
mod vocab;

pub use beam::{beam_search, DecodeError, DecodeOutput};
pub use grammar::{allowed_tokens, Fill, GrammarState, Phase, TokenMask};
pub use scorer::{EchoScorer, NextTokenScorer, RandomScorer, REJECT};
pub use vocab::{TokenId, TokenizationError, VocabError, Vocabulary, EOS};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_width: usize,
    /// Upper bound on generated tokens, EOS included.
    pub max_output_len: usize,
    pub copy_constraint: bool,
    /// Rank finished hypotheses by mean instead of total log-score.
    pub length_normalization: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 3,
            max_output_len: 128,
            copy_constraint: false,
            length_normalization: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_width == 0 {
            return Err(DecodeError::InvalidConfig("beam width must be at least 1"));
        }
        if self.max_output_len == 0 {
            return Err(DecodeError::InvalidConfig("maximum output length must be at least 1"));
        }
        Ok(())
    }
}
