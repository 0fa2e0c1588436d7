use std::cmp::Ordering;

use thiserror::Error;

use crate::event_model::MedicalRecord;

use super::grammar::{allowed_tokens, GrammarState, Phase};
use super::scorer::NextTokenScorer;
use super::vocab::{TokenId, Vocabulary};
use super::DecodeConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("invalid decode configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("scorer returned {found} scores for a vocabulary of {expected}")]
    ScoreLength { expected: usize, found: usize },
    #[error("scorer returned a non-finite score for token {token}")]
    NonFiniteScore { token: TokenId },
    #[error("grammar mask left no hypothesis to extend")]
    NoHypothesis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Detokenized output, without EOS.
    pub text: String,
    /// Generated ids; ends with EOS unless `truncated`.
    pub tokens: Vec<TokenId>,
    /// Sum of log-scores, or their mean with length normalization.
    pub score: f64,
    /// The returned hypothesis hit the length limit before EOS.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    tokens: Vec<TokenId>,
    state: GrammarState,
    score: f64,
}

/// Higher score first; equal scores go to the lexicographically lower ids.
fn rank(a: &Hypothesis, a_score: f64, b: &Hypothesis, b_score: f64) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a.tokens.cmp(&b.tokens))
}

fn final_score(h: &Hypothesis, config: &DecodeConfig) -> f64 {
    if config.length_normalization && !h.tokens.is_empty() {
        h.score / h.tokens.len() as f64
    } else {
        h.score
    }
}

fn checked_scores<S: NextTokenScorer>(
    scorer: &S,
    prefix: &[TokenId],
    source: &MedicalRecord,
    vocab: &Vocabulary,
) -> Result<Vec<f64>, DecodeError> {
    let scores = scorer.score(prefix, source);
    if scores.len() != vocab.len() {
        return Err(DecodeError::ScoreLength {
            expected: vocab.len(),
            found: scores.len(),
        });
    }
    if let Some(token) = scores.iter().position(|s| !s.is_finite()) {
        return Err(DecodeError::NonFiniteScore { token });
    }
    Ok(scores)
}

/// Beam search keeping `beam_width` hypotheses per step.
///
/// Finished hypotheses compete for beam slots with live ones and leave the
/// beam once chosen. The result is the best hypothesis overall; when that
/// one was cut off by `max_output_len` instead of reaching EOS, the output is
/// flagged as truncated.
pub fn beam_search<S: NextTokenScorer>(
    scorer: &S,
    source: &MedicalRecord,
    vocab: &Vocabulary,
    config: &DecodeConfig,
) -> Result<DecodeOutput, DecodeError> {
    config.validate()?;
    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        state: GrammarState::new(),
        score: 0.0,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..config.max_output_len {
        if live.is_empty() {
            break;
        }
        let mut candidates = Vec::new();
        for h in &live {
            let scores = checked_scores(scorer, &h.tokens, source, vocab)?;
            let mask = allowed_tokens(&h.state, vocab, source, config);
            for (id, _) in mask.iter().enumerate().filter(|(_, &ok)| ok) {
                let state = h
                    .state
                    .advance(vocab, id)
                    .expect("every masked-in token has a transition");
                let mut tokens = h.tokens.clone();
                tokens.push(id);
                candidates.push(Hypothesis {
                    tokens,
                    state,
                    score: h.score + scores[id],
                });
            }
        }
        if candidates.is_empty() {
            return Err(DecodeError::NoHypothesis);
        }
        candidates.sort_by(|a, b| rank(a, a.score, b, b.score));
        candidates.truncate(config.beam_width);
        live.clear();
        for c in candidates {
            if c.state.phase() == Phase::Done {
                finished.push(c);
            } else {
                live.push(c);
            }
        }
    }

    // Anything still live here stopped at the length limit.
    let best = finished
        .into_iter()
        .chain(live)
        .min_by(|a, b| rank(a, final_score(a, config), b, final_score(b, config)))
        .ok_or(DecodeError::NoHypothesis)?;
    let truncated = best.state.phase() != Phase::Done;
    Ok(DecodeOutput {
        text: vocab.detokenize(&best.tokens),
        score: final_score(&best, config),
        tokens: best.tokens,
        truncated,
    })
}
