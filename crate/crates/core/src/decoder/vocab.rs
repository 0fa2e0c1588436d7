use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::event_model::RESERVED_LITERALS;
use crate::linearizer::{LinearizeError, Linearizer, Literal, Piece, TokenSet};

pub type TokenId = usize;

/// Surface form of the end-of-sequence token. It never appears in
/// detokenized text.
pub const EOS: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error(transparent)]
    TokenSet(#[from] LinearizeError),
    #[error("content token is empty")]
    EmptyToken,
    #[error("content token {token:?} contains the reserved literal {literal:?}")]
    ContainsLiteral { token: String, literal: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot tokenize {fragment:?} at character {position}")]
pub struct TokenizationError {
    pub position: usize,
    pub fragment: String,
}

/// Dense token table: id 0 is [`EOS`], ids 1..=7 are the literals of the
/// token set in [`Literal::ALL`] order, content tokens follow.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    linearizer: Linearizer,
    max_content_chars: usize,
}

const FIRST_CONTENT: TokenId = 1 + Literal::ALL.len();

impl Vocabulary {
    /// Content tokens are deduplicated keeping first-seen order.
    pub fn new<I, S>(token_set: TokenSet, content: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let linearizer = Linearizer::new(token_set)?;
        let mut tokens = vec![EOS.to_string()];
        tokens.extend(Literal::ALL.iter().map(|&l| linearizer.tokens().get(l).to_string()));
        let mut index: HashMap<String, TokenId> = tokens.iter().cloned().zip(0..).collect();
        let mut max_content_chars = 0;
        for tok in content {
            let tok: String = tok.into();
            if tok.is_empty() {
                return Err(VocabError::EmptyToken);
            }
            let reserved = linearizer
                .tokens()
                .find_in(&tok)
                .or_else(|| RESERVED_LITERALS.iter().copied().find(|l| tok.contains(l)))
                .or_else(|| tok.contains(EOS).then_some(EOS));
            if let Some(literal) = reserved {
                return Err(VocabError::ContainsLiteral {
                    literal: literal.to_string(),
                    token: tok,
                });
            }
            if index.contains_key(&tok) {
                continue;
            }
            max_content_chars = max_content_chars.max(tok.chars().count());
            index.insert(tok.clone(), tokens.len());
            tokens.push(tok);
        }
        Ok(Vocabulary {
            tokens,
            index,
            linearizer,
            max_content_chars,
        })
    }

    /// One content token per distinct character of `texts`, in sorted order.
    pub fn from_chars<'a>(token_set: TokenSet, texts: impl IntoIterator<Item = &'a str>) -> Result<Self, VocabError> {
        let chars: BTreeSet<char> = texts.into_iter().flat_map(str::chars).collect();
        Self::new(token_set, chars.into_iter().map(String::from))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id]
    }

    pub fn id(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn eos(&self) -> TokenId {
        0
    }

    pub fn special(&self, lit: Literal) -> TokenId {
        1 + Literal::ALL
            .iter()
            .position(|&l| l == lit)
            .expect("every literal is listed")
    }

    pub fn literal_of(&self, id: TokenId) -> Option<Literal> {
        (1..FIRST_CONTENT).contains(&id).then(|| Literal::ALL[id - 1])
    }

    pub fn is_content(&self, id: TokenId) -> bool {
        id >= FIRST_CONTENT && id < self.tokens.len()
    }

    pub fn content_ids(&self) -> std::ops::Range<TokenId> {
        FIRST_CONTENT..self.tokens.len()
    }

    pub fn token_set(&self) -> &TokenSet {
        self.linearizer.tokens()
    }

    pub fn linearizer(&self) -> &Linearizer {
        &self.linearizer
    }

    /// Literals are cut out first; each stretch of text between them is
    /// covered with the fewest content tokens.
    pub fn tokenize(&self, s: &str) -> Result<Vec<TokenId>, TokenizationError> {
        let mut out = Vec::new();
        for piece in self.linearizer.lex(s) {
            match piece {
                Piece::Token { lit, .. } => out.push(self.special(lit)),
                Piece::Text { start, text } => out.extend(self.cover(start, text)?),
            }
        }
        Ok(out)
    }

    fn cover(&self, offset: usize, text: &str) -> Result<Vec<TokenId>, TokenizationError> {
        let bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).chain([text.len()]).collect();
        let n = bounds.len() - 1;
        // best[i]: fewest tokens covering chars i..n, with the first token's id.
        let mut best: Vec<Option<(usize, TokenId, usize)>> = vec![None; n + 1];
        best[n] = Some((0, 0, n));
        for i in (0..n).rev() {
            for len in 1..=self.max_content_chars.min(n - i) {
                let Some(id) = self.id(&text[bounds[i]..bounds[i + len]]) else {
                    continue;
                };
                if let Some((cost, _, _)) = best[i + len] {
                    if best[i].is_none_or(|(c, _, _)| cost + 1 < c) {
                        best[i] = Some((cost + 1, id, i + len));
                    }
                }
            }
        }
        if best[0].is_none() {
            let stuck = self.furthest_reachable(text, &bounds);
            return Err(TokenizationError {
                position: offset + stuck,
                fragment: text[bounds[stuck]..].chars().take(8).collect(),
            });
        }
        let mut ids = Vec::new();
        let mut i = 0;
        while let Some((_, id, next)) = best[i].filter(|_| i < n) {
            ids.push(id);
            i = next;
        }
        Ok(ids)
    }

    /// Last character index that some sequence of tokens reaches from 0.
    fn furthest_reachable(&self, text: &str, bounds: &[usize]) -> usize {
        let n = bounds.len() - 1;
        let mut reach = vec![false; n + 1];
        reach[0] = true;
        let mut furthest = 0;
        for i in 0..n {
            if !reach[i] {
                continue;
            }
            furthest = i;
            for len in 1..=self.max_content_chars.min(n - i) {
                if self.index.contains_key(&text[bounds[i]..bounds[i + len]]) {
                    reach[i + len] = true;
                }
            }
        }
        furthest
    }

    /// Concatenate surface forms, skipping [`EOS`].
    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&id| id != self.eos())
            .map(|&id| self.token(id))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new(TokenSet::default(), ["a", "b", "ab", "c", "<", "e"]).unwrap()
    }

    #[test]
    fn layout_is_eos_then_literals_then_content() {
        let v = vocab();
        assert_eq!(v.token(0), EOS);
        assert_eq!(v.token(1), "<ent>");
        assert_eq!(v.special(Literal::BaselineSep), 7);
        assert_eq!(v.literal_of(2), Some(Literal::Tendency));
        assert_eq!(v.literal_of(8), None);
        assert!(v.is_content(8));
        assert_eq!(v.len(), 14);
    }

    #[test]
    fn content_may_not_hide_a_literal() {
        let err = Vocabulary::new(TokenSet::default(), ["x<null>"]).unwrap_err();
        assert!(matches!(err, VocabError::ContainsLiteral { .. }));
        assert!(Vocabulary::new(TokenSet::default(), [""]).is_err());
    }

    #[test]
    fn tokenize_prefers_fewest_tokens_and_inverts() {
        let v = vocab();
        let s = "<ent>abc<tendency><null><character>a<unk>b<anatomy><null>";
        let ids = v.tokenize(s).unwrap();
        assert_eq!(v.detokenize(&ids), s);
        assert_eq!(ids[1], v.id("ab").unwrap());
        assert_eq!(v.tokenize("<e").unwrap().len(), 2);
    }

    #[test]
    fn unknown_characters_are_reported_with_position() {
        let err = vocab().tokenize("<ent>abz").unwrap_err();
        assert_eq!(err.position, 7);
        assert_eq!(err.fragment, "z");
    }

    #[test]
    fn from_chars_is_sorted_and_deduplicated() {
        let v = Vocabulary::from_chars(TokenSet::default(), ["ba", "ab"]).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v.token(8), "a");
        assert_eq!(v.detokenize(&[8, 9, 0]), "ab");
    }
}
