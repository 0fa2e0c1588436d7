//! Token-level automaton for the special-token output grammar.

use crate::event_model::{MedicalRecord, RESERVED_LITERALS};
use crate::linearizer::Literal;

use super::vocab::{TokenId, Vocabulary, EOS};
use super::DecodeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Start,
    InCore,
    InTendency,
    InCharacteristic,
    InAnatomy,
    Done,
}

/// What the current slot holds so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fill {
    Empty,
    Null,
    Content,
    AfterSeparator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrammarState {
    phase: Phase,
    fill: Fill,
    value: String,
    events_completed: usize,
}

impl Default for GrammarState {
    fn default() -> Self {
        GrammarState::new()
    }
}

impl GrammarState {
    pub fn new() -> Self {
        GrammarState {
            phase: Phase::Start,
            fill: Fill::Empty,
            value: String::new(),
            events_completed: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn fill(&self) -> Fill {
        self.fill
    }

    /// Text of the value being written in the current slot.
    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn events_completed(&self) -> usize {
        self.events_completed
    }

    /// True between events: at the start, or after a finished anatomy slot.
    pub fn at_event_boundary(&self) -> bool {
        match self.phase {
            Phase::Start => true,
            Phase::InAnatomy => matches!(self.fill, Fill::Null | Fill::Content),
            _ => false,
        }
    }

    /// State after emitting `token`, or `None` when the token breaks the
    /// event structure. Value-level restrictions are only in
    /// [`allowed_tokens`].
    pub fn advance(&self, vocab: &Vocabulary, token: TokenId) -> Option<GrammarState> {
        let mut next = self.clone();
        if token == vocab.eos() {
            if !self.at_event_boundary() {
                return None;
            }
            if self.phase == Phase::InAnatomy {
                next.events_completed += 1;
            }
            next.phase = Phase::Done;
            next.fill = Fill::Empty;
            next.value.clear();
            return Some(next);
        }
        if self.phase == Phase::Done {
            return None;
        }
        match vocab.literal_of(token) {
            Some(Literal::Ent) if self.at_event_boundary() => {
                if self.phase == Phase::InAnatomy {
                    next.events_completed += 1;
                }
                next.enter(Phase::InCore);
            }
            Some(Literal::Tendency) if self.phase == Phase::InCore && self.fill == Fill::Content => {
                next.enter(Phase::InTendency)
            }
            Some(Literal::Character) if self.phase == Phase::InTendency && self.slot_closed() => {
                next.enter(Phase::InCharacteristic)
            }
            Some(Literal::Anatomy) if self.phase == Phase::InCharacteristic && self.slot_closed() => {
                next.enter(Phase::InAnatomy)
            }
            Some(Literal::Null) if self.phase != Phase::InCore && self.in_slot() && self.fill == Fill::Empty => {
                next.fill = Fill::Null;
            }
            Some(Literal::Separator) if self.multi_valued() && self.fill == Fill::Content => {
                next.fill = Fill::AfterSeparator;
                next.value.clear();
            }
            Some(_) => return None,
            None if self.in_slot() && self.fill != Fill::Null => {
                next.value.push_str(vocab.token(token));
                next.fill = Fill::Content;
            }
            None => return None,
        }
        Some(next)
    }

    fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.fill = Fill::Empty;
        self.value.clear();
    }

    fn in_slot(&self) -> bool {
        !matches!(self.phase, Phase::Start | Phase::Done)
    }

    fn multi_valued(&self) -> bool {
        matches!(self.phase, Phase::InCharacteristic | Phase::InAnatomy)
    }

    fn slot_closed(&self) -> bool {
        matches!(self.fill, Fill::Null | Fill::Content)
    }
}

/// One flag per vocabulary id.
pub type TokenMask = Vec<bool>;

/// Whether `value` (a whole slot value) may still be written in `phase`.
fn value_admissible(
    phase: Phase,
    value: &str,
    vocab: &Vocabulary,
    source: &MedicalRecord,
    config: &DecodeConfig,
) -> bool {
    if vocab.token_set().find_in(value).is_some()
        || RESERVED_LITERALS.iter().any(|l| value.contains(l))
        || value.contains(EOS)
    {
        return false;
    }
    // Tendency values are labels ("yes", "negative"), not copied text.
    !config.copy_constraint || phase == Phase::InTendency || source.text.contains(value)
}

/// Tokens that keep the output inside the grammar from `state`.
///
/// A content token is admitted when the slot value it extends still
/// contains no reserved literal and, under the copy constraint, is still a
/// substring of the source text (tendency excepted). The core slot takes no
/// `<null>`, since an event without a core cannot be decoded. `<ent>` is
/// only offered when at least one content token can start a core.
pub fn allowed_tokens(
    state: &GrammarState,
    vocab: &Vocabulary,
    source: &MedicalRecord,
    config: &DecodeConfig,
) -> TokenMask {
    let mut mask = vec![false; vocab.len()];
    let phase = state.phase;
    let fill = state.fill;
    let mut allow = |lit: Literal| mask[vocab.special(lit)] = true;

    if state.at_event_boundary() {
        let core_possible = vocab
            .content_ids()
            .any(|id| value_admissible(Phase::InCore, vocab.token(id), vocab, source, config));
        if core_possible {
            allow(Literal::Ent);
        }
    }
    match phase {
        Phase::Start | Phase::Done => {}
        Phase::InCore => {
            if fill == Fill::Content {
                allow(Literal::Tendency);
            }
        }
        _ => {
            if fill == Fill::Empty {
                allow(Literal::Null);
            }
            if matches!(fill, Fill::Null | Fill::Content) {
                match phase {
                    Phase::InTendency => allow(Literal::Character),
                    Phase::InCharacteristic => allow(Literal::Anatomy),
                    _ => {}
                }
            }
            if fill == Fill::Content && phase != Phase::InTendency {
                allow(Literal::Separator);
            }
        }
    }
    if state.at_event_boundary() {
        mask[vocab.eos()] = true;
    }
    if state.in_slot() && fill != Fill::Null {
        let mut value = state.value.clone();
        let base = value.len();
        for id in vocab.content_ids() {
            value.truncate(base);
            value.push_str(vocab.token(id));
            mask[id] = value_admissible(phase, &value, vocab, source, config);
        }
    }
    mask
}
