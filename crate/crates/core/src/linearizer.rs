//! Conversion between event lists and flat target strings.
//!
//! Two formats are supported. The special-token format marks every slot with
//! its own literal and is self-delimiting:
//!
//! ```text
//! output := event* ;
//! event  := "<ent>" value "<tendency>" svalue "<character>" mvalue "<anatomy>" mvalue ;
//! svalue := "<null>" | value ;
//! mvalue := "<null>" | value ("<unk>" value)* ;
//! ```
//!
//! The baseline format writes the same attribute sequence with a single
//! `<p>` separator everywhere, which makes multi-valued slots ambiguous on
//! the way back.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{ClinicalEvent, EventError, Slot};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearizeError {
    #[error("invalid event: {0}")]
    InvalidEvent(#[from] EventError),
    #[error("token set is ambiguous: {0:?} and {1:?}")]
    AmbiguousTokenSet(String, String),
    #[error("token literal is empty")]
    EmptyToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Baseline,
    #[default]
    SpecialToken,
}

/// The literals of the output alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    pub ent: String,
    pub tendency: String,
    pub character: String,
    pub anatomy: String,
    pub separator: String,
    pub null_tag: String,
    pub baseline_sep: String,
}

impl Default for TokenSet {
    fn default() -> Self {
        TokenSet {
            ent: "<ent>".into(),
            tendency: "<tendency>".into(),
            character: "<character>".into(),
            anatomy: "<anatomy>".into(),
            separator: "<unk>".into(),
            null_tag: "<null>".into(),
            baseline_sep: "<p>".into(),
        }
    }
}

/// Which literal of a [`TokenSet`] a piece of text is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Literal {
    Ent,
    Tendency,
    Character,
    Anatomy,
    Separator,
    Null,
    BaselineSep,
}

impl Literal {
    pub const ALL: [Literal; 7] = [
        Literal::Ent,
        Literal::Tendency,
        Literal::Character,
        Literal::Anatomy,
        Literal::Separator,
        Literal::Null,
        Literal::BaselineSep,
    ];

    /// The slot this literal opens, if it is a slot marker.
    pub fn slot(self) -> Option<Slot> {
        match self {
            Literal::Ent => Some(Slot::Core),
            Literal::Tendency => Some(Slot::Tendency),
            Literal::Character => Some(Slot::Characteristic),
            Literal::Anatomy => Some(Slot::Anatomy),
            _ => None,
        }
    }
}

impl TokenSet {
    pub fn get(&self, lit: Literal) -> &str {
        match lit {
            Literal::Ent => &self.ent,
            Literal::Tendency => &self.tendency,
            Literal::Character => &self.character,
            Literal::Anatomy => &self.anatomy,
            Literal::Separator => &self.separator,
            Literal::Null => &self.null_tag,
            Literal::BaselineSep => &self.baseline_sep,
        }
    }

    pub fn slot_token(&self, slot: Slot) -> &str {
        self.get(slot_literal(slot))
    }

    pub fn literals(&self) -> impl Iterator<Item = (Literal, &str)> {
        Literal::ALL.into_iter().map(move |l| (l, self.get(l)))
    }

    /// Literals must be non-empty, pairwise distinct and none may contain
    /// another, so that scanning never has to choose between two matches.
    pub fn validate(&self) -> Result<(), LinearizeError> {
        for (i, (_, a)) in self.literals().enumerate() {
            if a.is_empty() {
                return Err(LinearizeError::EmptyToken);
            }
            for (_, b) in self.literals().skip(i + 1) {
                if a.contains(b) || b.contains(a) {
                    return Err(LinearizeError::AmbiguousTokenSet(a.into(), b.into()));
                }
            }
        }
        Ok(())
    }

    /// The literal starting exactly at the beginning of `s`, if any.
    pub fn match_prefix(&self, s: &str) -> Option<Literal> {
        self.literals().find(|(_, lit)| s.starts_with(lit)).map(|(l, _)| l)
    }

    /// First literal contained anywhere in `value`.
    pub fn find_in(&self, value: &str) -> Option<&str> {
        self.literals().map(|(_, l)| l).find(|l| value.contains(l))
    }
}

fn slot_literal(slot: Slot) -> Literal {
    match slot {
        Slot::Core => Literal::Ent,
        Slot::Tendency => Literal::Tendency,
        Slot::Characteristic => Literal::Character,
        Slot::Anatomy => Literal::Anatomy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    MissingSlot,
    UnexpectedToken,
    EmptyAttribute,
    TrailingGarbage,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A problem found while decoding a linearized string. `position` and
/// `length` are code-point offsets into that string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub position: usize,
    pub length: usize,
    pub kind: DiagnosticKind,
    pub slot: Option<Slot>,
    pub message: String,
}

impl ParseDiagnostic {
    fn new(kind: DiagnosticKind, position: usize, length: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            position,
            length,
            kind,
            slot: None,
            message: message.into(),
        }
    }

    fn for_slot(mut self, slot: Slot) -> Self {
        self.slot = Some(slot);
        self
    }
}

/// Lexed unit of a linearized string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece<'a> {
    Text { start: usize, text: &'a str },
    Token { start: usize, lit: Literal, len: usize },
}

impl Piece<'_> {
    fn start(&self) -> usize {
        match self {
            Piece::Text { start, .. } | Piece::Token { start, .. } => *start,
        }
    }

    fn char_len(&self) -> usize {
        match self {
            Piece::Text { text, .. } => text::char_len(text),
            Piece::Token { len, .. } => *len,
        }
    }

    fn literal(&self) -> Option<Literal> {
        match self {
            Piece::Token { lit, .. } => Some(*lit),
            Piece::Text { .. } => None,
        }
    }

    fn is_slot_marker(&self) -> bool {
        self.literal().and_then(Literal::slot).is_some()
    }
}

/// One `<p>`-delimited field of a baseline string.
struct Field {
    start: usize,
    end: usize,
    value: Option<String>,
}

/// Encoder/decoder bound to one token set.
#[derive(Debug, Clone, Default)]
pub struct Linearizer {
    tokens: TokenSet,
}

impl Linearizer {
    pub fn new(tokens: TokenSet) -> Result<Self, LinearizeError> {
        tokens.validate()?;
        Ok(Linearizer { tokens })
    }

    pub fn tokens(&self) -> &TokenSet {
        &self.tokens
    }

    pub fn encode(&self, events: &[ClinicalEvent], format: OutputFormat) -> Result<String, LinearizeError> {
        for e in events {
            self.check_values(e)?;
        }
        let t = &self.tokens;
        let mut out = String::new();
        match format {
            OutputFormat::SpecialToken => {
                for e in events {
                    out.push_str(&t.ent);
                    out.push_str(e.core_name());
                    out.push_str(&t.tendency);
                    out.push_str(e.tendency().unwrap_or(&t.null_tag));
                    out.push_str(&t.character);
                    self.push_multi(&mut out, e.characteristics(), &t.separator);
                    out.push_str(&t.anatomy);
                    self.push_multi(&mut out, e.anatomies(), &t.separator);
                }
            }
            OutputFormat::Baseline => {
                for (i, e) in events.iter().enumerate() {
                    if i > 0 {
                        out.push_str(&t.baseline_sep);
                    }
                    out.push_str(e.core_name());
                    out.push_str(&t.baseline_sep);
                    out.push_str(e.tendency().unwrap_or(&t.null_tag));
                    out.push_str(&t.baseline_sep);
                    self.push_multi(&mut out, e.characteristics(), &t.baseline_sep);
                    out.push_str(&t.baseline_sep);
                    self.push_multi(&mut out, e.anatomies(), &t.baseline_sep);
                }
            }
        }
        Ok(out)
    }

    fn push_multi(&self, out: &mut String, values: &[String], sep: &str) {
        if values.is_empty() {
            out.push_str(&self.tokens.null_tag);
            return;
        }
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.push_str(sep);
            }
            out.push_str(v);
        }
    }

    fn check_values(&self, e: &ClinicalEvent) -> Result<(), LinearizeError> {
        let scalars = std::iter::once((Slot::Core, e.core_name())).chain(e.tendency().map(|t| (Slot::Tendency, t)));
        let multis = e
            .characteristics()
            .iter()
            .map(|v| (Slot::Characteristic, v.as_str()))
            .chain(e.anatomies().iter().map(|v| (Slot::Anatomy, v.as_str())));
        for (slot, value) in scalars.chain(multis) {
            if let Some(tok) = self.tokens.find_in(value) {
                return Err(EventError::ReservedToken {
                    slot,
                    value: value.to_string(),
                    token: tok.to_string(),
                }
                .into());
            }
        }
        Ok(())
    }

    pub(crate) fn lex<'a>(&self, s: &'a str) -> Vec<Piece<'a>> {
        let mut pieces = Vec::new();
        let mut text_start: Option<(usize, usize)> = None; // (byte, char)
        let mut byte = 0;
        let mut ch = 0;
        while byte < s.len() {
            if let Some(lit) = self.tokens.match_prefix(&s[byte..]) {
                if let Some((b, c)) = text_start.take() {
                    pieces.push(Piece::Text {
                        start: c,
                        text: &s[b..byte],
                    });
                }
                let lit_str = self.tokens.get(lit);
                let len = text::char_len(lit_str);
                pieces.push(Piece::Token { start: ch, lit, len });
                byte += lit_str.len();
                ch += len;
            } else {
                if text_start.is_none() {
                    text_start = Some((byte, ch));
                }
                let c = s[byte..].chars().next().expect("non-empty remainder");
                byte += c.len_utf8();
                ch += 1;
            }
        }
        if let Some((b, c)) = text_start {
            pieces.push(Piece::Text {
                start: c,
                text: &s[b..],
            });
        }
        pieces
    }

    /// Decode a linearized string. Never fails; every problem is reported as
    /// a diagnostic and decoding continues with the next event.
    pub fn decode(&self, s: &str, format: OutputFormat) -> (Vec<ClinicalEvent>, Vec<ParseDiagnostic>) {
        match format {
            OutputFormat::SpecialToken => self.decode_special(s),
            OutputFormat::Baseline => self.decode_baseline(s),
        }
    }

    fn decode_special(&self, s: &str) -> (Vec<ClinicalEvent>, Vec<ParseDiagnostic>) {
        let pieces = self.lex(s);
        let total = text::char_len(s);
        let mut events = Vec::new();
        let mut diags = Vec::new();
        let mut i = 0;

        let lead = pieces
            .iter()
            .position(|p| p.literal() == Some(Literal::Ent))
            .unwrap_or(pieces.len());
        if lead > 0 {
            let end = pieces.get(lead).map_or(total, Piece::start);
            diags.push(ParseDiagnostic::new(
                DiagnosticKind::TrailingGarbage,
                0,
                end,
                format!("{end} character(s) before the first event marker"),
            ));
            i = lead;
        }

        while i < pieces.len() {
            let event_start = pieces[i].start();
            let event_end = pieces[i + 1..]
                .iter()
                .find(|p| p.literal() == Some(Literal::Ent))
                .map_or(total, Piece::start);
            let next = pieces[i + 1..]
                .iter()
                .position(|p| p.literal() == Some(Literal::Ent))
                .map_or(pieces.len(), |k| i + 1 + k);
            let body = &pieces[i + 1..next];
            let mut local = Vec::new();
            match self.parse_event_body(body, event_end, &mut local) {
                Some(event) => {
                    events.push(event);
                    diags.append(&mut local);
                }
                None => {
                    let reason = local
                        .iter()
                        .find(|d| d.slot == Some(Slot::Core) || d.kind == DiagnosticKind::UnexpectedToken)
                        .map(|d| d.message.clone())
                        .unwrap_or_else(|| "event dropped".into());
                    let kind = local
                        .iter()
                        .find(|d| d.slot == Some(Slot::Core))
                        .map_or(DiagnosticKind::UnexpectedToken, |d| d.kind);
                    diags.push(
                        ParseDiagnostic::new(kind, event_start, event_end - event_start, reason).for_slot(Slot::Core),
                    );
                }
            }
            i = next;
        }
        (events, diags)
    }

    /// Parse the pieces after an `<ent>` marker up to the next one. Returns
    /// `None` when the event has to be dropped.
    fn parse_event_body(
        &self,
        body: &[Piece<'_>],
        event_end: usize,
        diags: &mut Vec<ParseDiagnostic>,
    ) -> Option<ClinicalEvent> {
        let content_end = |from: usize| {
            body[from..]
                .iter()
                .position(Piece::is_slot_marker)
                .map_or(body.len(), |k| from + k)
        };
        let end_pos = |idx: usize| body.get(idx).map_or(event_end, Piece::start);

        let core_end = content_end(0);
        let core = self.scalar_content(Slot::Core, &body[..core_end], end_pos(core_end), diags);
        let mut i = core_end;

        let mut tendency = None;
        let mut characteristics = Vec::new();
        let mut anatomies = Vec::new();

        for slot in [Slot::Tendency, Slot::Characteristic, Slot::Anatomy] {
            loop {
                match body.get(i).and_then(Piece::literal).and_then(Literal::slot) {
                    Some(found) if found == slot => {
                        let start = i + 1;
                        let end = content_end(start);
                        let content = &body[start..end];
                        let close = end_pos(end);
                        if slot == Slot::Tendency {
                            tendency = self.scalar_content(slot, content, close, diags);
                        } else {
                            let values = self.multi_content(slot, content, close, diags);
                            if slot == Slot::Characteristic {
                                characteristics = values;
                            } else {
                                anatomies = values;
                            }
                        }
                        i = end;
                        break;
                    }
                    Some(found) if found < slot => {
                        // A slot marker that was already consumed: repeated or out of order.
                        let end = content_end(i + 1);
                        let start = body[i].start();
                        diags.push(ParseDiagnostic::new(
                            DiagnosticKind::UnexpectedToken,
                            start,
                            end_pos(end) - start,
                            format!("{found} slot repeated or out of order"),
                        ));
                        i = end;
                    }
                    _ => {
                        diags.push(
                            ParseDiagnostic::new(
                                DiagnosticKind::MissingSlot,
                                end_pos(i),
                                0,
                                format!("missing {slot} slot"),
                            )
                            .for_slot(slot),
                        );
                        break;
                    }
                }
            }
        }
        if i < body.len() {
            let start = body[i].start();
            diags.push(ParseDiagnostic::new(
                DiagnosticKind::UnexpectedToken,
                start,
                event_end - start,
                "slot marker after the anatomy slot",
            ));
        }

        let core = core?;
        match ClinicalEvent::builder(core)
            .maybe_tendency(tendency)
            .characteristics(characteristics)
            .anatomies(anatomies)
            .build()
        {
            Ok(e) => Some(e),
            Err(err) => {
                diags.push(ParseDiagnostic::new(
                    DiagnosticKind::UnexpectedToken,
                    end_pos(0),
                    0,
                    err.to_string(),
                ));
                None
            }
        }
    }

    /// Split slot content on `<unk>` into groups.
    fn groups<'p, 'a>(content: &'p [Piece<'a>]) -> Vec<(usize, &'p [Piece<'a>])> {
        let mut out = Vec::new();
        let mut from = 0;
        for (k, p) in content.iter().enumerate() {
            if p.literal() == Some(Literal::Separator) {
                out.push((from, &content[from..k]));
                from = k + 1;
            }
        }
        out.push((from, &content[from..]));
        out
    }

    /// Interpret one `<unk>`-free group. `Ok(Some(text))` is a value,
    /// `Ok(None)` is the null tag, `Err(())` an empty group.
    fn group_value(
        &self,
        slot: Slot,
        group: &[Piece<'_>],
        close: usize,
        diags: &mut Vec<ParseDiagnostic>,
    ) -> Result<Option<String>, ()> {
        let Some(first) = group.first() else {
            diags.push(
                ParseDiagnostic::new(DiagnosticKind::EmptyAttribute, close, 0, format!("empty {slot} value"))
                    .for_slot(slot),
            );
            return Err(());
        };
        let value = match first {
            Piece::Text { text, .. } => Some(text.to_string()),
            Piece::Token { lit: Literal::Null, .. } => None,
            Piece::Token { start, len, .. } => {
                diags.push(
                    ParseDiagnostic::new(
                        DiagnosticKind::UnexpectedToken,
                        *start,
                        *len,
                        format!("unexpected token in {slot} slot"),
                    )
                    .for_slot(slot),
                );
                return self.group_value(slot, &group[1..], close, diags);
            }
        };
        if group.len() > 1 {
            let start = group[1].start();
            let len: usize = group[1..].iter().map(Piece::char_len).sum();
            diags.push(
                ParseDiagnostic::new(
                    DiagnosticKind::UnexpectedToken,
                    start,
                    len,
                    format!("extra content in {slot} slot"),
                )
                .for_slot(slot),
            );
        }
        Ok(value)
    }

    fn scalar_content(
        &self,
        slot: Slot,
        content: &[Piece<'_>],
        close: usize,
        diags: &mut Vec<ParseDiagnostic>,
    ) -> Option<String> {
        let groups = Self::groups(content);
        let (_, first) = groups[0];
        let value = self.group_value(slot, first, close, diags);
        if groups.len() > 1 {
            let sep_idx = first.len();
            let start = content[sep_idx].start();
            diags.push(
                ParseDiagnostic::new(
                    DiagnosticKind::UnexpectedToken,
                    start,
                    close - start,
                    format!("separator in single-valued {slot} slot"),
                )
                .for_slot(slot),
            );
        }
        match value {
            Ok(Some(v)) => Some(v),
            Ok(None) if slot == Slot::Core => {
                diags.push(
                    ParseDiagnostic::new(DiagnosticKind::EmptyAttribute, close, 0, "core slot is null").for_slot(slot),
                );
                None
            }
            _ => None,
        }
    }

    fn multi_content(
        &self,
        slot: Slot,
        content: &[Piece<'_>],
        close: usize,
        diags: &mut Vec<ParseDiagnostic>,
    ) -> Vec<String> {
        let groups = Self::groups(content);
        let single = groups.len() == 1;
        let mut values = Vec::new();
        for (offset, group) in groups {
            let group_close = content.get(offset + group.len()).map_or(close, Piece::start);
            match self.group_value(slot, group, group_close, diags) {
                Ok(Some(v)) => values.push(v),
                Ok(None) if !single => {
                    let start = group[0].start();
                    diags.push(
                        ParseDiagnostic::new(
                            DiagnosticKind::UnexpectedToken,
                            start,
                            group[0].char_len(),
                            format!("null tag among {slot} values"),
                        )
                        .for_slot(slot),
                    );
                }
                _ => {}
            }
        }
        values
    }

    fn decode_baseline(&self, s: &str) -> (Vec<ClinicalEvent>, Vec<ParseDiagnostic>) {
        if s.is_empty() {
            return (Vec::new(), Vec::new());
        }
        let pieces = self.lex(s);
        let total = text::char_len(s);
        let mut diags = Vec::new();

        let mut fields: Vec<Field> = Vec::new();
        let mut from = 0;
        let mut field_start = 0;
        for k in 0..=pieces.len() {
            let at_sep = pieces.get(k).and_then(Piece::literal) == Some(Literal::BaselineSep);
            if k == pieces.len() || at_sep {
                let close = pieces.get(k).map_or(total, Piece::start);
                let field = &pieces[from..k];
                let value = match field {
                    [Piece::Text { text, .. }] => Some(text.to_string()),
                    [Piece::Token { lit: Literal::Null, .. }] => None,
                    [] => {
                        diags.push(ParseDiagnostic::new(
                            DiagnosticKind::EmptyAttribute,
                            close,
                            0,
                            "empty baseline field",
                        ));
                        None
                    }
                    _ => {
                        let start = field[0].start();
                        diags.push(ParseDiagnostic::new(
                            DiagnosticKind::UnexpectedToken,
                            start,
                            close - start,
                            "unexpected token in baseline field",
                        ));
                        field.iter().find_map(|p| match p {
                            Piece::Text { text, .. } => Some(text.to_string()),
                            _ => None,
                        })
                    }
                };
                fields.push(Field {
                    start: field_start,
                    end: close,
                    value,
                });
                if let Some(p) = pieces.get(k) {
                    field_start = p.start() + p.char_len();
                }
                from = k + 1;
            }
        }

        let mut events = Vec::new();
        if fields.len().is_multiple_of(4) {
            for chunk in fields.chunks(4) {
                let [core, tendency, character, anatomy] = chunk else {
                    unreachable!()
                };
                let values = |f: &Field| f.value.clone().into_iter().collect::<Vec<_>>();
                self.push_baseline_event(
                    (core, anatomy.end),
                    tendency.value.clone(),
                    values(character),
                    values(anatomy),
                    &mut events,
                    &mut diags,
                );
            }
        } else {
            // Arity does not identify event boundaries: read one event whose
            // characteristic slot absorbs the surplus fields.
            let n = fields.len();
            let ambiguous_at = fields.get(2).map_or(total, |f| f.start);
            diags.push(ParseDiagnostic::new(
                DiagnosticKind::UnexpectedToken,
                ambiguous_at,
                0,
                format!("{n} baseline fields do not form whole events; read as one event"),
            ));
            let tendency = fields.get(1).and_then(|f| f.value.clone());
            let (characteristics, anatomies) = if n >= 4 {
                (
                    fields[2..n - 1].iter().filter_map(|f| f.value.clone()).collect(),
                    fields[n - 1].value.clone().into_iter().collect(),
                )
            } else {
                (
                    fields.get(2).and_then(|f| f.value.clone()).into_iter().collect(),
                    Vec::new(),
                )
            };
            for (slot, idx) in [(Slot::Tendency, 1), (Slot::Characteristic, 2), (Slot::Anatomy, 3)] {
                if idx >= n {
                    diags.push(
                        ParseDiagnostic::new(DiagnosticKind::MissingSlot, total, 0, format!("missing {slot} field"))
                            .for_slot(slot),
                    );
                }
            }
            self.push_baseline_event(
                (&fields[0], total),
                tendency,
                characteristics,
                anatomies,
                &mut events,
                &mut diags,
            );
        }
        (events, diags)
    }

    fn push_baseline_event(
        &self,
        (core, event_end): (&Field, usize),
        tendency: Option<String>,
        characteristics: Vec<String>,
        anatomies: Vec<String>,
        events: &mut Vec<ClinicalEvent>,
        diags: &mut Vec<ParseDiagnostic>,
    ) {
        let Some(core_name) = core.value.clone() else {
            diags.push(
                ParseDiagnostic::new(
                    DiagnosticKind::EmptyAttribute,
                    core.start,
                    event_end - core.start,
                    "event without core name dropped",
                )
                .for_slot(Slot::Core),
            );
            return;
        };
        match ClinicalEvent::builder(core_name)
            .maybe_tendency(tendency)
            .characteristics(characteristics)
            .anatomies(anatomies)
            .build()
        {
            Ok(e) => events.push(e),
            Err(err) => diags.push(ParseDiagnostic::new(
                DiagnosticKind::UnexpectedToken,
                core.start,
                event_end - core.start,
                err.to_string(),
            )),
        }
    }

    /// Whether `events` survive encode then decode unchanged and without
    /// diagnostics. Spans are not part of the linearized form and are ignored.
    pub fn roundtrip_check(&self, events: &[ClinicalEvent], format: OutputFormat) -> bool {
        let Ok(s) = self.encode(events, format) else {
            return false;
        };
        let (decoded, diags) = self.decode(&s, format);
        diags.is_empty()
            && decoded.len() == events.len()
            && decoded.iter().zip(events).all(|(d, e)| *d == e.without_span())
    }
}

pub fn encode_events(events: &[ClinicalEvent], format: OutputFormat) -> Result<String, LinearizeError> {
    Linearizer::default().encode(events, format)
}

pub fn decode_events(s: &str, format: OutputFormat) -> (Vec<ClinicalEvent>, Vec<ParseDiagnostic>) {
    Linearizer::default().decode(s, format)
}

pub fn roundtrip_check(events: &[ClinicalEvent], format: OutputFormat) -> bool {
    Linearizer::default().roundtrip_check(events, format)
}
