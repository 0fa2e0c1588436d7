//! Records, events and the canonical key used for exact matching.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

/// Token literals that may never appear inside an attribute value.
pub const RESERVED_LITERALS: [&str; 7] = [
    "<ent>",
    "<tendency>",
    "<character>",
    "<anatomy>",
    "<unk>",
    "<null>",
    "<p>",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("core name is empty")]
    EmptyCoreName,
    #[error("empty value in {0} slot")]
    EmptyAttribute(Slot),
    #[error("value {value:?} in {slot} slot contains reserved token {token}")]
    ReservedToken { slot: Slot, value: String, token: String },
    #[error("core span ({start}, {end}) is not a non-empty forward range")]
    InvalidSpan { start: usize, end: usize },
    #[error("core span ({start}, {end}) exceeds source length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("core span covers {found:?} but core name is {expected:?}")]
    SpanMismatch { expected: String, found: String },
    #[error("record text is empty")]
    EmptyText,
}

/// The four attribute slots of an event, in linearization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Core,
    Tendency,
    Characteristic,
    Anatomy,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::Core, Slot::Tendency, Slot::Characteristic, Slot::Anatomy];

    pub fn is_multi_valued(self) -> bool {
        matches!(self, Slot::Characteristic | Slot::Anatomy)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Core => "core",
            Slot::Tendency => "tendency",
            Slot::Characteristic => "characteristic",
            Slot::Anatomy => "anatomy",
        })
    }
}

/// A source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MedicalRecord {
    pub id: String,
    pub text: String,
}

impl MedicalRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, EventError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(EventError::EmptyText);
        }
        Ok(MedicalRecord { id: id.into(), text })
    }

    pub fn char_len(&self) -> usize {
        text::char_len(&self.text)
    }
}

/// One extracted clinical finding.
///
/// Values are validated on construction: the core name is non-empty, no
/// multi-valued element is empty and no value contains a reserved token
/// literal. Whitespace is left alone; see [`normalize_event`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawEvent", into = "RawEvent")]
pub struct ClinicalEvent {
    core_name: String,
    tendency: Option<String>,
    characteristics: Vec<String>,
    anatomies: Vec<String>,
    core_span: Option<(usize, usize)>,
}

impl ClinicalEvent {
    pub fn builder(core_name: impl Into<String>) -> EventBuilder {
        EventBuilder {
            core_name: core_name.into(),
            tendency: None,
            characteristics: Vec::new(),
            anatomies: Vec::new(),
            core_span: None,
        }
    }

    /// Shorthand for an event carrying only a core name.
    pub fn new(core_name: impl Into<String>) -> Result<Self, EventError> {
        Self::builder(core_name).build()
    }

    pub fn core_name(&self) -> &str {
        &self.core_name
    }

    pub fn tendency(&self) -> Option<&str> {
        self.tendency.as_deref()
    }

    pub fn characteristics(&self) -> &[String] {
        &self.characteristics
    }

    pub fn anatomies(&self) -> &[String] {
        &self.anatomies
    }

    pub fn core_span(&self) -> Option<(usize, usize)> {
        self.core_span
    }

    /// Values of a multi-valued slot; empty for scalar slots.
    pub fn values(&self, slot: Slot) -> &[String] {
        match slot {
            Slot::Characteristic => &self.characteristics,
            Slot::Anatomy => &self.anatomies,
            Slot::Core | Slot::Tendency => &[],
        }
    }

    /// The same event without its span.
    pub fn without_span(&self) -> ClinicalEvent {
        ClinicalEvent {
            core_span: None,
            ..self.clone()
        }
    }

    /// Attach a span after construction, checking only its shape.
    pub fn with_span(self, start: usize, end: usize) -> Result<ClinicalEvent, EventError> {
        check_span_shape(start, end)?;
        Ok(ClinicalEvent {
            core_span: Some((start, end)),
            ..self
        })
    }

    /// Check the span against the source text it was annotated on.
    pub fn check_span(&self, source: &str) -> Result<(), EventError> {
        let Some((start, end)) = self.core_span else {
            return Ok(());
        };
        let len = text::char_len(source);
        if end > len {
            return Err(EventError::SpanOutOfBounds { start, end, len });
        }
        let found = text::char_slice(source, start, end).unwrap_or_default();
        if found != self.core_name {
            return Err(EventError::SpanMismatch {
                expected: self.core_name.clone(),
                found: found.to_string(),
            });
        }
        Ok(())
    }

    /// Non-core attribute instances as `(slot, value)` pairs.
    pub fn attribute_instances(&self) -> impl Iterator<Item = (Slot, &str)> {
        self.tendency
            .iter()
            .map(|t| (Slot::Tendency, t.as_str()))
            .chain(self.characteristics.iter().map(|v| (Slot::Characteristic, v.as_str())))
            .chain(self.anatomies.iter().map(|v| (Slot::Anatomy, v.as_str())))
    }
}

#[derive(Debug, Clone)]
pub struct EventBuilder {
    core_name: String,
    tendency: Option<String>,
    characteristics: Vec<String>,
    anatomies: Vec<String>,
    core_span: Option<(usize, usize)>,
}

impl EventBuilder {
    pub fn tendency(mut self, tendency: impl Into<String>) -> Self {
        self.tendency = Some(tendency.into());
        self
    }

    pub fn maybe_tendency(mut self, tendency: Option<String>) -> Self {
        self.tendency = tendency;
        self
    }

    pub fn characteristic(mut self, value: impl Into<String>) -> Self {
        self.characteristics.push(value.into());
        self
    }

    pub fn characteristics<I, S>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.characteristics.extend(values.into_iter().map(Into::into));
        self
    }

    pub fn anatomy(mut self, value: impl Into<String>) -> Self {
        self.anatomies.push(value.into());
        self
    }

    pub fn anatomies<I, S>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.anatomies.extend(values.into_iter().map(Into::into));
        self
    }

    pub fn span(mut self, start: usize, end: usize) -> Self {
        self.core_span = Some((start, end));
        self
    }

    pub fn build(self) -> Result<ClinicalEvent, EventError> {
        if self.core_name.is_empty() {
            return Err(EventError::EmptyCoreName);
        }
        check_reserved(Slot::Core, &self.core_name)?;
        if let Some(t) = &self.tendency {
            if t.is_empty() {
                return Err(EventError::EmptyAttribute(Slot::Tendency));
            }
            check_reserved(Slot::Tendency, t)?;
        }
        for (slot, values) in [
            (Slot::Characteristic, &self.characteristics),
            (Slot::Anatomy, &self.anatomies),
        ] {
            for v in values {
                if v.is_empty() {
                    return Err(EventError::EmptyAttribute(slot));
                }
                check_reserved(slot, v)?;
            }
        }
        if let Some((start, end)) = self.core_span {
            check_span_shape(start, end)?;
        }
        Ok(ClinicalEvent {
            core_name: self.core_name,
            tendency: self.tendency,
            characteristics: self.characteristics,
            anatomies: self.anatomies,
            core_span: self.core_span,
        })
    }
}

fn check_span_shape(start: usize, end: usize) -> Result<(), EventError> {
    if start >= end {
        return Err(EventError::InvalidSpan { start, end });
    }
    Ok(())
}

fn check_reserved(slot: Slot, value: &str) -> Result<(), EventError> {
    match RESERVED_LITERALS.iter().find(|lit| value.contains(*lit)) {
        Some(token) => Err(EventError::ReservedToken {
            slot,
            value: value.to_string(),
            token: token.to_string(),
        }),
        None => Ok(()),
    }
}

/// Serialized event layout; field order is the on-disk order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct RawEvent {
    core_name: String,
    #[serde(default)]
    tendency: Option<String>,
    #[serde(default)]
    characteristics: Vec<String>,
    #[serde(default)]
    anatomies: Vec<String>,
    #[serde(default)]
    core_span: Option<(usize, usize)>,
}

impl TryFrom<RawEvent> for ClinicalEvent {
    type Error = EventError;

    fn try_from(raw: RawEvent) -> Result<Self, Self::Error> {
        // An empty tendency string on disk means "absent".
        let tendency = raw.tendency.filter(|t| !t.is_empty());
        let mut builder = ClinicalEvent::builder(raw.core_name)
            .maybe_tendency(tendency)
            .characteristics(raw.characteristics)
            .anatomies(raw.anatomies);
        if let Some((start, end)) = raw.core_span {
            builder = builder.span(start, end);
        }
        builder.build()
    }
}

impl From<ClinicalEvent> for RawEvent {
    fn from(e: ClinicalEvent) -> Self {
        RawEvent {
            core_name: e.core_name,
            tendency: e.tendency,
            characteristics: e.characteristics,
            anatomies: e.anatomies,
            core_span: e.core_span,
        }
    }
}

/// A sentence with its gold or predicted events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedRecord {
    pub record: MedicalRecord,
    pub events: Vec<ClinicalEvent>,
}

impl AnnotatedRecord {
    pub fn new(record: MedicalRecord, events: Vec<ClinicalEvent>) -> Self {
        AnnotatedRecord { record, events }
    }

    pub fn id(&self) -> &str {
        &self.record.id
    }

    pub fn text(&self) -> &str {
        &self.record.text
    }
}

/// Order-insensitive identity of an event under the all-attributes-correct
/// criterion. The span is not part of the key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalEventKey {
    pub core_name: String,
    pub tendency: String,
    pub characteristics: Vec<String>,
    pub anatomies: Vec<String>,
}

/// Strip surrounding whitespace from every value, drop values that become
/// empty and remove repeated values (first occurrence wins).
pub fn normalize_event(event: &ClinicalEvent) -> Result<ClinicalEvent, EventError> {
    let core_name = event.core_name.trim();
    if core_name.is_empty() {
        return Err(EventError::EmptyCoreName);
    }
    let tendency = event
        .tendency
        .as_deref()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string);
    Ok(ClinicalEvent {
        core_name: core_name.to_string(),
        tendency,
        characteristics: clean_values(&event.characteristics),
        anatomies: clean_values(&event.anatomies),
        core_span: event.core_span,
    })
}

fn clean_values(values: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(values.len());
    for v in values {
        let v = v.trim();
        if !v.is_empty() && !out.iter().any(|seen| seen == v) {
            out.push(v.to_string());
        }
    }
    out
}

pub fn event_key(event: &ClinicalEvent) -> CanonicalEventKey {
    fn set(values: &[String]) -> Vec<String> {
        let mut v = values.to_vec();
        v.sort();
        v.dedup();
        v
    }
    CanonicalEventKey {
        core_name: event.core_name.clone(),
        tendency: event.tendency.clone().unwrap_or_default(),
        characteristics: set(&event.characteristics),
        anatomies: set(&event.anatomies),
    }
}
