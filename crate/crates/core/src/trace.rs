//! Recorded process traces and their parts.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use data_encoding::BASE32_NOPAD;
use rand::Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("event ends at {end_ms} ms before it starts at {start_ms} ms")]
    NegativeDuration { start_ms: u64, end_ms: u64 },
    #[error("{field} must be within 0..=100, got {value}")]
    PercentOutOfRange { field: &'static str, value: i64 },
    #[error("invalid session id `{0}`: expected 26 characters from [a-z2-7]")]
    InvalidSessionId(String),
    #[error("invalid temperature {0}: expected 35.5..=39.5 in steps of 0.5, or OVER_40")]
    InvalidTemperature(String),
}

/// Opaque session token: 128 random bits, lower-case base32 without padding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(String);

impl SessionId {
    pub const LEN: usize = 26;

    pub fn mint() -> Self {
        let bytes: [u8; 16] = rand::rng().random();
        Self::from_bytes(bytes)
    }

    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        Self(BASE32_NOPAD.encode(&bytes).to_ascii_lowercase())
    }

    pub fn is_valid(token: &str) -> bool {
        token.len() == Self::LEN
            && token
                .bytes()
                .all(|b| b.is_ascii_lowercase() || (b'2'..=b'7').contains(&b))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for SessionId {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if Self::is_valid(s) {
            Ok(Self(s.to_string()))
        } else {
            Err(TraceError::InvalidSessionId(s.to_string()))
        }
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for SessionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SessionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Body temperature on the instructor's closed scale: 35.5 to 39.5 °C in
/// half-degree steps, plus "over 40". Values in (39.5, 40] have no grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemperatureReading {
    /// Stored in half degrees, 71..=79.
    Grade(u8),
    Over40,
}

impl TemperatureReading {
    pub const OVER_40_TOKEN: &'static str = "OVER_40";

    pub fn from_celsius(value: f64) -> Result<Self, TraceError> {
        let halves = value * 2.0;
        if halves.fract() == 0.0 && (71.0..=79.0).contains(&halves) {
            Ok(Self::Grade(halves as u8))
        } else {
            Err(TraceError::InvalidTemperature(value.to_string()))
        }
    }

    /// Every representable reading, coldest first.
    pub fn all() -> impl Iterator<Item = Self> {
        (71..=79).map(Self::Grade).chain(std::iter::once(Self::Over40))
    }

    pub fn celsius(self) -> Option<f64> {
        match self {
            Self::Grade(halves) => Some(f64::from(halves) / 2.0),
            Self::Over40 => None,
        }
    }
}

impl fmt::Display for TemperatureReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.celsius() {
            Some(c) => write!(f, "{c:.1}°C"),
            None => f.write_str("over 40°C"),
        }
    }
}

impl Serialize for TemperatureReading {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.celsius() {
            Some(c) => serializer.serialize_f64(c),
            None => serializer.serialize_str(Self::OVER_40_TOKEN),
        }
    }
}

impl<'de> Deserialize<'de> for TemperatureReading {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Token(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Self::from_celsius(v).map_err(de::Error::custom),
            Raw::Token(t) if t == Self::OVER_40_TOKEN => Ok(Self::Over40),
            Raw::Token(t) => Err(de::Error::custom(TraceError::InvalidTemperature(t))),
        }
    }
}

/// Values measured while an action was performed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attributes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureReading>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spo2_percent: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oxygen_percent: Option<u8>,
}

impl Attributes {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    fn check(&self) -> Result<(), TraceError> {
        for (field, value) in [
            ("spo2_percent", self.spo2_percent),
            ("oxygen_percent", self.oxygen_percent),
        ] {
            if let Some(v) = value.filter(|&v| v > 100) {
                return Err(TraceError::PercentOutOfRange {
                    field,
                    value: i64::from(v),
                });
            }
        }
        Ok(())
    }
}

/// One executed action, timed in milliseconds from scenario start.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    action: String,
    start_ms: u64,
    end_ms: u64,
    attributes: Attributes,
}

impl TraceEvent {
    pub fn new(action: impl Into<String>, start_ms: u64, end_ms: u64) -> Result<Self, TraceError> {
        if end_ms < start_ms {
            return Err(TraceError::NegativeDuration { start_ms, end_ms });
        }
        Ok(Self {
            action: action.into(),
            start_ms,
            end_ms,
            attributes: Attributes::default(),
        })
    }

    pub fn with_attributes(mut self, attributes: Attributes) -> Result<Self, TraceError> {
        attributes.check()?;
        self.attributes = attributes;
        Ok(self)
    }

    pub fn action(&self) -> &str {
        &self.action
    }

    pub fn start_ms(&self) -> u64 {
        self.start_ms
    }

    pub fn end_ms(&self) -> u64 {
        self.end_ms
    }

    pub fn duration_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    pub fn attributes(&self) -> &Attributes {
        &self.attributes
    }

    /// Same timing and attributes under a different action.
    pub fn with_action(&self, action: impl Into<String>) -> Self {
        Self {
            action: action.into(),
            ..self.clone()
        }
    }

    /// Keeps the start, replaces the duration.
    pub fn with_duration(&self, duration_ms: u64) -> Self {
        Self {
            end_ms: self.start_ms + duration_ms,
            ..self.clone()
        }
    }

    /// Keeps the duration, moves the start.
    pub fn shifted_to(&self, start_ms: u64) -> Self {
        Self {
            start_ms,
            end_ms: start_ms + self.duration_ms(),
            ..self.clone()
        }
    }

    pub(crate) fn set_temperature(&mut self, reading: TemperatureReading) {
        self.attributes.temperature = Some(reading);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecklistEntry {
    pub item: String,
    pub done: bool,
}

/// Pre-resuscitation checklist as ticked before the scenario clock starts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ChecklistResult {
    pub items: Vec<ChecklistEntry>,
}

impl ChecklistResult {
    pub fn all_done<S: AsRef<str>>(items: &[S]) -> Self {
        Self {
            items: items
                .iter()
                .map(|i| ChecklistEntry {
                    item: i.as_ref().to_string(),
                    done: true,
                })
                .collect(),
        }
    }
}

/// One team's recorded simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessTrace {
    pub session_id: Option<SessionId>,
    pub group_id: String,
    pub events: Vec<TraceEvent>,
    pub checklist: ChecklistResult,
    pub notes: String,
    pub recorded_at: Option<DateTime<Utc>>,
}

impl ProcessTrace {
    pub fn new(group_id: impl Into<String>, events: Vec<TraceEvent>) -> Self {
        Self {
            session_id: None,
            group_id: group_id.into(),
            events,
            checklist: ChecklistResult::default(),
            notes: String::new(),
            recorded_at: None,
        }
    }
}
