//! JSON representation of a trace, as posted by clients and stored on disk.
//!
//! ```json
//! {
//!   "session_id": "…26 chars…",
//!   "group_id": "group-1",
//!   "checklist": [{ "item": "warmer_on", "done": true }],
//!   "events": [{ "action": "dry_infant", "start_ms": 15000, "end_ms": 45000 }],
//!   "temperature": 36.5,
//!   "notes": "free text",
//!   "recorded_at": "2026-06-01T09:30:00Z"
//! }
//! ```
//!
//! Unknown top-level keys are rejected, except `@context`, which is accepted
//! and dropped so that JSON-LD payloads parse.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::trace::{
    Attributes, ChecklistEntry, ChecklistResult, ProcessTrace, SessionId, TemperatureReading,
    TraceEvent, TraceError,
};
use crate::validate::{Violation, ViolationKind};

/// Action that receives a session-level temperature when no event carries one.
pub const TEMPERATURE_ACTION: &str = "measure_temperature";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireEvent {
    pub action: String,
    pub start_ms: i64,
    pub end_ms: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Attributes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireTrace {
    #[serde(rename = "@context", default, skip_serializing)]
    pub context: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub group_id: String,
    #[serde(default)]
    pub checklist: Vec<ChecklistEntry>,
    pub events: Vec<WireEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureReading>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recorded_at: Option<DateTime<Utc>>,
}

impl WireTrace {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("wire trace serializes")
    }

    /// Checks the structural invariants and builds the domain trace.
    ///
    /// A session-level temperature is moved onto the first
    /// [`TEMPERATURE_ACTION`] event, or onto a zero-length one appended at the
    /// end of the trace, unless some event already carries a temperature.
    pub fn into_trace(self) -> Result<ProcessTrace, Vec<Violation>> {
        let mut violations = Vec::new();

        let session_id = match self.session_id {
            Some(raw) => match raw.parse::<SessionId>() {
                Ok(id) => Some(id),
                Err(e) => {
                    violations.push(Violation::trace(ViolationKind::InvalidSessionId, e.to_string()));
                    None
                }
            },
            None => None,
        };
        if self.group_id.trim().is_empty() {
            violations.push(Violation::trace(
                ViolationKind::EmptyGroupId,
                "group_id must be non-empty",
            ));
        }

        let mut events = Vec::with_capacity(self.events.len());
        for (index, raw) in self.events.into_iter().enumerate() {
            match convert_event(raw) {
                Ok(e) => events.push(e),
                Err((kind, msg)) => violations.push(Violation::event(index, kind, msg)),
            }
        }

        if !violations.is_empty() {
            return Err(violations);
        }

        if let Some(reading) = self.temperature {
            if events.iter().all(|e| e.attributes().temperature.is_none()) {
                match events.iter_mut().find(|e| e.action() == TEMPERATURE_ACTION) {
                    Some(event) => event.set_temperature(reading),
                    None => {
                        let at = events.iter().map(TraceEvent::end_ms).max().unwrap_or(0);
                        let mut event =
                            TraceEvent::new(TEMPERATURE_ACTION, at, at).expect("zero-length");
                        event.set_temperature(reading);
                        events.push(event);
                    }
                }
            }
        }

        Ok(ProcessTrace {
            session_id,
            group_id: self.group_id,
            events,
            checklist: ChecklistResult {
                items: self.checklist,
            },
            notes: self.notes.unwrap_or_default(),
            recorded_at: self.recorded_at,
        })
    }
}

fn convert_event(raw: WireEvent) -> Result<TraceEvent, (ViolationKind, String)> {
    if raw.start_ms < 0 || raw.end_ms < 0 {
        return Err((
            ViolationKind::NegativeTimestamp,
            format!(
                "timestamps must be non-negative, got [{}, {}]",
                raw.start_ms, raw.end_ms
            ),
        ));
    }
    let event = TraceEvent::new(raw.action, raw.start_ms as u64, raw.end_ms as u64)
        .map_err(|e| (ViolationKind::NegativeDuration, e.to_string()))?;
    match raw.attributes {
        Some(attrs) => event
            .with_attributes(attrs)
            .map_err(|e: TraceError| (ViolationKind::AttributeOutOfRange, e.to_string())),
        None => Ok(event),
    }
}

impl From<&TraceEvent> for WireEvent {
    fn from(e: &TraceEvent) -> Self {
        Self {
            action: e.action().to_string(),
            start_ms: e.start_ms() as i64,
            end_ms: e.end_ms() as i64,
            attributes: (!e.attributes().is_empty()).then(|| e.attributes().clone()),
        }
    }
}

impl From<&ProcessTrace> for WireTrace {
    fn from(t: &ProcessTrace) -> Self {
        Self {
            context: None,
            session_id: t.session_id.as_ref().map(|s| s.to_string()),
            group_id: t.group_id.clone(),
            checklist: t.checklist.items.clone(),
            events: t.events.iter().map(WireEvent::from).collect(),
            temperature: None,
            notes: (!t.notes.is_empty()).then(|| t.notes.clone()),
            recorded_at: t.recorded_at,
        }
    }
}
