//! Trace validation against a gold-standard bundle.
//!
//! Violations are data: a trace either produces an empty report or a list
//! of entries, each tagged with the offending index where one applies.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::gold::GoldStandard;
use crate::trace::ProcessTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InvalidSessionId,
    EmptyGroupId,
    NegativeTimestamp,
    NegativeDuration,
    AttributeOutOfRange,
    OutOfOrder,
    UnknownAction,
    UnknownChecklistItem,
    DuplicateChecklistItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationScope {
    Trace,
    Event,
    Checklist,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub scope: ViolationScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    pub fn trace(kind: ViolationKind, message: impl Into<String>) -> Self {
        Self {
            scope: ViolationScope::Trace,
            index: None,
            kind,
            message: message.into(),
        }
    }

    pub fn event(index: usize, kind: ViolationKind, message: impl Into<String>) -> Self {
        Self {
            scope: ViolationScope::Event,
            index: Some(index),
            kind,
            message: message.into(),
        }
    }

    pub fn checklist(index: usize, kind: ViolationKind, message: impl Into<String>) -> Self {
        Self {
            scope: ViolationScope::Checklist,
            index: Some(index),
            kind,
            message: message.into(),
        }
    }
}

/// Reports ordering, taxonomy-resolution, and checklist-membership problems.
pub fn validate_trace(trace: &ProcessTrace, gold: &GoldStandard) -> Vec<Violation> {
    let mut report = Vec::new();

    if trace.group_id.trim().is_empty() {
        report.push(Violation::trace(
            ViolationKind::EmptyGroupId,
            "group_id must be non-empty",
        ));
    }

    for (i, event) in trace.events.iter().enumerate() {
        if !gold.taxonomy().contains(event.action()) {
            report.push(Violation::event(
                i,
                ViolationKind::UnknownAction,
                format!("action `{}` is not in the taxonomy", event.action()),
            ));
        }
        if let Some(prev) = i.checked_sub(1).map(|p| &trace.events[p]) {
            if event.start_ms() < prev.start_ms() {
                report.push(Violation::event(
                    i,
                    ViolationKind::OutOfOrder,
                    format!(
                        "starts at {} ms, before the previous event at {} ms",
                        event.start_ms(),
                        prev.start_ms()
                    ),
                ));
            }
        }
    }

    let definition: HashSet<&str> = gold.checklist_definition().iter().map(String::as_str).collect();
    let mut seen = HashSet::new();
    for (i, entry) in trace.checklist.items.iter().enumerate() {
        if !definition.contains(entry.item.as_str()) {
            report.push(Violation::checklist(
                i,
                ViolationKind::UnknownChecklistItem,
                format!("checklist item `{}` is not defined", entry.item),
            ));
        }
        if !seen.insert(entry.item.as_str()) {
            report.push(Violation::checklist(
                i,
                ViolationKind::DuplicateChecklistItem,
                format!("checklist item `{}` appears more than once", entry.item),
            ));
        }
    }

    report
}
