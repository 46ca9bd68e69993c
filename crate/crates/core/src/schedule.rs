//! Deadline windows for scenario actions and per-phase compliance.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::ActionTaxonomy;
use crate::trace::ProcessTrace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("malformed schedule document: {0}")]
    Malformed(String),
    #[error("phase `{0}` must have a strictly positive deadline")]
    NonPositiveDeadline(String),
    #[error("phase `{0}` has an earlier deadline than the phase before it")]
    DecreasingDeadline(String),
    #[error("duplicate phase id `{0}`")]
    DuplicatePhase(String),
    #[error("action `{action}` is assigned to more than one phase (again in `{phase}`)")]
    ActionInTwoPhases { action: String, phase: String },
    #[error("phase `{phase}` names action `{action}` which is not in the taxonomy")]
    UnknownAction { phase: String, action: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub id: String,
    pub deadline_ms: u64,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct PhaseSchedule {
    phases: Vec<Phase>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    phases: Vec<Phase>,
}

impl TryFrom<RawSchedule> for PhaseSchedule {
    type Error = ScheduleError;

    fn try_from(raw: RawSchedule) -> Result<Self, Self::Error> {
        Self::new(raw.phases)
    }
}

impl From<PhaseSchedule> for RawSchedule {
    fn from(s: PhaseSchedule) -> Self {
        Self { phases: s.phases }
    }
}

impl PhaseSchedule {
    /// Checks the taxonomy-independent invariants.
    pub fn new(phases: Vec<Phase>) -> Result<Self, ScheduleError> {
        let mut phase_ids = HashSet::new();
        let mut actions = HashSet::new();
        let mut last_deadline = 0;
        for phase in &phases {
            if phase.deadline_ms == 0 {
                return Err(ScheduleError::NonPositiveDeadline(phase.id.clone()));
            }
            if phase.deadline_ms < last_deadline {
                return Err(ScheduleError::DecreasingDeadline(phase.id.clone()));
            }
            last_deadline = phase.deadline_ms;
            if !phase_ids.insert(phase.id.as_str()) {
                return Err(ScheduleError::DuplicatePhase(phase.id.clone()));
            }
            for action in &phase.actions {
                if !actions.insert(action.as_str()) {
                    return Err(ScheduleError::ActionInTwoPhases {
                        action: action.clone(),
                        phase: phase.id.clone(),
                    });
                }
            }
        }
        Ok(Self { phases })
    }

    pub fn parse(document: &str) -> Result<Self, ScheduleError> {
        serde_json::from_str(document).map_err(|e| ScheduleError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn phase_of(&self, action: &str) -> Option<&Phase> {
        self.phases
            .iter()
            .find(|p| p.actions.iter().any(|a| a == action))
    }

    /// Every scheduled action must resolve in `taxonomy`.
    pub fn check_against(&self, taxonomy: &ActionTaxonomy) -> Result<(), ScheduleError> {
        for phase in &self.phases {
            if let Some(action) = phase.actions.iter().find(|a| !taxonomy.contains(a)) {
                return Err(ScheduleError::UnknownAction {
                    phase: phase.id.clone(),
                    action: action.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Partition of one phase's actions by timeliness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase_id: String,
    pub actions_on_time: Vec<String>,
    pub actions_late: Vec<String>,
    pub actions_missing: Vec<String>,
}

impl PhaseReport {
    pub fn is_clean(&self) -> bool {
        self.actions_late.is_empty() && self.actions_missing.is_empty()
    }
}

/// Classifies each scheduled action as on time, late, or missing.
///
/// An action is on time when some event for it starts at or before the
/// phase deadline, late when its earliest event starts after the deadline,
/// and missing when the trace has no event for it.
pub fn phase_compliance(
    trace: &ProcessTrace,
    schedule: &PhaseSchedule,
    taxonomy: &ActionTaxonomy,
) -> Result<Vec<PhaseReport>, ScheduleError> {
    schedule.check_against(taxonomy)?;
    Ok(schedule
        .phases
        .iter()
        .map(|phase| {
            let mut report = PhaseReport {
                phase_id: phase.id.clone(),
                actions_on_time: Vec::new(),
                actions_late: Vec::new(),
                actions_missing: Vec::new(),
            };
            for action in &phase.actions {
                let earliest = trace
                    .events
                    .iter()
                    .filter(|e| e.action() == action)
                    .map(|e| e.start_ms())
                    .min();
                let bucket = match earliest {
                    Some(start) if start <= phase.deadline_ms => &mut report.actions_on_time,
                    Some(_) => &mut report.actions_late,
                    None => &mut report.actions_missing,
                };
                bucket.push(action.clone());
            }
            report
        })
        .collect())
}
