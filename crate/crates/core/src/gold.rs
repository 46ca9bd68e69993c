//! Gold-standard bundle: reference trace, phase schedule, checklist, taxonomy.
//!
//! On disk a bundle is a directory holding `taxonomy.json`,
//! `schedule.json`, `checklist.json`, and `gold-trace.json`. Over HTTP it is
//! a single JSON object with the keys `taxonomy`, `schedule`, `checklist`,
//! and `trace`, each holding the corresponding file's content.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{phase_compliance, PhaseSchedule, ScheduleError};
use crate::taxonomy::{ActionTaxonomy, TaxonomyError};
use crate::trace::ProcessTrace;
use crate::validate::{validate_trace, Violation};
use crate::wire::WireTrace;

pub const TAXONOMY_FILE: &str = "taxonomy.json";
pub const SCHEDULE_FILE: &str = "schedule.json";
pub const CHECKLIST_FILE: &str = "checklist.json";
pub const TRACE_FILE: &str = "gold-trace.json";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {what}: {message}")]
    Malformed { what: &'static str, message: String },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("checklist item `{0}` is empty or repeated")]
    Checklist(String),
    #[error("gold trace is invalid: {}", summarize(.0))]
    Trace(Vec<Violation>),
    #[error("gold trace misses its own schedule in phase `{0}`")]
    OffSchedule(String),
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecklistDefinition {
    pub items: Vec<String>,
}

/// Wire and disk form of a bundle as one JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDocument {
    pub taxonomy: serde_json::Value,
    pub schedule: PhaseSchedule,
    pub checklist: ChecklistDefinition,
    pub trace: WireTrace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldStandard {
    taxonomy: ActionTaxonomy,
    schedule: PhaseSchedule,
    checklist: Vec<String>,
    trace: ProcessTrace,
}

impl GoldStandard {
    /// Validates the parts against each other.
    ///
    /// The gold trace must pass [`validate_trace`] and be on time for every
    /// phase of its own schedule.
    pub fn new(
        taxonomy: ActionTaxonomy,
        schedule: PhaseSchedule,
        checklist: Vec<String>,
        trace: ProcessTrace,
    ) -> Result<Self, BundleError> {
        let mut seen = HashSet::new();
        for item in &checklist {
            if item.is_empty() || !seen.insert(item.as_str()) {
                return Err(BundleError::Checklist(item.clone()));
            }
        }
        schedule.check_against(&taxonomy)?;
        let gold = Self {
            taxonomy,
            schedule,
            checklist,
            trace,
        };
        let violations = validate_trace(&gold.trace, &gold);
        if !violations.is_empty() {
            return Err(BundleError::Trace(violations));
        }
        let report = phase_compliance(&gold.trace, &gold.schedule, &gold.taxonomy)?;
        if let Some(bad) = report.iter().find(|r| !r.is_clean()) {
            return Err(BundleError::OffSchedule(bad.phase_id.clone()));
        }
        Ok(gold)
    }

    /// The bundle shipped with the crate.
    pub fn default_bundle() -> Self {
        Self::from_parts(
            include_str!("../assets/gold/taxonomy.json"),
            include_str!("../assets/gold/schedule.json"),
            include_str!("../assets/gold/checklist.json"),
            include_str!("../assets/gold/gold-trace.json"),
        )
        .expect("shipped gold bundle is valid")
    }

    /// Builds a bundle from the text of its four files.
    pub fn from_parts(
        taxonomy: &str,
        schedule: &str,
        checklist: &str,
        trace: &str,
    ) -> Result<Self, BundleError> {
        let taxonomy = ActionTaxonomy::parse(taxonomy)?;
        let schedule = PhaseSchedule::parse(schedule)?;
        let checklist: ChecklistDefinition =
            serde_json::from_str(checklist).map_err(|e| BundleError::Malformed {
                what: "checklist",
                message: e.to_string(),
            })?;
        let trace = WireTrace::from_json(trace).map_err(|e| BundleError::Malformed {
            what: "gold trace",
            message: e.to_string(),
        })?;
        Self::new(
            taxonomy,
            schedule,
            checklist.items,
            trace.into_trace().map_err(BundleError::Trace)?,
        )
    }

    pub fn load_dir(dir: &Path) -> Result<Self, BundleError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| BundleError::Io { path, source })
        };
        Self::from_parts(
            &read(TAXONOMY_FILE)?,
            &read(SCHEDULE_FILE)?,
            &read(CHECKLIST_FILE)?,
            &read(TRACE_FILE)?,
        )
    }

    /// The four bundle files as `(name, content)` pairs.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        vec![
            (TAXONOMY_FILE, self.taxonomy.to_json()),
            (SCHEDULE_FILE, self.schedule.to_json()),
            (
                CHECKLIST_FILE,
                serde_json::to_string_pretty(&ChecklistDefinition {
                    items: self.checklist.clone(),
                })
                .expect("checklist serializes"),
            ),
            (TRACE_FILE, WireTrace::from(&self.trace).to_json()),
        ]
    }

    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in self.files() {
            fs::write(dir.join(name), content + "\n")?;
        }
        Ok(())
    }

    pub fn from_document(doc: BundleDocument) -> Result<Self, BundleError> {
        let taxonomy = ActionTaxonomy::parse(&doc.taxonomy.to_string())?;
        Self::new(
            taxonomy,
            doc.schedule,
            doc.checklist.items,
            doc.trace.into_trace().map_err(BundleError::Trace)?,
        )
    }

    pub fn to_document(&self) -> BundleDocument {
        BundleDocument {
            taxonomy: serde_json::from_str(&self.taxonomy.to_json()).expect("taxonomy is JSON"),
            schedule: self.schedule.clone(),
            checklist: ChecklistDefinition {
                items: self.checklist.clone(),
            },
            trace: WireTrace::from(&self.trace),
        }
    }

    pub fn taxonomy(&self) -> &ActionTaxonomy {
        &self.taxonomy
    }

    pub fn schedule(&self) -> &PhaseSchedule {
        &self.schedule
    }

    pub fn checklist_definition(&self) -> &[String] {
        &self.checklist
    }

    pub fn trace(&self) -> &ProcessTrace {
        &self.trace
    }
}
