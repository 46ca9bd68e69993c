//! Trace capture and scoring for neonatal resuscitation training sessions.
//!
//! A team's simulation run is recorded as a [`ProcessTrace`]: timed actions
//! drawn from an [`ActionTaxonomy`]. Each trace is scored against a
//! [`GoldStandard`] with a semantic trace edit distance in `[0, 1]`
//! ([`texc`]), checked against phase deadlines ([`schedule`]), and persisted
//! per session in a [`SessionStore`] that serves debriefing statistics.

pub mod generate;
pub mod gold;
pub mod schedule;
pub mod stats;
pub mod store;
pub mod taxonomy;
pub mod texc;
pub mod trace;
pub mod validate;
pub mod wire;

pub use gold::{BundleDocument, BundleError, GoldStandard};
pub use schedule::{phase_compliance, Phase, PhaseReport, PhaseSchedule, ScheduleError};
pub use stats::{GroupStats, SessionStats};
pub use store::{
    DocumentStore, FileDocumentStore, MemoryDocumentStore, SessionRecord, SessionStore,
    StoreError, StoredTrace,
};
pub use taxonomy::{ActionTaxonomy, TaxonomyError};
pub use texc::{
    format_percent, score_payload, taxonomy_distance, trace_distance, DistanceConfig,
    DistanceResult, ScoreError, ScorePayload,
};
pub use trace::{
    Attributes, ChecklistEntry, ChecklistResult, ProcessTrace, SessionId, TemperatureReading,
    TraceEvent, TraceError,
};
pub use validate::{validate_trace, Violation, ViolationKind};
pub use wire::WireTrace;
