//! Trace extraction and comparison: semantic trace edit distance.
//!
//! Two event sequences are aligned by a weighted Levenshtein recurrence.
//! Inserting or deleting an event costs `indel_cost`; substituting one event
//! for another costs a convex blend of how far apart the two actions sit in
//! the taxonomy (Wu–Palmer dissimilarity) and how much their durations
//! differ. The raw alignment cost is then scaled into `[0, 1]`.
//!
//! The gold-standard trace is the *reference* (matrix rows) and the recorded
//! trace is the *candidate* (matrix columns): a delete drops a reference
//! event the team never performed, an insert adds an event the reference
//! does not have.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gold::GoldStandard;
use crate::schedule::{phase_compliance, PhaseReport, ScheduleError};
use crate::taxonomy::{ActionTaxonomy, TaxonomyError};
use crate::trace::{ProcessTrace, TraceEvent};
use crate::validate::{validate_trace, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("indel cost must lie in (0, 1], got {0}")]
    IndelCost(f64),
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("trace failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Weights of the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct DistanceConfig {
    alpha: f64,
    indel_cost: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    alpha: f64,
    indel_cost: f64,
}

impl TryFrom<RawConfig> for DistanceConfig {
    type Error = DistanceError;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        Self::new(raw.alpha, raw.indel_cost)
    }
}

impl From<DistanceConfig> for RawConfig {
    fn from(c: DistanceConfig) -> Self {
        Self {
            alpha: c.alpha,
            indel_cost: c.indel_cost,
        }
    }
}

impl DistanceConfig {
    pub const DEFAULT_ALPHA: f64 = 0.7;
    pub const DEFAULT_INDEL_COST: f64 = 1.0;

    pub fn new(alpha: f64, indel_cost: f64) -> Result<Self, DistanceError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(DistanceError::Alpha(alpha));
        }
        if !(indel_cost > 0.0 && indel_cost <= 1.0) {
            return Err(DistanceError::IndelCost(indel_cost));
        }
        Ok(Self { alpha, indel_cost })
    }

    /// Weight of the taxonomy term; `1 - alpha` weighs the duration term.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn indel_cost(&self) -> f64 {
        self.indel_cost
    }
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
            indel_cost: Self::DEFAULT_INDEL_COST,
        }
    }
}

/// Wu–Palmer dissimilarity `1 - 2·depth(lca) / (depth(a) + depth(b))`,
/// defined as 0 for identical actions.
pub fn taxonomy_distance(a: &str, b: &str, tax: &ActionTaxonomy) -> Result<f64, TaxonomyError> {
    let lca = tax.lca(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let da = f64::from(tax.depth(a)?);
    let db = f64::from(tax.depth(b)?);
    let dl = f64::from(tax.depth(lca)?);
    Ok(1.0 - 2.0 * dl / (da + db))
}

/// `|d1 - d2| / max(d1, d2)`, and 0 when both durations are 0.
pub fn temporal_penalty(d1_ms: u64, d2_ms: u64) -> f64 {
    let longest = d1_ms.max(d2_ms);
    if longest == 0 {
        return 0.0;
    }
    d1_ms.abs_diff(d2_ms) as f64 / longest as f64
}

/// Cost of aligning `e1` with `e2`, in `[0, 1]`. Start offsets are ignored;
/// lateness is reported by phase compliance instead.
pub fn event_substitution_cost(
    e1: &TraceEvent,
    e2: &TraceEvent,
    tax: &ActionTaxonomy,
    cfg: &DistanceConfig,
) -> Result<f64, TaxonomyError> {
    let semantic = taxonomy_distance(e1.action(), e2.action(), tax)?;
    let temporal = temporal_penalty(e1.duration_ms(), e2.duration_ms());
    Ok(cfg.alpha * semantic + (1.0 - cfg.alpha) * temporal)
}

/// Upper bound on the optimal alignment cost of an `n`×`m` problem.
///
/// The cheaper of "delete everything, insert everything" and "pair events
/// up, indel the rest". With `indel_cost = 1`, or when either side is empty,
/// this is exactly `indel_cost · max(n, m)`.
pub fn normalizer(n: usize, m: usize, indel_cost: f64) -> f64 {
    let (short, long) = (n.min(m) as f64, n.max(m) as f64);
    long * indel_cost + short * indel_cost.min(1.0 - indel_cost)
}

/// Round half up to a whole percent.
pub fn percent_display(distance: f64) -> u8 {
    (distance.clamp(0.0, 1.0) * 100.0 + 0.5).floor() as u8
}

/// `0.7612` → `"76%"`.
pub fn format_percent(distance: f64) -> String {
    format!("{}%", percent_display(distance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// One step of an edit script. `reference` indexes the gold events,
/// `candidate` the recorded ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
    pub cost: f64,
}

/// Cumulative DP costs, `(n + 1) × (m + 1)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl CostMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![0.0; rows * cols],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    fn set(&mut self, row: usize, col: usize, value: f64) {
        self.cells[row * self.cols + col] = value;
    }

    /// Bottom-right cell.
    pub fn total(&self) -> f64 {
        self.get(self.rows - 1, self.cols - 1)
    }

    /// Tab-separated table with action names along both edges.
    pub fn to_table(&self, reference: &[TraceEvent], candidate: &[TraceEvent]) -> String {
        let mut out = String::from("\t-");
        for e in candidate {
            write!(out, "\t{}", e.action()).unwrap();
        }
        out.push('\n');
        for i in 0..self.rows {
            out.push_str(if i == 0 { "-" } else { reference[i - 1].action() });
            for j in 0..self.cols {
                write!(out, "\t{:.4}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// A filled cost matrix and one optimal edit script through it.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub matrix: CostMatrix,
    pub script: Vec<EditOp>,
}

impl Alignment {
    pub fn raw_cost(&self) -> f64 {
        self.matrix.total()
    }
}

/// Weighted edit-distance DP over arbitrary costs.
///
/// `substitute(i, j)` prices aligning reference item `i` with candidate
/// item `j`; `same(i, j)` decides whether a zero-cost pairing is reported as
/// a match. On ties the traceback prefers substitution, then deletion, then
/// insertion.
pub fn align_with<E>(
    n: usize,
    m: usize,
    indel_cost: f64,
    mut substitute: impl FnMut(usize, usize) -> Result<f64, E>,
    same: impl Fn(usize, usize) -> bool,
) -> Result<Alignment, E> {
    let mut sub = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            sub[i * m + j] = substitute(i, j)?;
        }
    }

    let mut d = CostMatrix::new(n + 1, m + 1);
    for i in 1..=n {
        d.set(i, 0, d.get(i - 1, 0) + indel_cost);
    }
    for j in 1..=m {
        d.set(0, j, d.get(0, j - 1) + indel_cost);
    }
    for i in 1..=n {
        for j in 1..=m {
            let diagonal = d.get(i - 1, j - 1) + sub[(i - 1) * m + (j - 1)];
            let delete = d.get(i - 1, j) + indel_cost;
            let insert = d.get(i, j - 1) + indel_cost;
            d.set(i, j, diagonal.min(delete).min(insert));
        }
    }

    let mut script = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d.get(i, j);
        if i > 0 && j > 0 {
            let cost = sub[(i - 1) * m + (j - 1)];
            if d.get(i - 1, j - 1) + cost == here {
                let kind = if cost == 0.0 && same(i - 1, j - 1) {
                    EditKind::Match
                } else {
                    EditKind::Substitute
                };
                script.push(EditOp {
                    kind,
                    reference: Some(i - 1),
                    candidate: Some(j - 1),
                    cost,
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && (j == 0 || d.get(i - 1, j) + indel_cost == here) {
            script.push(EditOp {
                kind: EditKind::Delete,
                reference: Some(i - 1),
                candidate: None,
                cost: indel_cost,
            });
            i -= 1;
        } else {
            script.push(EditOp {
                kind: EditKind::Insert,
                reference: None,
                candidate: Some(j - 1),
                cost: indel_cost,
            });
            j -= 1;
        }
    }
    script.reverse();

    Ok(Alignment { matrix: d, script })
}

/// Aligns two event sequences under the semantic cost model.
pub fn align_events(
    reference: &[TraceEvent],
    candidate: &[TraceEvent],
    tax: &ActionTaxonomy,
    cfg: &DistanceConfig,
) -> Result<Alignment, TaxonomyError> {
    align_with(
        reference.len(),
        candidate.len(),
        cfg.indel_cost,
        |i, j| event_substitution_cost(&reference[i], &candidate[j], tax, cfg),
        |i, j| reference[i].action() == candidate[j].action(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: f64,
    pub percent_display: u8,
    pub raw_cost: f64,
    pub cost_matrix_dims: (usize, usize),
    pub optimal_script: Vec<EditOp>,
}

impl DistanceResult {
    fn from_alignment(alignment: &Alignment, indel_cost: f64) -> Self {
        let (rows, cols) = alignment.matrix.dims();
        let raw_cost = alignment.raw_cost();
        let distance = if rows == 1 && cols == 1 {
            0.0
        } else {
            (raw_cost / normalizer(rows - 1, cols - 1, indel_cost)).clamp(0.0, 1.0)
        };
        Self {
            distance,
            percent_display: percent_display(distance),
            raw_cost,
            cost_matrix_dims: (rows, cols),
            optimal_script: alignment.script.clone(),
        }
    }
}

impl fmt::Display for DistanceResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "distance {:.4} ({}%)", self.distance, self.percent_display)
    }
}

/// Normalized distance between two event sequences, without validation.
pub fn sequence_distance(
    reference: &[TraceEvent],
    candidate: &[TraceEvent],
    tax: &ActionTaxonomy,
    cfg: &DistanceConfig,
) -> Result<DistanceResult, TaxonomyError> {
    let alignment = align_events(reference, candidate, tax, cfg)?;
    Ok(DistanceResult::from_alignment(&alignment, cfg.indel_cost))
}

/// Validates `trace` and measures it against the gold trace.
pub fn trace_distance(
    trace: &ProcessTrace,
    gold: &GoldStandard,
    cfg: &DistanceConfig,
) -> Result<DistanceResult, ScoreError> {
    let violations = validate_trace(trace, gold);
    if !violations.is_empty() {
        return Err(ScoreError::Invalid(violations));
    }
    Ok(sequence_distance(
        &gold.trace().events,
        &trace.events,
        gold.taxonomy(),
        cfg,
    )?)
}

/// What the server returns for a submitted trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePayload {
    pub distance: f64,
    pub percent_display: u8,
    pub phase_report: Vec<PhaseReport>,
}

impl fmt::Display for ScorePayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "distance {:.4} ({}%)", self.distance, self.percent_display)
    }
}

pub fn score_payload(
    trace: &ProcessTrace,
    gold: &GoldStandard,
    cfg: &DistanceConfig,
) -> Result<(ScorePayload, DistanceResult), ScoreError> {
    let result = trace_distance(trace, gold, cfg)?;
    let phase_report = phase_compliance(trace, gold.schedule(), gold.taxonomy())?;
    Ok((
        ScorePayload {
            distance: result.distance,
            percent_display: result.percent_display,
            phase_report,
        },
        result,
    ))
}
