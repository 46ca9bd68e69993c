//! Python bindings: `import nrts`.
//!
//! Traces and bundles cross the boundary as JSON text; results come back as
//! plain Python objects.

use std::path::PathBuf;

use chrono::Utc;
use pyo3::create_exception;
use pyo3::exceptions::{PyLookupError, PyOSError, PyValueError};
use pyo3::prelude::*;

use nrts_core::generate::{self, CorpusSpec, NoiseKind, NoiseModel};
use nrts_core::texc::{self, EditKind};
use nrts_core::{
    validate_trace, BundleDocument, ScoreError, SessionId, StoreError, Violation, WireTrace,
};

create_exception!(nrts, ValidationError, PyValueError, "Trace failed validation; `args[1]` lists the violations.");

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    json_to_py(py, &serde_json::to_string(value).expect("serializable"))
}

fn validation_error(py: Python<'_>, violations: &[Violation]) -> PyErr {
    let summary = violations.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; ");
    match to_py(py, &violations) {
        Ok(list) => ValidationError::new_err((summary, list)),
        Err(e) => e,
    }
}

fn score_error(py: Python<'_>, e: ScoreError) -> PyErr {
    match e {
        ScoreError::Invalid(v) => validation_error(py, &v),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn store_error(py: Python<'_>, e: StoreError) -> PyErr {
    match e {
        StoreError::NotFound(what) => PyLookupError::new_err(format!("{what} not found")),
        StoreError::Io { .. } => PyOSError::new_err(e.to_string()),
        StoreError::Score(s) => score_error(py, s),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_trace(py: Python<'_>, text: &str) -> PyResult<nrts_core::ProcessTrace> {
    let wire = WireTrace::from_json(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    wire.into_trace().map_err(|v| validation_error(py, &v))
}

/// Weights of the trace distance.
#[pyclass(frozen, from_py_object, module = "nrts")]
#[derive(Clone, Copy)]
struct DistanceConfig(nrts_core::DistanceConfig);

#[pymethods]
impl DistanceConfig {
    #[new]
    #[pyo3(signature = (alpha = nrts_core::DistanceConfig::DEFAULT_ALPHA, indel_cost = nrts_core::DistanceConfig::DEFAULT_INDEL_COST))]
    fn new(alpha: f64, indel_cost: f64) -> PyResult<Self> {
        nrts_core::DistanceConfig::new(alpha, indel_cost)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn indel_cost(&self) -> f64 {
        self.0.indel_cost()
    }

    fn __repr__(&self) -> String {
        format!("DistanceConfig(alpha={}, indel_cost={})", self.0.alpha(), self.0.indel_cost())
    }
}

fn config_or_default(config: Option<DistanceConfig>) -> nrts_core::DistanceConfig {
    config.map(|c| c.0).unwrap_or_default()
}

#[pyclass(frozen, skip_from_py_object, module = "nrts")]
#[derive(Clone)]
struct Taxonomy(nrts_core::ActionTaxonomy);

#[pymethods]
impl Taxonomy {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        nrts_core::ActionTaxonomy::parse(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn root(&self) -> String {
        self.0.root().to_string()
    }

    fn ids(&self) -> Vec<String> {
        self.0.ids().map(str::to_string).collect()
    }

    fn depth(&self, id: &str) -> PyResult<u32> {
        self.0.depth(id).map_err(|e| PyLookupError::new_err(e.to_string()))
    }

    fn parent(&self, id: &str) -> PyResult<Option<String>> {
        self.0
            .parent(id)
            .map(|p| p.map(str::to_string))
            .map_err(|e| PyLookupError::new_err(e.to_string()))
    }

    fn lca(&self, a: &str, b: &str) -> PyResult<String> {
        self.0
            .lca(a, b)
            .map(str::to_string)
            .map_err(|e| PyLookupError::new_err(e.to_string()))
    }

    /// Wu–Palmer dissimilarity between two actions.
    fn distance(&self, a: &str, b: &str) -> PyResult<f64> {
        texc::taxonomy_distance(a, b, &self.0).map_err(|e| PyLookupError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __contains__(&self, id: &str) -> bool {
        self.0.contains(id)
    }
}

#[pyclass(frozen, skip_from_py_object, module = "nrts")]
#[derive(Clone)]
struct GoldStandard(nrts_core::GoldStandard);

#[pymethods]
impl GoldStandard {
    /// The bundled neonatal resuscitation gold standard.
    #[staticmethod]
    fn default() -> Self {
        Self(nrts_core::GoldStandard::default_bundle())
    }

    #[staticmethod]
    fn load_dir(path: PathBuf) -> PyResult<Self> {
        nrts_core::GoldStandard::load_dir(&path)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Bundle as a single JSON object with `taxonomy`, `schedule`,
    /// `checklist` and `trace` members.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: BundleDocument = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        nrts_core::GoldStandard::from_document(doc)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0.to_document()).expect("bundle serializes")
    }

    fn write_dir(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_dir(&path).map_err(|e| PyOSError::new_err(e.to_string()))
    }

    #[getter]
    fn taxonomy(&self) -> Taxonomy {
        Taxonomy(self.0.taxonomy().clone())
    }

    #[getter]
    fn checklist(&self) -> Vec<String> {
        self.0.checklist_definition().to_vec()
    }

    fn trace_json(&self) -> String {
        WireTrace::from(self.0.trace()).to_json()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

#[pyclass(frozen, get_all, module = "nrts")]
struct DistanceResult {
    distance: f64,
    percent_display: u8,
    raw_cost: f64,
    cost_matrix_dims: (usize, usize),
    /// `(kind, reference_index, candidate_index, cost)` per step.
    script: Vec<(String, Option<usize>, Option<usize>, f64)>,
}

impl From<texc::DistanceResult> for DistanceResult {
    fn from(r: texc::DistanceResult) -> Self {
        let kind = |k: EditKind| match k {
            EditKind::Match => "match",
            EditKind::Substitute => "substitute",
            EditKind::Delete => "delete",
            EditKind::Insert => "insert",
        };
        Self {
            distance: r.distance,
            percent_display: r.percent_display,
            raw_cost: r.raw_cost,
            cost_matrix_dims: r.cost_matrix_dims,
            script: r
                .optimal_script
                .iter()
                .map(|op| (kind(op.kind).to_string(), op.reference, op.candidate, op.cost))
                .collect(),
        }
    }
}

#[pymethods]
impl DistanceResult {
    fn __repr__(&self) -> String {
        format!("DistanceResult(distance={:.4}, percent_display={})", self.distance, self.percent_display)
    }
}

/// Distance of a trace (JSON text) from the gold trace.
#[pyfunction]
#[pyo3(signature = (trace, gold, config = None))]
fn trace_distance(py: Python<'_>, trace: &str, gold: &GoldStandard, config: Option<DistanceConfig>) -> PyResult<DistanceResult> {
    let trace = parse_trace(py, trace)?;
    texc::trace_distance(&trace, &gold.0, &config_or_default(config))
        .map(Into::into)
        .map_err(|e| score_error(py, e))
}

/// `{distance, percent_display, phase_report}`, as the server returns it.
#[pyfunction]
#[pyo3(signature = (trace, gold, config = None))]
fn score(py: Python<'_>, trace: &str, gold: &GoldStandard, config: Option<DistanceConfig>) -> PyResult<Py<PyAny>> {
    let trace = parse_trace(py, trace)?;
    let (payload, _) =
        nrts_core::score_payload(&trace, &gold.0, &config_or_default(config)).map_err(|e| score_error(py, e))?;
    to_py(py, &payload)
}

/// Violations of a trace against a gold bundle; empty when valid.
#[pyfunction]
fn validate(py: Python<'_>, trace: &str, gold: &GoldStandard) -> PyResult<Py<PyAny>> {
    let wire = WireTrace::from_json(trace).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let violations = match wire.into_trace() {
        Ok(t) => validate_trace(&t, &gold.0),
        Err(v) => v,
    };
    to_py(py, &violations)
}

#[pyfunction]
fn format_percent(distance: f64) -> String {
    nrts_core::format_percent(distance)
}

#[pyfunction]
fn mint_session_id() -> String {
    SessionId::mint().to_string()
}

/// Seeded noisy copies of the gold trace as `(file_name, json)` pairs.
#[pyfunction]
#[pyo3(signature = (gold, groups, traces_per_group, noise, seed = 0, kinds = None, session_id = None))]
fn generate_corpus(
    gold: &GoldStandard,
    groups: usize,
    traces_per_group: usize,
    noise: f64,
    seed: u64,
    kinds: Option<Vec<String>>,
    session_id: Option<String>,
) -> PyResult<Vec<(String, String)>> {
    let kinds = match kinds {
        None => NoiseKind::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| match n.as_str() {
                "drop" => Ok(NoiseKind::Drop),
                "perturb" => Ok(NoiseKind::Perturb),
                "swap" => Ok(NoiseKind::Swap),
                other => Err(PyValueError::new_err(format!("unknown noise kind `{other}`"))),
            })
            .collect::<PyResult<_>>()?,
    };
    let session_id = session_id
        .map(|s| s.parse::<SessionId>())
        .transpose()
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let spec = CorpusSpec {
        groups,
        traces_per_group,
        noise: NoiseModel::new(noise, kinds).map_err(|e| PyValueError::new_err(e.to_string()))?,
        seed,
        session_id,
    };
    let traces = generate::generate(&gold.0, &spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(traces
        .into_iter()
        .map(|t| (t.file_name, WireTrace::from(&t.trace).to_json()))
        .collect())
}

/// File-backed session store, the same layout the server uses.
#[pyclass(frozen, module = "nrts")]
struct SessionStore(nrts_core::SessionStore);

#[pymethods]
impl SessionStore {
    #[new]
    fn open(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        nrts_core::SessionStore::open(path)
            .map(Self)
            .map_err(|e| store_error(py, e))
    }

    fn create_session(&self, py: Python<'_>) -> PyResult<String> {
        let id = SessionId::mint();
        py.detach(|| self.0.create_session(&id, Utc::now()))
            .map_err(|e| store_error(py, e))?;
        Ok(id.to_string())
    }

    fn session_ids(&self, py: Python<'_>) -> PyResult<Vec<String>> {
        let ids = py.detach(|| self.0.session_ids()).map_err(|e| store_error(py, e))?;
        Ok(ids.into_iter().map(|i| i.to_string()).collect())
    }

    fn put_gold(&self, py: Python<'_>, gold: &GoldStandard) -> PyResult<u64> {
        py.detach(|| self.0.put_gold(&gold.0)).map_err(|e| store_error(py, e))
    }

    /// `(revision, gold)` of the active bundle, or `None`.
    fn active_gold(&self, py: Python<'_>) -> PyResult<Option<(u64, GoldStandard)>> {
        let active = py.detach(|| self.0.active_gold()).map_err(|e| store_error(py, e))?;
        Ok(active.map(|(rev, g)| (rev, GoldStandard((*g).clone()))))
    }

    /// Scores a trace against the active gold and stores it. Returns the
    /// same object as a successful `POST /api/v1/traces`.
    #[pyo3(signature = (trace, config = None))]
    fn submit(&self, py: Python<'_>, trace: &str, config: Option<DistanceConfig>) -> PyResult<Py<PyAny>> {
        let mut trace = parse_trace(py, trace)?;
        let cfg = config_or_default(config);
        let (revision, gold) = py
            .detach(|| self.0.active_gold())
            .map_err(|e| store_error(py, e))?
            .ok_or_else(|| PyLookupError::new_err("no gold standard is installed"))?;
        let session_id = trace.session_id.get_or_insert_with(SessionId::mint).clone();
        trace.recorded_at.get_or_insert_with(Utc::now);
        let (payload, result) = nrts_core::score_payload(&trace, &gold, &cfg).map_err(|e| score_error(py, e))?;
        let put = py
            .detach(|| self.0.put_trace(&trace, &result, revision, cfg))
            .map_err(|e| store_error(py, e))?;
        to_py(
            py,
            &serde_json::json!({
                "session_id": session_id,
                "trace_id": put.trace_id,
                "distance": payload.distance,
                "percent_display": payload.percent_display,
                "phase_report": payload.phase_report,
            }),
        )
    }

    fn stats(&self, py: Python<'_>, session_id: &str) -> PyResult<Py<PyAny>> {
        let id = parse_session(session_id)?;
        let stats = py.detach(|| self.0.get_stats(&id)).map_err(|e| store_error(py, e))?;
        to_py(py, &stats)
    }

    fn recompute_stats(&self, py: Python<'_>, session_id: &str) -> PyResult<Py<PyAny>> {
        let id = parse_session(session_id)?;
        let stats = py.detach(|| self.0.recompute_stats(&id)).map_err(|e| store_error(py, e))?;
        to_py(py, &stats)
    }
}

fn parse_session(raw: &str) -> PyResult<SessionId> {
    raw.parse().map_err(|e: nrts_core::TraceError| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn nrts(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add_class::<DistanceConfig>()?;
    m.add_class::<Taxonomy>()?;
    m.add_class::<GoldStandard>()?;
    m.add_class::<DistanceResult>()?;
    m.add_class::<SessionStore>()?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(format_percent, m)?)?;
    m.add_function(wrap_pyfunction!(mint_session_id, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    Ok(())
}
