//! Seeded synthetic traces: the gold trace with per-event noise.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gold::GoldStandard;
use crate::trace::{ProcessTrace, SessionId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("noise probability must lie in [0, 1], got {0}")]
    Probability(f64),
    #[error("at least one noise kind must be enabled")]
    NoKinds,
    #[error("groups and traces per group must be at least 1")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    /// Leave the event out.
    Drop,
    /// Scale the duration by `1 ± u`, `u ~ U[0, 0.5)`.
    Perturb,
    /// Replace the action with a random taxonomy sibling.
    Swap,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Drop, NoiseKind::Perturb, NoiseKind::Swap];
}

/// Each gold event is independently hit with probability `probability`; a
/// hit applies one of `kinds`, chosen uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    probability: f64,
    kinds: Vec<NoiseKind>,
}

impl NoiseModel {
    pub fn new(probability: f64, kinds: Vec<NoiseKind>) -> Result<Self, GenerateError> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(GenerateError::Probability(probability));
        }
        if kinds.is_empty() {
            return Err(GenerateError::NoKinds);
        }
        Ok(Self { probability, kinds })
    }

    pub fn uniform(probability: f64) -> Result<Self, GenerateError> {
        Self::new(probability, NoiseKind::ALL.to_vec())
    }

    /// Applies the model to the gold trace once.
    pub fn perturb(&self, gold: &GoldStandard, rng: &mut impl Rng) -> ProcessTrace {
        let mut trace = gold.trace().clone();
        trace.events.clear();
        for event in &gold.trace().events {
            if !rng.random_bool(self.probability) {
                trace.events.push(event.clone());
                continue;
            }
            match *self.kinds.choose(rng).expect("non-empty") {
                NoiseKind::Drop => {}
                NoiseKind::Perturb => {
                    let u: f64 = rng.random_range(0.0..0.5);
                    let factor = if rng.random_bool(0.5) { 1.0 + u } else { 1.0 - u };
                    let duration = (event.duration_ms() as f64 * factor).round() as u64;
                    trace.events.push(event.with_duration(duration));
                }
                NoiseKind::Swap => {
                    let siblings = gold.taxonomy().siblings(event.action()).unwrap_or_default();
                    match siblings.choose(rng) {
                        Some(&other) => trace.events.push(event.with_action(other)),
                        None => trace.events.push(event.clone()),
                    }
                }
            }
        }
        trace
    }
}

/// Corpus parameters for [`generate`].
#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub groups: usize,
    pub traces_per_group: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    pub session_id: Option<SessionId>,
}

/// A generated trace and its suggested file name.
#[derive(Debug, Clone)]
pub struct GeneratedTrace {
    pub file_name: String,
    pub trace: ProcessTrace,
}

pub fn group_id(group: usize) -> String {
    format!("group-{:02}", group + 1)
}

/// `groups × traces_per_group` traces, group-major. Deterministic in `seed`.
pub fn generate(gold: &GoldStandard, spec: &CorpusSpec) -> Result<Vec<GeneratedTrace>, GenerateError> {
    if spec.groups == 0 || spec.traces_per_group == 0 {
        return Err(GenerateError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.groups * spec.traces_per_group);
    for g in 0..spec.groups {
        for k in 0..spec.traces_per_group {
            let mut trace = spec.noise.perturb(gold, &mut rng);
            trace.group_id = group_id(g);
            trace.session_id = spec.session_id.clone();
            trace.notes = String::new();
            trace.recorded_at = None;
            out.push(GeneratedTrace {
                file_name: format!("{}-trace-{:02}.json", trace.group_id, k + 1),
                trace,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::texc::{trace_distance, DistanceConfig};
    use crate::wire::WireTrace;

    fn spec(p: f64, kinds: Vec<NoiseKind>, seed: u64) -> CorpusSpec {
        CorpusSpec {
            groups: 3,
            traces_per_group: 2,
            noise: NoiseModel::new(p, kinds).unwrap(),
            seed,
            session_id: None,
        }
    }

    fn render(traces: &[GeneratedTrace]) -> Vec<(String, String)> {
        traces
            .iter()
            .map(|t| (t.file_name.clone(), WireTrace::from(&t.trace).to_json()))
            .collect()
    }

    #[test]
    fn zero_noise_reproduces_gold() {
        let gold = GoldStandard::default_bundle();
        let traces = generate(&gold, &spec(0.0, NoiseKind::ALL.to_vec(), 1)).unwrap();
        assert_eq!(traces.len(), 6);
        for t in &traces {
            let r = trace_distance(&t.trace, &gold, &DistanceConfig::default()).unwrap();
            assert_eq!(r.distance, 0.0);
        }
        assert_eq!(traces[0].file_name, "group-01-trace-01.json");
        assert_eq!(traces[5].file_name, "group-03-trace-02.json");
    }

    #[test]
    fn same_seed_same_bytes() {
        let gold = GoldStandard::default_bundle();
        let a = generate(&gold, &spec(0.5, NoiseKind::ALL.to_vec(), 42)).unwrap();
        let b = generate(&gold, &spec(0.5, NoiseKind::ALL.to_vec(), 42)).unwrap();
        let c = generate(&gold, &spec(0.5, NoiseKind::ALL.to_vec(), 43)).unwrap();
        assert_eq!(render(&a), render(&b));
        assert_ne!(render(&a), render(&c));
    }

    #[test]
    fn certain_drop_empties_every_trace() {
        let gold = GoldStandard::default_bundle();
        let traces = generate(&gold, &spec(1.0, vec![NoiseKind::Drop], 7)).unwrap();
        for t in &traces {
            assert!(t.trace.events.is_empty());
            let r = trace_distance(&t.trace, &gold, &DistanceConfig::default()).unwrap();
            assert_eq!(r.distance, 1.0);
        }
    }

    #[test]
    fn perturb_keeps_starts_and_bounds_durations() {
        let gold = GoldStandard::default_bundle();
        let traces = generate(&gold, &spec(1.0, vec![NoiseKind::Perturb], 3)).unwrap();
        for t in &traces {
            for (e, g) in t.trace.events.iter().zip(&gold.trace().events) {
                assert_eq!(e.action(), g.action());
                assert_eq!(e.start_ms(), g.start_ms());
                let ratio = e.duration_ms() as f64 / g.duration_ms() as f64;
                assert!((0.5..=1.5).contains(&ratio), "{ratio}");
            }
        }
    }

    #[test]
    fn swap_picks_a_sibling() {
        let gold = GoldStandard::default_bundle();
        let traces = generate(&gold, &spec(1.0, vec![NoiseKind::Swap], 5)).unwrap();
        let tax = gold.taxonomy();
        for t in &traces {
            for (e, g) in t.trace.events.iter().zip(&gold.trace().events) {
                assert_ne!(e.action(), g.action());
                assert_eq!(tax.parent(e.action()).unwrap(), tax.parent(g.action()).unwrap());
            }
        }
    }

    #[test]
    fn parameter_checks() {
        assert_eq!(NoiseModel::uniform(1.5), Err(GenerateError::Probability(1.5)));
        assert_eq!(NoiseModel::new(0.5, vec![]), Err(GenerateError::NoKinds));
        let gold = GoldStandard::default_bundle();
        let mut s = spec(0.1, NoiseKind::ALL.to_vec(), 0);
        s.groups = 0;
        assert_eq!(generate(&gold, &s).unwrap_err(), GenerateError::EmptyCorpus);
    }
}
