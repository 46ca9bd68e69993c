//! Brute-force reference for the trace distance.
//!
//! Nothing here calls into the DP: taxonomy distance comes from explicit
//! ancestor sets, and the alignment cost is the minimum over every edit
//! script, each one spelled out.

#![allow(dead_code)]

use nrts_core::{ActionTaxonomy, TraceEvent};

/// `id` first, root last.
pub fn ancestors(tax: &ActionTaxonomy, id: &str) -> Vec<String> {
    let mut chain = vec![id.to_string()];
    let mut cursor = id.to_string();
    while let Some(parent) = tax.parent(&cursor).unwrap() {
        chain.push(parent.to_string());
        cursor = parent.to_string();
    }
    chain
}

pub fn wu_palmer(tax: &ActionTaxonomy, a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    let up_a = ancestors(tax, a);
    let up_b = ancestors(tax, b);
    let depth = |x: &str| (ancestors(tax, x).len() - 1) as f64;
    let deepest_common = up_a
        .iter()
        .filter(|x| up_b.contains(x))
        .map(|x| depth(x))
        .fold(f64::NEG_INFINITY, f64::max);
    1.0 - 2.0 * deepest_common / (depth(a) + depth(b))
}

pub fn substitution(tax: &ActionTaxonomy, alpha: f64, x: &TraceEvent, y: &TraceEvent) -> f64 {
    let (dx, dy) = (x.duration_ms() as f64, y.duration_ms() as f64);
    let temporal = if dx == 0.0 && dy == 0.0 {
        0.0
    } else {
        (dx - dy).abs() / dx.max(dy)
    };
    alpha * wu_palmer(tax, x.action(), y.action()) + (1.0 - alpha) * temporal
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Pair(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// Every edit script turning `n` reference items into `m` candidate items.
pub fn all_scripts(n: usize, m: usize) -> Vec<Vec<Step>> {
    fn walk(i: usize, j: usize, n: usize, m: usize, prefix: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
        if i == n && j == m {
            out.push(prefix.clone());
            return;
        }
        if i < n && j < m {
            prefix.push(Step::Pair(i, j));
            walk(i + 1, j + 1, n, m, prefix, out);
            prefix.pop();
        }
        if i < n {
            prefix.push(Step::Delete(i));
            walk(i + 1, j, n, m, prefix, out);
            prefix.pop();
        }
        if j < m {
            prefix.push(Step::Insert(j));
            walk(i, j + 1, n, m, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(0, 0, n, m, &mut Vec::new(), &mut out);
    out
}

pub fn script_cost(
    script: &[Step],
    reference: &[TraceEvent],
    candidate: &[TraceEvent],
    tax: &ActionTaxonomy,
    alpha: f64,
    indel: f64,
) -> f64 {
    script
        .iter()
        .map(|s| match *s {
            Step::Pair(i, j) => substitution(tax, alpha, &reference[i], &candidate[j]),
            Step::Delete(_) | Step::Insert(_) => indel,
        })
        .sum()
}

pub fn min_script_cost(
    reference: &[TraceEvent],
    candidate: &[TraceEvent],
    tax: &ActionTaxonomy,
    alpha: f64,
    indel: f64,
) -> f64 {
    all_scripts(reference.len(), candidate.len())
        .iter()
        .map(|s| script_cost(s, reference, candidate, tax, alpha, indel))
        .fold(f64::INFINITY, f64::min)
}

/// Cost of the cheaper of two trivial scripts: pair everything pairable
/// at unit cost, or delete and insert everything.
pub fn worst_case_bound(n: usize, m: usize, indel: f64) -> f64 {
    let paired = n.min(m) as f64 + (n.max(m) - n.min(m)) as f64 * indel;
    let scrapped = (n + m) as f64 * indel;
    paired.min(scrapped)
}

pub fn brute_force_distance(
    reference: &[TraceEvent],
    candidate: &[TraceEvent],
    tax: &ActionTaxonomy,
    alpha: f64,
    indel: f64,
) -> f64 {
    if reference.is_empty() && candidate.is_empty() {
        return 0.0;
    }
    min_script_cost(reference, candidate, tax, alpha, indel)
        / worst_case_bound(reference.len(), candidate.len(), indel)
}

/// Random time-ordered events over every taxonomy node.
pub fn random_events(rng: &mut impl rand::Rng, tax: &ActionTaxonomy, max_len: usize) -> Vec<TraceEvent> {
    let ids: Vec<&str> = tax.ids().collect();
    let len = rng.random_range(0..=max_len);
    let mut start = 0u64;
    (0..len)
        .map(|_| {
            start += rng.random_range(0..20_000);
            let duration = match rng.random_range(0..4) {
                0 => 0,
                1 => 30_000,
                _ => rng.random_range(0..60_000),
            };
            let action = ids[rng.random_range(0..ids.len())];
            TraceEvent::new(action, start, start + duration).unwrap()
        })
        .collect()
}
