//! Debriefing statistics over the scored traces of one session.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_id: String,
    pub traces: usize,
    pub mean_distance: f64,
}

/// Per-group and session-wide mean distances, plus mean action durations.
///
/// The session mean averages every trace, not the group means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub session_id: String,
    pub trace_count: usize,
    pub per_group: Vec<GroupStats>,
    pub session_mean_distance: Option<f64>,
    pub per_action_mean_duration_ms: BTreeMap<String, f64>,
}

/// One scored trace as seen by the aggregator.
pub struct ScoredTrace<'a> {
    pub group_id: &'a str,
    pub distance: f64,
    pub events: &'a [TraceEvent],
}

impl SessionStats {
    /// Aggregates in input order; groups come out sorted by id.
    pub fn aggregate<'a>(
        session_id: impl Into<String>,
        traces: impl IntoIterator<Item = ScoredTrace<'a>>,
    ) -> Self {
        let mut groups: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        let mut durations: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        let mut count = 0;
        let mut total = 0.0;
        for t in traces {
            count += 1;
            total += t.distance;
            let g = groups.entry(t.group_id).or_default();
            g.0 += 1;
            g.1 += t.distance;
            for e in t.events {
                let d = durations.entry(e.action()).or_default();
                d.0 += 1;
                d.1 += e.duration_ms() as f64;
            }
        }
        Self {
            session_id: session_id.into(),
            trace_count: count,
            per_group: groups
                .into_iter()
                .map(|(group_id, (k, sum))| GroupStats {
                    group_id: group_id.to_string(),
                    traces: k,
                    mean_distance: sum / k as f64,
                })
                .collect(),
            session_mean_distance: (count > 0).then(|| total / count as f64),
            per_action_mean_duration_ms: durations
                .into_iter()
                .map(|(action, (k, sum))| (action.to_string(), sum / k as f64))
                .collect(),
        }
    }

    pub fn group(&self, group_id: &str) -> Option<&GroupStats> {
        self.per_group.iter().find(|g| g.group_id == group_id)
    }
}
