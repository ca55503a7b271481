use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::AnalysisError;
use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Series {
    first: u64,
    last: u64,
    ones: Vec<u64>,
}

/// Per-node inclusion indicators over a run: the span of steps each node was
/// observed alive and the steps at which it was in the sample. Ids are never
/// reused, so a node's alive steps form one contiguous span.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndicatorLog {
    series: BTreeMap<NodeId, Series>,
}

impl IndicatorLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records step `t`: `live` were alive and `sample` had `Z = 1`. Steps
    /// must be recorded in increasing order.
    pub fn record(&mut self, t: u64, live: &[NodeId], sample: &BTreeSet<NodeId>) {
        for &i in live {
            let s = self.series.entry(i).or_insert(Series { first: t, last: t, ones: Vec::new() });
            s.last = t;
        }
        for i in sample {
            if let Some(s) = self.series.get_mut(i) {
                s.ones.push(t);
            }
        }
    }

    /// Declares `node` alive over `[first, last]` without any inclusions;
    /// used when rebuilding a log from files.
    pub fn mark_alive(&mut self, node: NodeId, first: u64, last: u64) {
        let s = self.series.entry(node).or_insert(Series { first, last, ones: Vec::new() });
        s.first = s.first.min(first);
        s.last = s.last.max(last);
    }

    /// Adds one inclusion of a node already marked alive at `t`; `t` must not
    /// precede the node's earlier inclusions.
    pub fn mark_included(&mut self, node: NodeId, t: u64) {
        let s = self.series.entry(node).or_insert(Series { first: t, last: t, ones: Vec::new() });
        s.first = s.first.min(t);
        s.last = s.last.max(t);
        s.ones.push(t);
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.series.keys().copied()
    }

    /// `(first, last)` observed alive step.
    pub fn span(&self, i: NodeId) -> Option<(u64, u64)> {
        self.series.get(&i).map(|s| (s.first, s.last))
    }

    /// Last step recorded for any node.
    pub fn last_step(&self) -> Option<u64> {
        self.series.values().map(|s| s.last).max()
    }

    pub fn first_step(&self) -> Option<u64> {
        self.series.values().map(|s| s.first).min()
    }
}

/// Per-node mean of `Z` over `[t_a, t_b]`, counting only steps where the
/// node was alive. Nodes not alive in the window are omitted.
pub fn empirical_inclusion(log: &IndicatorLog, window: (u64, u64)) -> Result<BTreeMap<NodeId, f64>, AnalysisError> {
    let (a, b) = window;
    if a > b {
        return Err(AnalysisError::EmptyWindow);
    }
    let mut out = BTreeMap::new();
    for (&i, s) in &log.series {
        let lo = s.first.max(a);
        let hi = s.last.min(b);
        if lo > hi {
            continue;
        }
        let alive = hi - lo + 1;
        let from = s.ones.partition_point(|&t| t < lo);
        let to = s.ones.partition_point(|&t| t <= hi);
        out.insert(i, (to - from) as f64 / alive as f64);
    }
    if out.is_empty() {
        return Err(AnalysisError::EmptyWindow);
    }
    Ok(out)
}
