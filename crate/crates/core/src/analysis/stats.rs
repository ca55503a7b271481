use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::Rng;

use super::AnalysisError;
use crate::graph::NodeId;

/// Gini coefficient of non-negative values; 0 when all are zero.
pub fn concentration(values: &[f64]) -> Result<f64, AnalysisError> {
    if values.is_empty() || values.iter().any(|&v| v.is_nan() || v < 0.0 || !v.is_finite()) {
        return Err(AnalysisError::InvalidValues);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| (2.0 * (k as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok(weighted / (n * total))
}

/// Total-variation distance `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &ix in &order[start..end] {
            ranks[ix] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(AnalysisError::DegenerateVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    assert_eq!(x.len(), y.len(), "paired series");
    if x.len() < 2 {
        return Err(AnalysisError::DegenerateVariance);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// A node's flame-rank value at an evaluation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankObservation {
    pub t: u64,
    pub node: NodeId,
    pub v: f64,
}

fn pooled_pairs<'a>(
    observations: impl IntoIterator<Item = &'a RankObservation>,
    infections: &BTreeMap<NodeId, u64>,
    horizon: u64,
    xs: &mut Vec<f64>,
    ys: &mut Vec<f64>,
) {
    for o in observations {
        let target = match infections.get(&o.node) {
            Some(&ti) if ti <= o.t => continue,
            Some(&ti) => ti <= o.t + horizon,
            None => false,
        };
        xs.push(o.v);
        ys.push(if target { 1.0 } else { 0.0 });
    }
}

/// Spearman correlation between `v_t(i)` and the indicator that `i` is
/// infected within `(t, t + horizon]`, pooled over all observations. Nodes
/// already infected at `t` are skipped. `infections` maps each node to its
/// infection time.
pub fn ignition_score(
    observations: &[RankObservation],
    infections: &BTreeMap<NodeId, u64>,
    horizon: u64,
) -> Result<f64, AnalysisError> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    pooled_pairs(observations, infections, horizon, &mut xs, &mut ys);
    if xs.len() < 2 {
        return Err(AnalysisError::DegenerateVariance);
    }
    spearman(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgnitionScore {
    pub score: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bootstrap replicates with non-degenerate variance.
    pub replicates: usize,
}

/// [`ignition_score`] with a percentile bootstrap confidence interval that
/// resamples evaluation times with replacement.
pub fn ignition_bootstrap<R: Rng + ?Sized>(
    observations: &[RankObservation],
    infections: &BTreeMap<NodeId, u64>,
    horizon: u64,
    replicates: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<IgnitionScore, AnalysisError> {
    let score = ignition_score(observations, infections, horizon)?;
    let mut by_time: BTreeMap<u64, Vec<RankObservation>> = BTreeMap::new();
    for o in observations {
        by_time.entry(o.t).or_default().push(*o);
    }
    let groups: Vec<Vec<RankObservation>> = by_time.into_values().collect();
    let mut stats = Vec::with_capacity(replicates);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for _ in 0..replicates {
        xs.clear();
        ys.clear();
        for _ in 0..groups.len() {
            let g = &groups[rng.random_range(0..groups.len())];
            pooled_pairs(g, infections, horizon, &mut xs, &mut ys);
        }
        if xs.len() >= 2 {
            if let Ok(s) = spearman(&xs, &ys) {
                stats.push(s);
            }
        }
    }
    if stats.is_empty() {
        return Err(AnalysisError::DegenerateVariance);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    let pick = |q: f64| {
        let ix = libm::floor(q * (stats.len() - 1) as f64 + 0.5) as usize;
        stats[ix.min(stats.len() - 1)]
    };
    Ok(IgnitionScore {
        score,
        ci_low: pick(alpha),
        ci_high: pick(1.0 - alpha),
        replicates: stats.len(),
    })
}
