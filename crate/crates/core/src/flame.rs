//! Flame rank: smoothed inclusion indicators.
//!
//! Each live node carries a 0/1 inclusion series `Z_t(i)`. Three smoothers
//! turn it into a score `v_t(i)`:
//!
//! * EWMA, `v_t = lambda * v_{t-1} + (1 - lambda) * Z_t`, starting from 0 at
//!   birth;
//! * a lag-`L` window `v_t = sum_{j=0..L} theta_j Z_{t-j}` with equal or
//!   half-normal weights, counting lags before birth as zeros;
//! * the cumulative mean over the node's lifetime.
//!
//! The cumulative mean is tracked for every node whatever the smoother.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FlameError {
    #[error("EWMA weight must satisfy |lambda| < 1 (got {0})")]
    Lambda(f64),
    #[error("half-normal sigma must be positive (got {0})")]
    Sigma(f64),
    #[error("window weights must be non-empty")]
    EmptyWindow,
}

pub const DEFAULT_LAMBDA: f64 = 0.95;

pub fn ewma_update(v_prev: f64, lambda: f64, z: bool) -> Result<f64, FlameError> {
    check_lambda(lambda)?;
    Ok(ewma_unchecked(v_prev, lambda, z))
}

#[inline]
fn ewma_unchecked(v_prev: f64, lambda: f64, z: bool) -> f64 {
    lambda * v_prev + (1.0 - lambda) * if z { 1.0 } else { 0.0 }
}

fn check_lambda(lambda: f64) -> Result<(), FlameError> {
    if lambda.is_finite() && lambda.abs() < 1.0 {
        Ok(())
    } else {
        Err(FlameError::Lambda(lambda))
    }
}

/// `theta_j = 1 / (L + 1)` for `j = 0..=L`.
pub fn equal_weights(lags: usize) -> Vec<f64> {
    let n = lags + 1;
    alloc::vec![1.0 / n as f64; n]
}

/// `theta_j = exp(-j^2 / 2 sigma^2) / sum_k exp(-k^2 / 2 sigma^2)` for
/// `j = 0..=L`.
pub fn half_normal_weights(lags: usize, sigma: f64) -> Result<Vec<f64>, FlameError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(FlameError::Sigma(sigma));
    }
    let raw: Vec<f64> = (0..=lags)
        .map(|j| {
            let j = j as f64;
            libm::exp(-(j * j) / (2.0 * sigma * sigma))
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Dot product of a newest-first indicator history with `weights`; missing
/// lags count as zero.
pub fn windowed_value<I>(history: I, weights: &[f64]) -> f64
where
    I: IntoIterator<Item = bool>,
{
    history
        .into_iter()
        .zip(weights)
        .filter(|(z, _)| *z)
        .map(|(_, w)| w)
        .sum()
}

/// Fraction of alive steps spent in the sample; 0 for a node never observed.
pub fn cumulative_mean(cum_sum: u64, steps_alive: u64) -> f64 {
    if steps_alive == 0 {
        0.0
    } else {
        cum_sum as f64 / steps_alive as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Smoother {
    Ewma { lambda: f64 },
    Window { weights: Vec<f64> },
    Cumulative,
}

impl Default for Smoother {
    fn default() -> Self {
        Smoother::Ewma { lambda: DEFAULT_LAMBDA }
    }
}

impl Smoother {
    pub fn ewma(lambda: f64) -> Result<Self, FlameError> {
        check_lambda(lambda)?;
        Ok(Smoother::Ewma { lambda })
    }

    pub fn equal_window(lags: usize) -> Self {
        Smoother::Window { weights: equal_weights(lags) }
    }

    pub fn half_normal_window(lags: usize, sigma: f64) -> Result<Self, FlameError> {
        Ok(Smoother::Window { weights: half_normal_weights(lags, sigma)? })
    }

    fn window_len(&self) -> usize {
        match self {
            Smoother::Window { weights } => weights.len(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct NodeRank {
    v: f64,
    history: VecDeque<bool>,
    cum_sum: u64,
    steps_alive: u64,
}

/// Final values of a node that left the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retired {
    pub node: NodeId,
    /// Time of the first update that no longer saw the node alive.
    pub t: u64,
    pub v: f64,
    pub cum_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankState {
    smoother: Smoother,
    nodes: BTreeMap<NodeId, NodeRank>,
    retired: Vec<Retired>,
}

impl RankState {
    pub fn new(smoother: Smoother) -> Self {
        Self {
            smoother,
            ..Self::default()
        }
    }

    pub fn smoother(&self) -> &Smoother {
        &self.smoother
    }

    /// Applies one step. Nodes in `live` not seen before start from `v = 0`;
    /// tracked nodes absent from `live` are retired with their last values.
    pub fn update_all<F>(&mut self, t: u64, live: &[NodeId], z: F)
    where
        F: Fn(NodeId) -> bool,
    {
        let mut gone = Vec::new();
        for (&i, r) in &self.nodes {
            if live.binary_search(&i).is_err() {
                gone.push(Retired {
                    node: i,
                    t,
                    v: r.v,
                    cum_mean: cumulative_mean(r.cum_sum, r.steps_alive),
                });
            }
        }
        for g in &gone {
            self.nodes.remove(&g.node);
        }
        self.retired.extend(gone);

        let cap = self.smoother.window_len();
        for &i in live {
            let zi = z(i);
            let r = self.nodes.entry(i).or_default();
            r.steps_alive += 1;
            r.cum_sum += u64::from(zi);
            match &self.smoother {
                Smoother::Ewma { lambda } => r.v = ewma_unchecked(r.v, *lambda, zi),
                Smoother::Window { weights } => {
                    r.history.push_front(zi);
                    r.history.truncate(cap);
                    r.v = windowed_value(r.history.iter().copied(), weights);
                }
                Smoother::Cumulative => r.v = cumulative_mean(r.cum_sum, r.steps_alive),
            }
        }
    }

    pub fn value(&self, i: NodeId) -> Option<f64> {
        self.nodes.get(&i).map(|r| r.v)
    }

    pub fn cum_mean(&self, i: NodeId) -> Option<f64> {
        self.nodes.get(&i).map(|r| cumulative_mean(r.cum_sum, r.steps_alive))
    }

    /// `(node, v, cumulative mean)` for every tracked node, ascending.
    pub fn values(&self) -> impl Iterator<Item = (NodeId, f64, f64)> + '_ {
        self.nodes
            .iter()
            .map(|(&i, r)| (i, r.v, cumulative_mean(r.cum_sum, r.steps_alive)))
    }

    /// Highest `k` scores, ties broken by ascending id.
    pub fn top_k(&self, k: usize) -> Vec<(NodeId, f64)> {
        let mut all: Vec<(NodeId, f64)> = self.nodes.iter().map(|(&i, r)| (i, r.v)).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    pub fn retired(&self) -> &[Retired] {
        &self.retired
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
