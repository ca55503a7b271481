//! Validation tools: static-graph Markov analysis, empirical inclusion
//! frequencies, concentration, and flame-rank predictiveness.

mod inclusion;
mod markov;
mod stats;

pub use inclusion::{empirical_inclusion, IndicatorLog};
pub use markov::{
    mixing_estimate, stationary_distribution, stationary_distribution_with, MixingEstimate, TransitionMatrix,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TOL,
};
pub use stats::{
    average_ranks, concentration, ignition_bootstrap, ignition_score, spearman, total_variation, IgnitionScore,
    RankObservation,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("chain is reducible: not every node reaches every other")]
    Reducible,
    #[error("transition matrix row {row} is not stochastic (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("empty window or no node alive in it")]
    EmptyWindow,
    #[error("degenerate variance: a compared series is constant")]
    DegenerateVariance,
    #[error("input must be non-empty and non-negative")]
    InvalidValues,
    #[error("empty graph")]
    EmptyGraph,
}
