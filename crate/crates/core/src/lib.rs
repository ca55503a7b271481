//! Discrete-time temporal-network sampling.
//!
//! The crate provides a churning directed graph, a family of link-tracing
//! sampling designs with acquisition and attrition (random walks, Bernoulli
//! tracing with and without replacement, infection-seeded tracing, multi-wave
//! steps), a two-stage epidemic, and the smoothers that turn per-node
//! inclusion indicators into flame-rank scores. Everything here is `no_std`
//! with `alloc`; file formats and the CLI live in the `flamerank` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub mod analysis;
pub mod designs;
pub mod dynamics;
pub mod epidemic;
pub mod flame;
pub mod generators;
pub mod graph;
pub mod rng;

pub use designs::{DesignConfig, DesignKind, DesignRunner, SampleState};
pub use dynamics::{DynamicsConfig, Event, EventLog};
pub use epidemic::{EpidemicConfig, EpidemicState, Stage};
pub use flame::{RankState, Smoother};
pub use graph::{GraphError, NodeId, TemporalGraph};
pub use rng::SimRng;

/// A configuration constraint that does not hold. `field` is the dotted path
/// of the offending field relative to the struct that reported it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Re-roots the field path under `prefix`.
    pub fn under(mut self, prefix: &str) -> Self {
        self.field = if self.field.is_empty() {
            prefix.to_string()
        } else {
            alloc::format!("{prefix}.{}", self.field)
        };
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub(crate) fn check_prob(out: &mut Vec<Violation>, field: &str, p: f64) {
    if !(0.0..=1.0).contains(&p) {
        out.push(Violation::new(
            field,
            alloc::format!("probability must lie in [0, 1] (got {p})"),
        ));
    }
}
