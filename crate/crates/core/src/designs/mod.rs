//! Link-tracing sampling designs with acquisition and attrition.
//!
//! Every design is one parameterisation of a single stepping engine:
//!
//! | kind          | acquisition                                         | replacement default      |
//! |---------------|-----------------------------------------------------|--------------------------|
//! | `RandomWalk`  | `walk_count` walkers, one move each per wave        | with replacement         |
//! | `D1`          | Bernoulli tracing of links out of the sample        | not currently in sample  |
//! | `D2`          | as D1, members re-selectable at most once per step  | once per step            |
//! | `D3`          | every traced link is a selection, repeats included  | unlimited                |
//! | `D4`          | tracing only to nodes never sampled before          | never resample           |
//! | `D5`          | infected nodes seeded with `p_0`, tracing with `p_l`| not currently in sample  |
//!
//! Multi-wave steps (`waves_per_step > 1`) run any of these several times at
//! a fixed time step.
//!
//! Each selection of a node adds a copy of it to the sample, so under the
//! with-replacement designs (D2, D3) the sample is a multiset. Every copy
//! traces links, attrition removes each copy independently, and surviving
//! copies carry over to the next step; a node leaves the sample when its
//! last copy is removed. Under D1, D4 and D5 every member holds exactly one
//! copy. Membership (`s_t`, `n_t`, `Z_t`) counts distinct nodes; size
//! control counts copies.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng;

use crate::epidemic::EpidemicState;
use crate::graph::{NodeId, TemporalGraph};
use crate::{check_prob, Violation};

mod infected;
mod tracing;
mod walk;

pub use infected::step_design5;
pub use tracing::{run_waves, trace_step};
pub use walk::step_random_walks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DesignKind {
    /// Design 0.
    RandomWalk,
    D1,
    D2,
    D3,
    D4,
    D5,
}

impl DesignKind {
    pub fn default_replacement(self) -> Replacement {
        match self {
            DesignKind::RandomWalk => Replacement::Unlimited,
            DesignKind::D1 | DesignKind::D5 => Replacement::NotCurrentlyInSample,
            DesignKind::D2 => Replacement::OncePerStep,
            DesignKind::D3 => Replacement::Unlimited,
            DesignKind::D4 => Replacement::NeverResampleEver,
        }
    }

    pub fn is_link_tracing(self) -> bool {
        matches!(self, DesignKind::D1 | DesignKind::D2 | DesignKind::D3 | DesignKind::D4)
    }
}

/// Which nodes a traced link may (re-)select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Replacement {
    /// Nothing that is or ever was in the sample.
    NeverResampleEver,
    /// Only nodes outside the current sample.
    NotCurrentlyInSample,
    /// Current members too, but each at most once per step.
    OncePerStep,
    /// Every successful draw counts, repeats included.
    Unlimited,
}

/// How the target sample size is maintained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Control {
    /// Fixed tracing and removal rates.
    #[default]
    None,
    /// Fixed removal rate; tracing rate set from the shortfall.
    Front,
    /// Fixed tracing rate; removal rate set from the excess.
    Back,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DesignConfig {
    pub design: DesignKind,
    /// `p`, per-link tracing probability (ignored under front control).
    pub trace_prob: f64,
    /// `r`, per-member removal probability (ignored under back control).
    pub removal_prob: f64,
    /// `nu`, target sample size.
    pub target_size: Option<usize>,
    /// Size of the uniformly drawn starting sample; defaults to the target.
    pub initial_size: Option<usize>,
    pub control: Control,
    /// `d`, per-step probability of adding each non-member at random.
    pub random_add_prob: f64,
    /// Overrides the design's default replacement rule.
    pub replacement: Option<Replacement>,
    /// Jump to a uniformly chosen node when no link can be traced.
    pub jump_when_stuck: bool,
    /// Random-walk only: per-move probability of a uniform jump.
    pub steady_jump_prob: f64,
    /// D5 only: `p_0`.
    pub infected_seed_prob: f64,
    /// D5 only: `p_l`.
    pub link_trace_prob: f64,
    /// `k`, waves per time step.
    pub waves_per_step: usize,
    /// Random-walk only: number of walkers.
    pub walk_count: usize,
    /// Random-walk only: per-move probability of staying put.
    pub lazy_prob: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            design: DesignKind::D1,
            trace_prob: 0.0,
            removal_prob: 0.0,
            target_size: None,
            initial_size: None,
            control: Control::None,
            random_add_prob: 0.0,
            replacement: None,
            jump_when_stuck: false,
            steady_jump_prob: 0.0,
            infected_seed_prob: 0.0,
            link_trace_prob: 0.0,
            waves_per_step: 1,
            walk_count: 1,
            lazy_prob: 0.0,
        }
    }
}

impl DesignConfig {
    pub fn new(design: DesignKind) -> Self {
        Self {
            design,
            ..Self::default()
        }
    }

    pub fn random_walk(walk_count: usize, lazy_prob: f64) -> Self {
        Self {
            walk_count,
            lazy_prob,
            ..Self::new(DesignKind::RandomWalk)
        }
    }

    /// Fixed `p` and `r`.
    pub fn fixed_rates(design: DesignKind, p: f64, r: f64) -> Self {
        Self {
            trace_prob: p,
            removal_prob: r,
            ..Self::new(design)
        }
    }

    /// Fixed `p`, removal rate adjusted towards `target`.
    pub fn back_control(design: DesignKind, target: usize, p: f64) -> Self {
        Self {
            trace_prob: p,
            target_size: Some(target),
            control: Control::Back,
            ..Self::new(design)
        }
    }

    /// Fixed `r`, tracing rate adjusted towards `target`.
    pub fn front_control(design: DesignKind, target: usize, r: f64) -> Self {
        Self {
            removal_prob: r,
            target_size: Some(target),
            control: Control::Front,
            ..Self::new(design)
        }
    }

    pub fn replacement(&self) -> Replacement {
        self.replacement.unwrap_or_else(|| self.design.default_replacement())
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (field, p) in [
            ("trace_prob", self.trace_prob),
            ("removal_prob", self.removal_prob),
            ("random_add_prob", self.random_add_prob),
            ("steady_jump_prob", self.steady_jump_prob),
            ("infected_seed_prob", self.infected_seed_prob),
            ("link_trace_prob", self.link_trace_prob),
            ("lazy_prob", self.lazy_prob),
        ] {
            check_prob(&mut v, field, p);
        }
        if self.waves_per_step < 1 {
            v.push(Violation::new("waves_per_step", "must be at least 1"));
        }
        if self.control != Control::None {
            if !self.design.is_link_tracing() {
                v.push(Violation::new(
                    "control",
                    format!("size control applies to designs d1-d4, not {:?}", self.design),
                ));
            }
            match self.target_size {
                Some(n) if n >= 1 => {}
                _ => v.push(Violation::new("target_size", "front/back control needs a target size >= 1")),
            }
        }
        if self.design == DesignKind::RandomWalk && self.walk_count < 1 {
            v.push(Violation::new("walk_count", "random walk design needs at least one walker"));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DesignError {
    #[error("sample member {0} is not a live node; purge dead nodes before stepping")]
    InconsistentState(NodeId),
    #[error("design 5 needs an epidemic state to seed from")]
    MissingEpidemic,
    #[error("{0:?} is stepped by a different routine")]
    WrongDesign(DesignKind),
}

/// `p_t = (nu - n_{t-1}) / #E_{s+}`, clamped to `[0, 1]`, and 0 when there is
/// no shortfall or no link out of the sample.
pub fn front_control_rate(target: u64, n_prev: u64, boundary_count: u64) -> f64 {
    if boundary_count == 0 || target <= n_prev {
        return 0.0;
    }
    ((target - n_prev) as f64 / boundary_count as f64).min(1.0)
}

/// `r_t = (n - nu) / n` when the sample exceeds its target, else 0.
pub fn back_control_rate(target: u64, n: u64) -> f64 {
    if n <= target {
        0.0
    } else {
        (n - target) as f64 / n as f64
    }
}

/// Exact expected number of outside nodes reached when every link out of
/// `sample` is traced independently with probability `p`:
/// `sum_{i not in s} [1 - (1 - p)^{#links from s into i}]`.
pub fn expected_additions(graph: &TemporalGraph, sample: &BTreeSet<NodeId>, p: f64) -> f64 {
    let mut in_links: BTreeMap<NodeId, i32> = BTreeMap::new();
    for (_, j) in graph.boundary_edges(sample) {
        *in_links.entry(j).or_insert(0) += 1;
    }
    in_links.values().map(|&k| 1.0 - libm::pow(1.0 - p, k as f64)).sum()
}

/// Sample state for one design run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleState {
    current: BTreeSet<NodeId>,
    ever_sampled: BTreeSet<NodeId>,
    multiplicity: BTreeMap<NodeId, u32>,
    // copies beyond the first, for members holding more than one
    extra_copies: BTreeMap<NodeId, u32>,
    walk_counts: BTreeMap<NodeId, u32>,
    detached_walks: u32,
    walks: bool,
}

impl SampleState {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sample holding exactly `members`.
    pub fn with_members(members: impl IntoIterator<Item = NodeId>) -> Self {
        let current: BTreeSet<NodeId> = members.into_iter().collect();
        Self {
            ever_sampled: current.clone(),
            current,
            ..Self::default()
        }
    }

    /// Random-walk state with the given walker counts.
    pub fn with_walks(counts: impl IntoIterator<Item = (NodeId, u32)>) -> Self {
        let mut s = Self {
            walks: true,
            ..Self::default()
        };
        for (i, c) in counts {
            if c > 0 {
                *s.walk_counts.entry(i).or_insert(0) += c;
            }
        }
        s.sync_walk_members();
        s
    }

    /// Starting state: `initial_size` (else `target_size`, else none) nodes
    /// drawn uniformly without replacement; for random walks, `walk_count`
    /// walkers placed uniformly with replacement; D5 starts empty.
    pub fn initial<R: Rng + ?Sized>(graph: &TemporalGraph, cfg: &DesignConfig, rng: &mut R) -> Self {
        let n = graph.population_size();
        match cfg.design {
            DesignKind::RandomWalk => {
                let mut s = Self {
                    walks: true,
                    ..Self::default()
                };
                for _ in 0..cfg.walk_count {
                    if n == 0 {
                        s.detached_walks += 1;
                    } else {
                        let at = graph.node_at(rng.random_range(0..n)).expect("in range");
                        *s.walk_counts.entry(at).or_insert(0) += 1;
                    }
                }
                s.sync_walk_members();
                s
            }
            DesignKind::D5 => Self::default(),
            _ => {
                let size = cfg.initial_size.or(cfg.target_size).unwrap_or(0).min(n);
                let picks = index::sample(rng, n, size);
                Self::with_members(picks.into_iter().map(|ix| graph.node_at(ix).expect("in range")))
            }
        }
    }

    /// `s_t`.
    pub fn current(&self) -> &BTreeSet<NodeId> {
        &self.current
    }

    /// `n_t`.
    pub fn size(&self) -> usize {
        self.current.len()
    }

    pub fn ever_sampled(&self) -> &BTreeSet<NodeId> {
        &self.ever_sampled
    }

    /// `Z_t(i)`.
    pub fn indicator(&self, i: NodeId) -> bool {
        self.current.contains(&i)
    }

    /// `m_t(i)`: selections of `i` during the current time step.
    pub fn multiplicity(&self, i: NodeId) -> u32 {
        self.multiplicity.get(&i).copied().unwrap_or(0)
    }

    pub fn multiplicities(&self) -> &BTreeMap<NodeId, u32> {
        &self.multiplicity
    }

    /// Copies of `i` held by the sample; 0 for non-members.
    pub fn copies(&self, i: NodeId) -> u32 {
        if self.current.contains(&i) {
            1 + self.extra_copies.get(&i).copied().unwrap_or(0)
        } else {
            0
        }
    }

    /// Sum of copies over members; equals `size()` for one-copy designs.
    pub fn total_copies(&self) -> u64 {
        self.size() as u64 + self.extra_copies.values().map(|&c| u64::from(c)).sum::<u64>()
    }

    /// `M_t(i)`: walkers sitting on `i`.
    pub fn walk_count(&self, i: NodeId) -> u32 {
        self.walk_counts.get(&i).copied().unwrap_or(0)
    }

    pub fn walk_counts(&self) -> &BTreeMap<NodeId, u32> {
        &self.walk_counts
    }

    /// Walkers with no node to sit on because the population was empty.
    pub fn detached_walks(&self) -> u32 {
        self.detached_walks
    }

    /// `sum_i M_t(i)` plus detached walkers.
    pub fn total_walks(&self) -> u64 {
        self.walk_counts.values().map(|&c| u64::from(c)).sum::<u64>() + u64::from(self.detached_walks)
    }

    /// Errors if a member is not alive in `graph`.
    pub fn check_consistent(&self, graph: &TemporalGraph) -> Result<(), DesignError> {
        match self
            .current
            .iter()
            .chain(self.walk_counts.keys())
            .find(|&&i| !graph.contains(i))
        {
            Some(&dead) => Err(DesignError::InconsistentState(dead)),
            None => Ok(()),
        }
    }

    /// Drops dead nodes. Walkers on a dead node jump to uniformly chosen live
    /// nodes; with an empty population they are held as detached until nodes
    /// exist again. `ever_sampled` keeps dead ids.
    pub fn purge_dead<R: Rng + ?Sized>(&mut self, removed: &BTreeSet<NodeId>, graph: &TemporalGraph, rng: &mut R) {
        for i in removed {
            self.current.remove(i);
            self.multiplicity.remove(i);
            self.extra_copies.remove(i);
            if let Some(c) = self.walk_counts.remove(i) {
                self.detached_walks += c;
            }
        }
        self.place_detached(graph, rng);
        self.sync_walk_members();
    }

    pub(crate) fn place_detached<R: Rng + ?Sized>(&mut self, graph: &TemporalGraph, rng: &mut R) {
        let n = graph.population_size();
        if n == 0 {
            return;
        }
        for _ in 0..self.detached_walks {
            let at = graph.node_at(rng.random_range(0..n)).expect("in range");
            *self.walk_counts.entry(at).or_insert(0) += 1;
        }
        self.detached_walks = 0;
    }

    pub(crate) fn begin_step(&mut self) {
        self.multiplicity.clear();
    }

    pub(crate) fn sync_walk_members(&mut self) {
        if self.walks {
            self.current = self.walk_counts.keys().copied().collect();
            self.ever_sampled.extend(self.walk_counts.keys().copied());
        }
    }
}

/// What one step changed, for logging and audits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepDelta {
    /// Nodes that joined the sample.
    pub added: BTreeSet<NodeId>,
    /// Subset of `added` reached by tracing a link.
    pub traced: BTreeSet<NodeId>,
    /// Current members selected again.
    pub reselected: BTreeSet<NodeId>,
    pub removed: BTreeSet<NodeId>,
    /// Number of stuck jumps taken.
    pub jumps: usize,
}

impl StepDelta {
    pub(crate) fn absorb(&mut self, other: StepDelta) {
        self.added.extend(other.added);
        self.traced.extend(other.traced);
        self.reselected.extend(other.reselected);
        self.removed.extend(other.removed);
        self.jumps += other.jumps;
    }
}

/// A design configuration together with its evolving sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRunner {
    pub config: DesignConfig,
    pub state: SampleState,
}

impl DesignRunner {
    pub fn new<R: Rng + ?Sized>(config: DesignConfig, graph: &TemporalGraph, rng: &mut R) -> Self {
        let state = SampleState::initial(graph, &config, rng);
        Self { config, state }
    }

    pub fn with_state(config: DesignConfig, state: SampleState) -> Self {
        Self { config, state }
    }

    /// Runs `waves_per_step` waves of the configured design at the graph's
    /// current time.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        graph: &TemporalGraph,
        epidemic: Option<&EpidemicState>,
        rng: &mut R,
    ) -> Result<StepDelta, DesignError> {
        run_waves(graph, &mut self.state, &self.config, epidemic, rng, self.config.waves_per_step)
    }

    pub fn purge_dead<R: Rng + ?Sized>(&mut self, removed: &BTreeSet<NodeId>, graph: &TemporalGraph, rng: &mut R) {
        self.state.purge_dead(removed, graph, rng);
    }
}
