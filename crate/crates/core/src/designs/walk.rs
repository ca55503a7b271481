//! Design 0: `walk_count` independent random walks viewed as one design
//! through the per-node walker counts `M_t(i)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use rand::Rng;

use super::{run_waves, DesignConfig, DesignError, DesignKind, SampleState, StepDelta};
use crate::graph::{NodeId, TemporalGraph};
use crate::rng::bernoulli;

/// One move for every walker. Each walker independently stays with
/// `lazy_prob`; otherwise jumps uniformly over `U_t` with
/// `steady_jump_prob`; otherwise follows a uniformly chosen out-link. A
/// walker on a node without out-links jumps if `jump_when_stuck` and stays
/// put otherwise.
pub fn step_random_walks<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    cfg: &DesignConfig,
    rng: &mut R,
) -> Result<StepDelta, DesignError> {
    if cfg.design != DesignKind::RandomWalk {
        return Err(DesignError::WrongDesign(cfg.design));
    }
    run_waves(graph, state, cfg, None, rng, 1)
}

pub(super) fn wave<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    cfg: &DesignConfig,
    rng: &mut R,
) -> StepDelta {
    state.place_detached(graph, rng);
    let before: BTreeSet<NodeId> = state.walk_counts.keys().copied().collect();
    let n = graph.population_size();
    let counts: Vec<(NodeId, u32)> = state.walk_counts.iter().map(|(&i, &c)| (i, c)).collect();
    let mut next: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut jumps = 0;

    for (i, c) in counts {
        let out = graph.out_links(i).expect("consistent");
        for _ in 0..c {
            let dest = if bernoulli(rng, cfg.lazy_prob) {
                i
            } else if bernoulli(rng, cfg.steady_jump_prob) {
                jumps += 1;
                graph.node_at(rng.random_range(0..n)).expect("in range")
            } else if !out.is_empty() {
                let k = rng.random_range(0..out.len());
                *out.iter().nth(k).expect("in range")
            } else if cfg.jump_when_stuck {
                jumps += 1;
                graph.node_at(rng.random_range(0..n)).expect("in range")
            } else {
                i
            };
            *next.entry(dest).or_insert(0) += 1;
            *state.multiplicity.entry(dest).or_insert(0) += 1;
        }
    }

    state.walk_counts = next;
    state.sync_walk_members();
    StepDelta {
        added: state.current.difference(&before).copied().collect(),
        removed: before.difference(&state.current).copied().collect(),
        jumps,
        ..StepDelta::default()
    }
}
