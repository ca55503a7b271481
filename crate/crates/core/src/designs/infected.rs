//! Design 5: tracing seeded from infected nodes.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::Rng;

use super::{run_waves, DesignConfig, DesignError, DesignKind, SampleState, StepDelta};
use crate::epidemic::EpidemicState;
use crate::graph::{NodeId, TemporalGraph};
use crate::rng::bernoulli;

/// Each link out of the previous sample is traced with `link_trace_prob`,
/// each infected non-member joins with `infected_seed_prob`, and every
/// member (old or new) then leaves with `removal_prob`. There is no limit on
/// how far tracing reaches from infected nodes; attrition bounds it.
pub fn step_design5<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    epidemic: &EpidemicState,
    cfg: &DesignConfig,
    rng: &mut R,
) -> Result<StepDelta, DesignError> {
    if cfg.design != DesignKind::D5 {
        return Err(DesignError::WrongDesign(cfg.design));
    }
    run_waves(graph, state, cfg, Some(epidemic), rng, 1)
}

pub(super) fn wave<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    cfg: &DesignConfig,
    epidemic: &EpidemicState,
    rng: &mut R,
) -> StepDelta {
    let previous: Vec<NodeId> = state.current.iter().copied().collect();
    let mut delta = StepDelta::default();

    for &i in &previous {
        for j in graph.out_links(i).expect("consistent") {
            if !state.current.contains(j) && bernoulli(rng, cfg.link_trace_prob) && delta.added.insert(*j) {
                delta.traced.insert(*j);
            }
        }
    }
    if cfg.infected_seed_prob > 0.0 {
        for (i, _) in epidemic.infected() {
            if graph.contains(i) && !state.current.contains(&i) && bernoulli(rng, cfg.infected_seed_prob) {
                delta.added.insert(i);
            }
        }
    }
    for &j in &delta.added {
        *state.multiplicity.entry(j).or_insert(0) += 1;
    }

    let members: BTreeSet<NodeId> = state.current.union(&delta.added).copied().collect();
    let mut next = BTreeSet::new();
    for i in members {
        if bernoulli(rng, cfg.removal_prob) {
            if !delta.added.contains(&i) {
                delta.removed.insert(i);
            }
        } else {
            next.insert(i);
        }
    }
    state.ever_sampled.extend(delta.added.iter().copied());
    delta.added.retain(|i| next.contains(i));
    state.current = next;
    delta
}
