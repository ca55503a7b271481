//! Bernoulli link tracing (D1-D4) and the multi-wave driver.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{
    back_control_rate, front_control_rate, infected, walk, Control, DesignConfig, DesignError, DesignKind,
    Replacement, SampleState, StepDelta,
};
use crate::epidemic::EpidemicState;
use crate::graph::{NodeId, TemporalGraph};
use crate::rng::bernoulli;

/// One wave of a D1-D4 design at the graph's current time.
///
/// Each copy of a member traces each admissible out-link independently with
/// `p_t`. Size control acts on the total number of copies, which equals
/// `n_t` whenever every member holds one copy (D1, D4). The front-control
/// denominator is the number of candidate tracing draws, which is `#E_{s+}`
/// for D1.
///
/// Draw order: tracing (members ascending, targets ascending), random
/// additions over eligible non-members ascending, at most one stuck jump,
/// then attrition per member ascending.
pub fn trace_step<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    cfg: &DesignConfig,
    rng: &mut R,
) -> Result<StepDelta, DesignError> {
    if !cfg.design.is_link_tracing() {
        return Err(DesignError::WrongDesign(cfg.design));
    }
    run_waves(graph, state, cfg, None, rng, 1)
}

/// Runs `k` waves of the configured design at a fixed time step. `m_t`
/// accumulates across the waves; `Z_t` is the final membership.
pub fn run_waves<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    cfg: &DesignConfig,
    epidemic: Option<&EpidemicState>,
    rng: &mut R,
    k: usize,
) -> Result<StepDelta, DesignError> {
    state.check_consistent(graph)?;
    if cfg.design == DesignKind::D5 && epidemic.is_none() {
        return Err(DesignError::MissingEpidemic);
    }
    state.begin_step();
    let mut delta = StepDelta::default();
    for _ in 0..k.max(1) {
        let wave = match cfg.design {
            DesignKind::RandomWalk => walk::wave(graph, state, cfg, rng),
            DesignKind::D5 => infected::wave(graph, state, cfg, epidemic.expect("checked"), rng),
            _ => wave(graph, state, cfg, &delta.reselected, rng),
        };
        delta.absorb(wave);
    }
    Ok(delta)
}

fn wave<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    state: &mut SampleState,
    cfg: &DesignConfig,
    reselected_before: &BTreeSet<NodeId>,
    rng: &mut R,
) -> StepDelta {
    let mode = cfg.replacement();
    let members: Vec<(NodeId, u32)> = state.current.iter().map(|&i| (i, state.copies(i))).collect();
    let eligible_new = |s: &SampleState, j: &NodeId| {
        !s.current.contains(j) && (mode != Replacement::NeverResampleEver || !s.ever_sampled.contains(j))
    };
    let reselectable = |s: &SampleState, j: &NodeId| {
        s.current.contains(j)
            && match mode {
                Replacement::Unlimited => true,
                Replacement::OncePerStep => !reselected_before.contains(j),
                _ => false,
            }
    };

    // links to admissible non-members, and copy-weighted candidate draws
    let mut boundary_count = 0usize;
    let mut draws = 0u64;
    for &(i, c) in &members {
        for j in graph.out_links(i).expect("consistent") {
            if eligible_new(state, j) {
                boundary_count += 1;
                draws += u64::from(c);
            } else if reselectable(state, j) {
                draws += u64::from(c);
            }
        }
    }
    let weight_before: u64 = members.iter().map(|&(_, c)| u64::from(c)).sum();
    let p = match (cfg.control, cfg.target_size) {
        (Control::Front, Some(target)) => front_control_rate(target as u64, weight_before, draws),
        _ => cfg.trace_prob,
    };

    let mut new_hits: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut member_hits: BTreeMap<NodeId, u32> = BTreeMap::new();
    for &(i, c) in &members {
        for j in graph.out_links(i).expect("consistent") {
            let hits = if eligible_new(state, j) {
                new_hits.entry(*j).or_insert(0)
            } else if reselectable(state, j) {
                member_hits.entry(*j).or_insert(0)
            } else {
                continue;
            };
            *hits = hits.saturating_add(successes(rng, c, p));
        }
    }

    let mut delta = StepDelta::default();
    let mut copies: BTreeMap<NodeId, u32> = members.iter().copied().collect();
    let counted = |hits: u32| if mode == Replacement::Unlimited { hits } else { 1 };
    for (j, hits) in member_hits {
        if hits == 0 {
            continue;
        }
        let c = counted(hits);
        let held = copies.get_mut(&j).expect("member");
        *held = held.saturating_add(c);
        *state.multiplicity.entry(j).or_insert(0) += c;
        delta.reselected.insert(j);
    }
    for (j, hits) in new_hits {
        if hits == 0 {
            continue;
        }
        let c = counted(hits);
        copies.insert(j, c);
        *state.multiplicity.entry(j).or_insert(0) += c;
        delta.added.insert(j);
        delta.traced.insert(j);
    }

    if cfg.random_add_prob > 0.0 {
        for &j in graph.nodes() {
            if copies.contains_key(&j) || !eligible_new(state, &j) {
                continue;
            }
            if bernoulli(rng, cfg.random_add_prob) {
                copies.insert(j, 1);
                *state.multiplicity.entry(j).or_insert(0) += 1;
                delta.added.insert(j);
            }
        }
    } else if boundary_count == 0 && cfg.jump_when_stuck {
        let pool: Vec<NodeId> = graph.nodes().iter().copied().filter(|j| eligible_new(state, j)).collect();
        if !pool.is_empty() {
            let j = pool[rng.random_range(0..pool.len())];
            copies.insert(j, 1);
            *state.multiplicity.entry(j).or_insert(0) += 1;
            delta.added.insert(j);
            delta.jumps += 1;
        }
    }

    let weight: u64 = copies.values().map(|&c| u64::from(c)).sum();
    let r = match (cfg.control, cfg.target_size) {
        (Control::Back, Some(target)) => back_control_rate(target as u64, weight),
        _ => cfg.removal_prob,
    };
    let mut next = BTreeSet::new();
    state.extra_copies.clear();
    for (&i, &c) in &copies {
        // each copy is removed independently; the node stays while any survives
        let survivors = successes(rng, c, 1.0 - r);
        if survivors == 0 {
            if !delta.added.contains(&i) {
                delta.removed.insert(i);
            }
        } else {
            next.insert(i);
            if survivors > 1 {
                state.extra_copies.insert(i, survivors - 1);
            }
        }
    }
    state.ever_sampled.extend(delta.added.iter().copied());
    // a node added and removed within the wave was never in the sample
    delta.added.retain(|i| next.contains(i));
    state.current = next;
    delta
}

/// Successes among `n` independent trials with probability `p`. A single
/// trial is one uniform draw, so one-copy designs stay plain Bernoulli.
fn successes<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    match n {
        0 => 0,
        1 => u32::from(bernoulli(rng, p)),
        _ if p <= 0.0 => 0,
        _ if p >= 1.0 => n,
        _ => Binomial::new(u64::from(n), p).expect("valid").sample(rng) as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::rng::seeded;

    fn ids(v: &[u64]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn deterministic_single_wave() {
        let g = generators::path(3, false);
        let mut s = SampleState::with_members([NodeId(0)]);
        let cfg = DesignConfig::fixed_rates(DesignKind::D1, 1.0, 0.0);
        let d = trace_step(&g, &mut s, &cfg, &mut seeded(0)).unwrap();
        assert_eq!(s.current(), &ids(&[0, 1]));
        assert_eq!(d.traced, ids(&[1]));
        assert_eq!(s.multiplicity(NodeId(1)), 1);
    }

    #[test]
    fn waves_spread_like_bfs() {
        let g = generators::path(4, false);
        let mut s = SampleState::with_members([NodeId(0)]);
        let cfg = DesignConfig::fixed_rates(DesignKind::D1, 1.0, 0.0);
        run_waves(&g, &mut s, &cfg, None, &mut seeded(0), 3).unwrap();
        assert_eq!(s.current(), &ids(&[0, 1, 2, 3]));
    }

    #[test]
    fn d4_stuck_jumps_to_unsampled() {
        let g = generators::star(3, true);
        let mut s = SampleState::with_members([NodeId(0)]);
        s.ever_sampled.extend(ids(&[1, 2, 3]));
        s.ever_sampled.insert(NodeId(0));
        let mut extra = g.clone();
        let fresh = extra.add_node();
        let cfg = DesignConfig::fixed_rates(DesignKind::D4, 1.0, 0.0);
        let d = trace_step(&extra, &mut s.clone(), &cfg, &mut seeded(1)).unwrap();
        assert!(d.added.is_empty());

        let jumping = DesignConfig { jump_when_stuck: true, ..cfg };
        let d = trace_step(&extra, &mut s, &jumping, &mut seeded(1)).unwrap();
        assert_eq!(d.added, ids(&[fresh.0]));
        assert_eq!(d.jumps, 1);
        assert!(d.traced.is_empty());
    }

    #[test]
    fn d2_reselects_members_at_most_once() {
        let g = generators::complete(4);
        let mut s = SampleState::with_members([NodeId(0), NodeId(1), NodeId(2), NodeId(3)]);
        let cfg = DesignConfig::fixed_rates(DesignKind::D2, 1.0, 0.0);
        let d = run_waves(&g, &mut s, &cfg, None, &mut seeded(0), 3).unwrap();
        assert_eq!(d.reselected.len(), 4);
        assert!(s.multiplicities().values().all(|&m| m == 1));
    }

    #[test]
    fn d3_counts_every_selection() {
        let g = generators::complete(4);
        let mut s = SampleState::with_members([NodeId(0), NodeId(1)]);
        let cfg = DesignConfig::fixed_rates(DesignKind::D3, 1.0, 0.0);
        trace_step(&g, &mut s, &cfg, &mut seeded(0)).unwrap();
        // nodes 2 and 3 are each reached from both members
        assert_eq!(s.multiplicity(NodeId(2)), 2);
        assert_eq!(s.multiplicity(NodeId(0)), 1);
        assert_eq!(s.size(), 4);
    }

    #[test]
    fn reselection_shields_from_attrition() {
        // certain removal clears every copy
        let g = generators::complete(3);
        let cfg = DesignConfig::fixed_rates(DesignKind::D3, 1.0, 1.0);
        let mut s = SampleState::with_members([NodeId(0), NodeId(1), NodeId(2)]);
        trace_step(&g, &mut s, &cfg, &mut seeded(0)).unwrap();
        assert_eq!(s.size(), 0);
    }

    #[test]
    fn copies_persist_between_steps() {
        let g = generators::complete(3);
        let mut s = SampleState::with_members([NodeId(0), NodeId(1), NodeId(2)]);
        let cfg = DesignConfig::fixed_rates(DesignKind::D3, 1.0, 0.0);
        trace_step(&g, &mut s, &cfg, &mut seeded(0)).unwrap();
        // one carried copy plus one selection from each of two members
        assert_eq!(s.copies(NodeId(0)), 3);
        // now each of the other two members traces with three copies
        trace_step(&g, &mut s, &cfg, &mut seeded(0)).unwrap();
        assert_eq!(s.copies(NodeId(0)), 9);

        let d1 = DesignConfig::fixed_rates(DesignKind::D1, 1.0, 0.0);
        let mut t = SampleState::with_members([NodeId(0), NodeId(1), NodeId(2)]);
        trace_step(&g, &mut t, &d1, &mut seeded(0)).unwrap();
        assert_eq!(t.copies(NodeId(0)), 1);
    }

    #[test]
    fn stale_member_is_rejected() {
        let g = generators::path(2, true);
        let mut s = SampleState::with_members([NodeId(5)]);
        let cfg = DesignConfig::fixed_rates(DesignKind::D1, 0.5, 0.1);
        assert_eq!(
            trace_step(&g, &mut s, &cfg, &mut seeded(0)),
            Err(DesignError::InconsistentState(NodeId(5)))
        );
    }

    #[test]
    fn trace_step_refuses_other_designs() {
        let g = generators::path(2, true);
        let mut s = SampleState::empty();
        let cfg = DesignConfig::random_walk(1, 0.0);
        assert_eq!(
            trace_step(&g, &mut s, &cfg, &mut seeded(0)),
            Err(DesignError::WrongDesign(DesignKind::RandomWalk))
        );
    }

    #[test]
    fn back_control_trims_to_target_when_p_is_zero() {
        let g = generators::complete(6);
        let mut s = SampleState::with_members((0..6).map(NodeId));
        let cfg = DesignConfig::back_control(DesignKind::D1, 3, 0.0);
        let mut rng = seeded(9);
        let mut total = 0;
        let reps = 4000;
        for _ in 0..reps {
            let mut t = s.clone();
            trace_step(&g, &mut t, &cfg, &mut rng).unwrap();
            total += t.size();
        }
        let mean = total as f64 / reps as f64;
        // binomial(6, 1/2): sd of mean = sqrt(1.5 / reps)
        assert!((mean - 3.0).abs() < 3.0 * (1.5f64 / reps as f64).sqrt() + 1e-9, "{mean}");
        trace_step(&g, &mut s, &cfg, &mut rng).unwrap();
    }
}
