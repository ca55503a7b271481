//! Per-step stochastic evolution of a [`TemporalGraph`].
//!
//! One call to [`evolve_step`] advances the clock and then applies, in this
//! order: Poisson node births, independent node deaths, independent link
//! dissolutions and Poisson link formations. Nodes born in a step can
//! receive links in the same step.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::graph::{NodeId, TemporalGraph};
use crate::rng::bernoulli;
use crate::Violation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AttachmentMode {
    #[default]
    Uniform,
    /// Destination drawn with weight `in_degree + 1`.
    Preferential,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DynamicsConfig {
    /// Expected node births per step.
    pub birth_rate: f64,
    /// Per-node, per-step removal probability.
    pub death_prob: f64,
    /// Expected link proposals per step.
    pub link_form_rate: f64,
    /// Per-link, per-step dissolution probability.
    pub link_dissolve_prob: f64,
    pub attachment_mode: AttachmentMode,
    /// Form and dissolve links as symmetric pairs.
    pub symmetric_links: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            birth_rate: 0.0,
            death_prob: 0.0,
            link_form_rate: 0.0,
            link_dissolve_prob: 0.0,
            attachment_mode: AttachmentMode::Uniform,
            symmetric_links: true,
        }
    }
}

impl DynamicsConfig {
    /// Static network: every rate zero.
    pub fn frozen() -> Self {
        Self::default()
    }

    pub fn is_frozen(&self) -> bool {
        self.birth_rate == 0.0
            && self.death_prob == 0.0
            && self.link_form_rate == 0.0
            && self.link_dissolve_prob == 0.0
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (field, rate) in [("birth_rate", self.birth_rate), ("link_form_rate", self.link_form_rate)] {
            if !(rate.is_finite() && rate >= 0.0) {
                v.push(Violation::new(field, format!("rate must be finite and >= 0 (got {rate})")));
            }
        }
        for (field, p) in [("death_prob", self.death_prob), ("link_dissolve_prob", self.link_dissolve_prob)] {
            crate::check_prob(&mut v, field, p);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Birth { t: u64, node: NodeId },
    Death { t: u64, node: NodeId },
    LinkAdd { t: u64, src: NodeId, dst: NodeId },
    LinkDel { t: u64, src: NodeId, dst: NodeId },
}

impl Event {
    pub fn time(&self) -> u64 {
        match *self {
            Event::Birth { t, .. }
            | Event::Death { t, .. }
            | Event::LinkAdd { t, .. }
            | Event::LinkDel { t, .. } => t,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Event::Birth { .. } => "birth",
            Event::Death { .. } => "death",
            Event::LinkAdd { .. } => "link_add",
            Event::LinkDel { .. } => "link_del",
        }
    }
}

/// Ordered events produced by one [`evolve_step`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn births(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.events.iter().filter_map(|e| match *e {
            Event::Birth { node, .. } => Some(node),
            _ => None,
        })
    }

    pub fn deaths(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.events.iter().filter_map(|e| match *e {
            Event::Death { node, .. } => Some(node),
            _ => None,
        })
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> u64 {
    if rate <= 0.0 || !rate.is_finite() {
        return 0;
    }
    let d = Poisson::new(rate).expect("positive finite rate");
    d.sample(rng) as u64
}

pub fn evolve_step<R: Rng + ?Sized>(graph: &mut TemporalGraph, cfg: &DynamicsConfig, rng: &mut R) -> EventLog {
    let t = graph.tick();
    let mut log = EventLog::default();

    for _ in 0..poisson(rng, cfg.birth_rate) {
        let node = graph.add_node();
        log.events.push(Event::Birth { t, node });
    }

    if cfg.death_prob > 0.0 {
        let doomed: Vec<NodeId> = graph
            .nodes()
            .iter()
            .copied()
            .filter(|_| bernoulli(rng, cfg.death_prob))
            .collect();
        for node in doomed {
            graph.remove_node(node).expect("live node");
            log.events.push(Event::Death { t, node });
        }
    }

    if cfg.link_dissolve_prob > 0.0 {
        let edges: Vec<(NodeId, NodeId)> = graph.edges().collect();
        for (i, j) in edges {
            // in symmetric mode a reciprocated pair is one link, decided once
            if cfg.symmetric_links && i > j && graph.has_edge(j, i) {
                continue;
            }
            if !graph.has_edge(i, j) || !bernoulli(rng, cfg.link_dissolve_prob) {
                continue;
            }
            graph.remove_edge(i, j).expect("present");
            log.events.push(Event::LinkDel { t, src: i, dst: j });
            if cfg.symmetric_links && graph.has_edge(j, i) {
                graph.remove_edge(j, i).expect("present");
                log.events.push(Event::LinkDel { t, src: j, dst: i });
            }
        }
    }

    let proposals = poisson(rng, cfg.link_form_rate);
    let n = graph.population_size();
    if n >= 2 {
        for _ in 0..proposals {
            let a = rng.random_range(0..n);
            let src = graph.node_at(a).expect("in range");
            let dst = match cfg.attachment_mode {
                AttachmentMode::Uniform => {
                    let mut b = rng.random_range(0..n - 1);
                    if b >= a {
                        b += 1;
                    }
                    graph.node_at(b).expect("in range")
                }
                AttachmentMode::Preferential => preferential_target(graph, src, rng),
            };
            if !graph.has_edge(src, dst) {
                graph.add_edge(src, dst, false).expect("live distinct nodes");
                log.events.push(Event::LinkAdd { t, src, dst });
            }
            if cfg.symmetric_links && !graph.has_edge(dst, src) {
                graph.add_edge(dst, src, false).expect("live distinct nodes");
                log.events.push(Event::LinkAdd { t, src: dst, dst: src });
            }
        }
    }

    log
}

fn preferential_target<R: Rng + ?Sized>(graph: &TemporalGraph, src: NodeId, rng: &mut R) -> NodeId {
    let weight = |j: NodeId| graph.in_degree(j).expect("live") as u64 + 1;
    let total: u64 = graph.nodes().iter().filter(|&&j| j != src).map(|&j| weight(j)).sum();
    let mut pick = rng.random_range(0..total);
    for &j in graph.nodes() {
        if j == src {
            continue;
        }
        let w = weight(j);
        if pick < w {
            return j;
        }
        pick -= w;
    }
    unreachable!("weights sum to total")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::rng::seeded;

    #[test]
    fn frozen_dynamics_only_tick() {
        let mut g = generators::path(4, true);
        let before = g.clone();
        let log = evolve_step(&mut g, &DynamicsConfig::frozen(), &mut seeded(1));
        assert!(log.is_empty());
        assert_eq!(g.time(), 1);
        g.set_time(0);
        assert_eq!(g, before);
    }

    #[test]
    fn certain_death_empties_graph() {
        let mut g = generators::complete(6);
        let cfg = DynamicsConfig { death_prob: 1.0, ..DynamicsConfig::frozen() };
        let log = evolve_step(&mut g, &cfg, &mut seeded(2));
        assert!(g.is_empty());
        assert_eq!(log.deaths().count(), 6);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicate_proposals_collapse() {
        let mut g = generators::path(2, false);
        g.remove_edge(NodeId(0), NodeId(1)).unwrap();
        let cfg = DynamicsConfig {
            link_form_rate: 50.0,
            symmetric_links: false,
            ..DynamicsConfig::frozen()
        };
        let log = evolve_step(&mut g, &cfg, &mut seeded(3));
        assert!(g.edge_count() <= 2);
        assert_eq!(log.len(), g.edge_count());
        for (i, j) in g.edges() {
            assert!((i, j) == (NodeId(0), NodeId(1)) || (i, j) == (NodeId(1), NodeId(0)));
        }
    }

    #[test]
    fn symmetric_dissolution_removes_both_directions() {
        let mut g = generators::complete(5);
        let cfg = DynamicsConfig { link_dissolve_prob: 0.5, ..DynamicsConfig::frozen() };
        evolve_step(&mut g, &cfg, &mut seeded(4));
        for (i, j) in g.edges() {
            assert!(g.has_edge(j, i));
        }
        assert!(g.check_invariants());
    }

    #[test]
    fn preferential_mode_favours_high_in_degree() {
        let mut hits = 0;
        let mut rng = seeded(5);
        let reps = 2000;
        for _ in 0..reps {
            let mut g = generators::star(4, false);
            // reverse the star so the hub has in-degree 4
            for leaf in 1..5 {
                g.remove_edge(NodeId(0), NodeId(leaf)).unwrap();
                g.add_edge(NodeId(leaf), NodeId(0), false).unwrap();
            }
            let src = NodeId(1);
            if preferential_target(&g, src, &mut rng) == NodeId(0) {
                hits += 1;
            }
        }
        // hub weight 5 of total 5 + 1 + 1 + 1
        let frac = hits as f64 / reps as f64;
        assert!((frac - 0.625).abs() < 0.05, "{frac}");
    }

    #[test]
    fn births_stamp_new_time() {
        let mut g = TemporalGraph::new();
        let cfg = DynamicsConfig { birth_rate: 3.0, ..DynamicsConfig::frozen() };
        let log = evolve_step(&mut g, &cfg, &mut seeded(6));
        for node in log.births() {
            assert_eq!(g.birth_time(node), Ok(1));
        }
    }

    #[test]
    fn invalid_rates_are_reported() {
        let cfg = DynamicsConfig { birth_rate: -1.0, death_prob: 1.5, ..DynamicsConfig::frozen() };
        let v = cfg.violations();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].field, "birth_rate");
        assert_eq!(v[1].field, "death_prob");
    }
}
