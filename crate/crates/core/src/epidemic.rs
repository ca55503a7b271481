//! Two-stage virus process over the temporal graph.
//!
//! Infected nodes pass through a short, highly transmissive `early` stage and
//! then remain `chronic` (less transmissive) until they die. There is no
//! recovered state.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng;

use crate::dynamics::DynamicsConfig;
use crate::graph::{NodeId, TemporalGraph};
use crate::rng::bernoulli;
use crate::{check_prob, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Susceptible,
    Early,
    Chronic,
}

impl Stage {
    pub fn is_infected(self) -> bool {
        self != Stage::Susceptible
    }
}

/// Which nodes to infect at ignition.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum Seeds {
    /// Uniformly chosen live nodes.
    Count(usize),
    Ids(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EpidemicConfig {
    /// Per-link, per-step transmission probability from early-stage nodes.
    pub beta_early: f64,
    /// Per-link, per-step transmission probability from chronic nodes.
    pub beta_chronic: f64,
    /// Steps spent in the early stage.
    pub early_duration: u64,
    pub mu_early: f64,
    pub mu_chronic: f64,
    pub initial_infected: Seeds,
    /// Time step at which the seeds are infected.
    pub start_step: u64,
}

impl Default for EpidemicConfig {
    fn default() -> Self {
        Self {
            beta_early: 0.3,
            beta_chronic: 0.02,
            early_duration: 10,
            mu_early: 0.0,
            mu_chronic: 0.002,
            initial_infected: Seeds::Count(1),
            start_step: 0,
        }
    }
}

impl EpidemicConfig {
    pub fn beta(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Susceptible => 0.0,
            Stage::Early => self.beta_early,
            Stage::Chronic => self.beta_chronic,
        }
    }

    pub fn mu(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Susceptible => 0.0,
            Stage::Early => self.mu_early,
            Stage::Chronic => self.mu_chronic,
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        check_prob(&mut v, "beta_early", self.beta_early);
        check_prob(&mut v, "beta_chronic", self.beta_chronic);
        check_prob(&mut v, "mu_early", self.mu_early);
        check_prob(&mut v, "mu_chronic", self.mu_chronic);
        if self.beta_chronic > self.beta_early {
            v.push(Violation::new(
                "beta_chronic",
                format!(
                    "chronic transmission must not exceed early transmission ({} > {})",
                    self.beta_chronic, self.beta_early
                ),
            ));
        }
        if self.early_duration < 1 {
            v.push(Violation::new("early_duration", "must be at least 1"));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EpidemicError {
    #[error("seed node {0} is not alive")]
    DeadSeed(NodeId),
}

/// Per-node stage and the time that stage was entered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EpidemicState {
    nodes: BTreeMap<NodeId, (Stage, u64)>,
}

/// What one [`step_epidemic`] did.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EpidemicStep {
    /// `(infected, source)`; the source is the first infected in-neighbour
    /// whose transmission succeeded.
    pub new_infections: Vec<(NodeId, NodeId)>,
    /// Infected nodes killed by the virus, already removed from the graph.
    pub deaths: Vec<NodeId>,
    pub to_chronic: Vec<NodeId>,
}

impl EpidemicState {
    /// Every live node susceptible.
    pub fn new(graph: &TemporalGraph) -> Self {
        let mut s = Self::default();
        s.sync(graph);
        s
    }

    /// Adds newborn nodes as susceptible and forgets dead ones.
    pub fn sync(&mut self, graph: &TemporalGraph) {
        self.nodes.retain(|&i, _| graph.contains(i));
        for &i in graph.nodes() {
            self.nodes.entry(i).or_insert((Stage::Susceptible, graph.birth_time(i).unwrap_or(0)));
        }
    }

    pub fn stage(&self, i: NodeId) -> Stage {
        self.nodes.get(&i).map_or(Stage::Susceptible, |s| s.0)
    }

    pub fn stage_entry(&self, i: NodeId) -> Option<u64> {
        self.nodes.get(&i).map(|s| s.1)
    }

    pub fn is_infected(&self, i: NodeId) -> bool {
        self.stage(i).is_infected()
    }

    pub fn set_stage(&mut self, i: NodeId, stage: Stage, t: u64) {
        self.nodes.insert(i, (stage, t));
    }

    pub fn infected(&self) -> impl Iterator<Item = (NodeId, Stage)> + '_ {
        self.nodes
            .iter()
            .filter(|(_, s)| s.0.is_infected())
            .map(|(&i, s)| (i, s.0))
    }

    pub fn prevalence(&self) -> usize {
        self.infected().count()
    }

    /// `(susceptible, early, chronic)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for (stage, _) in self.nodes.values() {
            match stage {
                Stage::Susceptible => c.0 += 1,
                Stage::Early => c.1 += 1,
                Stage::Chronic => c.2 += 1,
            }
        }
        c
    }

    /// Infects the seeds at the graph's current time.
    pub fn ignite<R: Rng + ?Sized>(
        &mut self,
        graph: &TemporalGraph,
        seeds: &Seeds,
        rng: &mut R,
    ) -> Result<Vec<NodeId>, EpidemicError> {
        self.sync(graph);
        let t = graph.time();
        let chosen: Vec<NodeId> = match seeds {
            Seeds::Count(k) => {
                let n = graph.population_size();
                let mut picks: Vec<NodeId> = index::sample(rng, n, (*k).min(n))
                    .into_iter()
                    .map(|ix| graph.node_at(ix).expect("in range"))
                    .collect();
                picks.sort_unstable();
                picks
            }
            Seeds::Ids(ids) => {
                if let Some(&dead) = ids.iter().find(|&&i| !graph.contains(i)) {
                    return Err(EpidemicError::DeadSeed(dead));
                }
                ids.clone()
            }
        };
        for &i in &chosen {
            self.set_stage(i, Stage::Early, t);
        }
        Ok(chosen)
    }
}

/// Advances the virus one step at the graph's current time `t`.
///
/// Transmission and mortality are both evaluated against the stages and
/// links present at step start. Order: transmission draws (infected sources
/// ascending, then targets ascending), mortality draws (initially infected
/// ascending), early-to-chronic transitions for survivors whose early stage
/// has lasted `early_duration` steps, then the new infections enter `early`.
pub fn step_epidemic<R: Rng + ?Sized>(
    graph: &mut TemporalGraph,
    state: &mut EpidemicState,
    cfg: &EpidemicConfig,
    rng: &mut R,
) -> EpidemicStep {
    state.sync(graph);
    let t = graph.time();
    let infected: Vec<(NodeId, Stage)> = state.infected().collect();
    let mut out = EpidemicStep::default();

    let mut fresh: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for &(i, stage) in &infected {
        let beta = cfg.beta(stage);
        if beta <= 0.0 {
            continue;
        }
        for &j in graph.out_links(i).expect("synced") {
            if state.stage(j) != Stage::Susceptible || fresh.contains_key(&j) {
                continue;
            }
            if bernoulli(rng, beta) {
                fresh.insert(j, i);
            }
        }
    }

    for &(i, stage) in &infected {
        if bernoulli(rng, cfg.mu(stage)) {
            graph.remove_node(i).expect("synced");
            state.nodes.remove(&i);
            out.deaths.push(i);
        }
    }

    for &(i, stage) in &infected {
        if stage != Stage::Early {
            continue;
        }
        if let Some(&(Stage::Early, entry)) = state.nodes.get(&i) {
            if t.saturating_sub(entry) >= cfg.early_duration {
                state.set_stage(i, Stage::Chronic, t);
                out.to_chronic.push(i);
            }
        }
    }

    for (j, src) in fresh {
        state.set_stage(j, Stage::Early, t);
        out.new_infections.push((j, src));
    }
    out
}

/// Expected one-step change in prevalence conditional on the current graph:
/// expected new infections minus expected deaths among infected nodes.
///
/// A susceptible `j` escapes infection with probability
/// `prod_{i infected, i -> j} (1 - beta(stage i))`. An infected node is
/// removed with probability `1 - (1 - mu(stage))(1 - death_prob)`, where
/// `death_prob` comes from the demographic dynamics if supplied.
pub fn expected_net_change(
    graph: &TemporalGraph,
    state: &EpidemicState,
    cfg: &EpidemicConfig,
    demo: Option<&DynamicsConfig>,
) -> f64 {
    let death_prob = demo.map_or(0.0, |d| d.death_prob);
    let mut escape: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut decrease = 0.0;
    for (i, stage) in state.infected() {
        if !graph.contains(i) {
            continue;
        }
        decrease += 1.0 - (1.0 - cfg.mu(stage)) * (1.0 - death_prob);
        let beta = cfg.beta(stage);
        for &j in graph.out_links(i).expect("live") {
            if state.stage(j) == Stage::Susceptible {
                *escape.entry(j).or_insert(1.0) *= 1.0 - beta;
            }
        }
    }
    let increase: f64 = escape.values().map(|q| 1.0 - q).sum();
    increase - decrease
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::rng::seeded;

    fn quiet() -> EpidemicConfig {
        EpidemicConfig {
            beta_early: 0.0,
            beta_chronic: 0.0,
            mu_early: 0.0,
            mu_chronic: 0.0,
            ..EpidemicConfig::default()
        }
    }

    #[test]
    fn certain_transmission_infects_all_neighbours() {
        let mut g = generators::star(3, false);
        let mut s = EpidemicState::new(&g);
        s.set_stage(NodeId(0), Stage::Early, 0);
        let cfg = EpidemicConfig { beta_early: 1.0, ..quiet() };
        let step = step_epidemic(&mut g, &mut s, &cfg, &mut seeded(1));
        assert_eq!(step.new_infections.len(), 3);
        assert_eq!(s.counts(), (0, 4, 0));
        assert!(step.new_infections.iter().all(|&(_, src)| src == NodeId(0)));
    }

    #[test]
    fn zero_rates_only_advance_clocks() {
        let mut g = generators::path(4, true);
        let mut s = EpidemicState::new(&g);
        s.set_stage(NodeId(1), Stage::Early, 0);
        let cfg = EpidemicConfig { early_duration: 2, ..quiet() };
        g.tick();
        let a = step_epidemic(&mut g, &mut s, &cfg, &mut seeded(1));
        assert!(a.new_infections.is_empty() && a.deaths.is_empty() && a.to_chronic.is_empty());
        assert_eq!(s.stage(NodeId(1)), Stage::Early);
        g.tick();
        let b = step_epidemic(&mut g, &mut s, &cfg, &mut seeded(1));
        assert_eq!(b.to_chronic, vec![NodeId(1)]);
        assert_eq!(s.stage(NodeId(1)), Stage::Chronic);
        assert_eq!(s.stage_entry(NodeId(1)), Some(2));
        assert_eq!(g.population_size(), 4);
    }

    #[test]
    fn mortality_removes_from_graph() {
        let mut g = generators::path(3, true);
        let mut s = EpidemicState::new(&g);
        s.set_stage(NodeId(1), Stage::Early, 0);
        let cfg = EpidemicConfig { mu_early: 1.0, ..quiet() };
        let step = step_epidemic(&mut g, &mut s, &cfg, &mut seeded(1));
        assert_eq!(step.deaths, vec![NodeId(1)]);
        assert!(!g.contains(NodeId(1)));
        assert_eq!(s.prevalence(), 0);
    }

    #[test]
    fn expected_net_change_examples() {
        let g = generators::path(3, false);
        let mut s = EpidemicState::new(&g);
        assert_eq!(expected_net_change(&g, &s, &EpidemicConfig::default(), None), 0.0);

        // node 2 has no out-links
        s.set_stage(NodeId(2), Stage::Early, 0);
        let cfg = EpidemicConfig { mu_early: 0.1, ..quiet() };
        assert!((expected_net_change(&g, &s, &cfg, None) + 0.1).abs() < 1e-15);

        let mut h = TemporalGraph::new();
        for _ in 0..3 {
            h.add_node();
        }
        h.add_edge(NodeId(0), NodeId(2), false).unwrap();
        h.add_edge(NodeId(1), NodeId(2), false).unwrap();
        let mut s = EpidemicState::new(&h);
        s.set_stage(NodeId(0), Stage::Early, 0);
        s.set_stage(NodeId(1), Stage::Early, 0);
        let cfg = EpidemicConfig { beta_early: 0.5, ..quiet() };
        assert!((expected_net_change(&h, &s, &cfg, None) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn demographic_death_composes_with_mortality() {
        let g = generators::path(1, false);
        let mut s = EpidemicState::new(&g);
        s.set_stage(NodeId(0), Stage::Chronic, 0);
        let cfg = EpidemicConfig { mu_chronic: 0.2, ..quiet() };
        let demo = DynamicsConfig { death_prob: 0.5, ..DynamicsConfig::frozen() };
        let got = expected_net_change(&g, &s, &cfg, Some(&demo));
        assert!((got + 0.6).abs() < 1e-15);
    }

    #[test]
    fn config_violations() {
        let bad = EpidemicConfig { beta_early: 0.1, beta_chronic: 0.2, early_duration: 0, ..EpidemicConfig::default() };
        let fields: Vec<_> = bad.violations().into_iter().map(|v| v.field).collect();
        assert_eq!(fields, vec!["beta_chronic", "early_duration"]);
        assert!(EpidemicConfig::default().violations().is_empty());
    }

    #[test]
    fn ignite_rejects_dead_seed() {
        let g = generators::path(2, true);
        let mut s = EpidemicState::new(&g);
        let err = s.ignite(&g, &Seeds::Ids(vec![NodeId(7)]), &mut seeded(0));
        assert_eq!(err, Err(EpidemicError::DeadSeed(NodeId(7))));
        let picked = s.ignite(&g, &Seeds::Count(5), &mut seeded(0)).unwrap();
        assert_eq!(picked.len(), 2);
    }
}
