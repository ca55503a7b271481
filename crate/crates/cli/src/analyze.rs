//! Post-hoc analysis of a run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flamerank_core::analysis::{
    concentration, empirical_inclusion, ignition_bootstrap, mixing_estimate, stationary_distribution,
    IndicatorLog, RankObservation, TransitionMatrix, DEFAULT_TOL,
};
use flamerank_core::designs::DesignKind;
use flamerank_core::rng::seeded;
use flamerank_core::NodeId;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::snapshot::read_snapshot;
use crate::Error;

pub const DEFAULT_HORIZON: u64 = 20;
pub const BOOTSTRAP_REPLICATES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub window: (u64, u64),
    /// Stationary distribution of the random walk on the initial graph,
    /// using the first random-walk design's parameters if there is one.
    pub stationary: Option<Stationary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary_error: Option<String>,
    pub designs: BTreeMap<String, DesignReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stationary {
    pub nodes: Vec<u64>,
    pub pi: Vec<f64>,
    pub concentration: f64,
    /// Second-largest eigenvalue modulus; `null` if it did not converge.
    pub slem: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    /// Gini of per-node inclusion frequencies over the window.
    pub inclusion_concentration: Option<f64>,
    /// Time average over the window of the Gini of the flame-rank vector.
    pub flame_concentration: Option<f64>,
    pub ignition: Option<Ignition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ignition {
    pub horizon: u64,
    pub score: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
}

/// Parses `a:b` into an inclusive step window.
pub fn parse_window(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(':').ok_or("window must look like a:b")?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad window start {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad window end {b:?}"))?;
    if a > b {
        return Err(format!("window start {a} is after end {b}"));
    }
    Ok((a, b))
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| Error::csv(path, e))
}

#[derive(Deserialize)]
struct IndicatorRow {
    t: u64,
    node_id: u64,
    #[serde(rename = "Z")]
    z: u8,
}

#[derive(Deserialize)]
struct RankRow {
    t: u64,
    node_id: u64,
    v: f64,
}

#[derive(Deserialize)]
struct InfectionRow {
    t: u64,
    node_id: u64,
}

#[derive(Deserialize)]
struct EventLine {
    t: u64,
    kind: String,
    node: Option<u64>,
}

/// Alive span of every node over `1..=steps`, from the initial snapshot and
/// the birth and death events. A node that dies during step `t` is last
/// alive at `t - 1`.
fn alive_spans(dir: &Path, steps: u64) -> Result<BTreeMap<u64, (u64, u64)>, Error> {
    let g = read_snapshot(&read_text(&dir.join("snapshot_initial.txt"))?)?;
    let mut spans: BTreeMap<u64, (u64, u64)> = g.nodes().iter().map(|i| (i.0, (1, steps))).collect();
    let path = dir.join("events.jsonl");
    for line in read_text(&path)?.lines().filter(|l| !l.is_empty()) {
        let e: EventLine = serde_json::from_str(line).map_err(|e| Error::Malformed(path.clone(), e.to_string()))?;
        let Some(node) = e.node else { continue };
        match e.kind.as_str() {
            "birth" => {
                spans.insert(node, (e.t, steps));
            }
            "death" => {
                if let Some(s) = spans.get_mut(&node) {
                    s.1 = e.t - 1;
                }
            }
            _ => {}
        }
    }
    Ok(spans)
}

fn stationary(dir: &Path, cfg: &RunConfig) -> Result<Stationary, String> {
    let text = read_text(&dir.join("snapshot_initial.txt")).map_err(|e| e.to_string())?;
    let g = read_snapshot(&text).map_err(|e| e.to_string())?;
    let tm = match cfg.designs.values().find(|d| d.design == DesignKind::RandomWalk) {
        Some(d) => TransitionMatrix::from_design(&g, d),
        None => TransitionMatrix::from_graph(&g, 0.0, 0.0, false),
    };
    let pi = stationary_distribution(&tm, DEFAULT_TOL).map_err(|e| e.to_string())?;
    Ok(Stationary {
        nodes: tm.nodes().iter().map(|i| i.0).collect(),
        concentration: concentration(&pi).map_err(|e| e.to_string())?,
        slem: mixing_estimate(&tm).ok().map(|m| m.slem),
        pi,
    })
}

/// Reads the logs of a finished run. `window` defaults to the whole run.
pub fn analyze(dir: &Path, window: Option<(u64, u64)>, horizon: u64) -> Result<AnalysisReport, Error> {
    let cfg = RunConfig::from_toml(&read_text(&dir.join("config.toml"))?)?;
    let window = window.unwrap_or((1, cfg.steps.max(1)));
    let (stationary, stationary_error) = match stationary(dir, &cfg) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e)),
    };
    let spans = alive_spans(dir, cfg.steps)?;

    let infections: Option<BTreeMap<NodeId, u64>> = match dir.join("infections.csv") {
        p if p.is_file() => {
            let mut first = BTreeMap::new();
            for r in rows::<InfectionRow>(&p)? {
                first.entry(NodeId(r.node_id)).or_insert(r.t);
            }
            Some(first)
        }
        _ => None,
    };

    let mut designs = BTreeMap::new();
    for name in cfg.designs.keys() {
        let mut log = IndicatorLog::new();
        for (&i, &(a, b)) in &spans {
            if a <= b {
                log.mark_alive(NodeId(i), a, b);
            }
        }
        for r in rows::<IndicatorRow>(&dir.join(format!("indicators_{name}.csv")))? {
            if r.z == 1 {
                log.mark_included(NodeId(r.node_id), r.t);
            }
        }
        let inclusion_concentration = empirical_inclusion(&log, window)
            .ok()
            .and_then(|f| concentration(&f.values().copied().collect::<Vec<_>>()).ok());

        let rank_path: PathBuf = dir.join(format!("rank_{name}.csv"));
        let (mut flame_concentration, mut ignition) = (None, None);
        if rank_path.is_file() {
            let obs: Vec<RankObservation> = rows::<RankRow>(&rank_path)?
                .into_iter()
                .filter(|r| (window.0..=window.1).contains(&r.t))
                .map(|r| RankObservation {
                    t: r.t,
                    node: NodeId(r.node_id),
                    v: r.v,
                })
                .collect();
            let mut by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for o in &obs {
                by_t.entry(o.t).or_default().push(o.v);
            }
            let ginis: Vec<f64> = by_t.values().filter_map(|v| concentration(v).ok()).collect();
            if !ginis.is_empty() {
                flame_concentration = Some(ginis.iter().sum::<f64>() / ginis.len() as f64);
            }
            if let Some(inf) = &infections {
                let mut rng = seeded(cfg.seed);
                ignition = ignition_bootstrap(&obs, inf, horizon, BOOTSTRAP_REPLICATES, 0.95, &mut rng)
                    .ok()
                    .map(|s| Ignition {
                        horizon,
                        score: s.score,
                        ci_low: s.ci_low,
                        ci_high: s.ci_high,
                        replicates: s.replicates,
                    });
            }
        }
        designs.insert(
            name.clone(),
            DesignReport {
                inclusion_concentration,
                flame_concentration,
                ignition,
            },
        );
    }

    Ok(AnalysisReport {
        window,
        stationary,
        stationary_error,
        designs,
    })
}
