//! The seeded step loop and its log files.
//!
//! One ChaCha8 stream per run, consumed in this order: initial graph, the
//! initial sample of each design (ascending name), epidemic ignition when it
//! starts at step 0; then every step: dynamics, walker re-placement for
//! nodes that died, each design's waves, epidemic ignition or transmission
//! and mortality, walker re-placement for virus deaths.
//!
//! Files written to the run directory:
//!
//! | file | columns |
//! |------|---------|
//! | `config.toml` | the resolved run config |
//! | `snapshot_initial.txt`, `snapshot_final.txt` | see [`crate::snapshot`] |
//! | `events.jsonl` | `{"t","kind","node"}` or `{"t","kind","src","dst"}` |
//! | `indicators_<design>.csv` | `t,node_id,Z,m,M` (rows with a nonzero field) |
//! | `rank_<design>.csv` | `t,node_id,v,cum_mean` |
//! | `topk_<design>.csv` | `t,rank,node_id,v` |
//! | `prevalence.csv` | `t,n_susceptible,n_early,n_chronic,expected_net_change` |
//! | `infections.csv` | `t,node_id,source_id` (empty source for seeds) |
//! | `summary.json` | [`RunSummary`] |
//!
//! Deaths caused by the virus appear in `events.jsonl` with `"cause":"virus"`.
//! A death implies removal of every incident link; those removals are not
//! logged separately.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flamerank_core::epidemic::{expected_net_change, step_epidemic};
use flamerank_core::rng::seeded;
use flamerank_core::{
    generators, DesignRunner, EpidemicState, Event, NodeId, RankState, SimRng, TemporalGraph,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GraphSpec, RunConfig};
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub steps: u64,
    pub population: PopulationSummary,
    pub designs: BTreeMap<String, DesignSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epidemic: Option<EpidemicSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub initial: usize,
    #[serde(rename = "final")]
    pub last: usize,
    pub births: u64,
    pub deaths: u64,
}

/// Statistics of the `n_t` trace over steps `1..=steps`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DesignSummary {
    pub mean_size: f64,
    pub sd_size: f64,
    /// Mean over the second half of the run.
    pub mean_size_late: f64,
    pub min_size: usize,
    pub max_size: usize,
    pub final_size: usize,
    pub ever_sampled: usize,
    pub stuck_jumps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpidemicSummary {
    pub n_susceptible: usize,
    pub n_early: usize,
    pub n_chronic: usize,
    pub infections: u64,
    pub virus_deaths: u64,
    pub peak_prevalence: usize,
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), Error> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

struct Csv {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl Csv {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, Error> {
        let (path, f) = create(dir, name)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header).map_err(|e| Error::csv(&path, e))?;
        Ok(Self { path, w })
    }

    fn row<S: Serialize>(&mut self, record: S) -> Result<(), Error> {
        self.w.serialize(record).map_err(|e| Error::csv(&self.path, e))
    }

    fn finish(mut self) -> Result<(), Error> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// One `events.jsonl` line; fields appear in declaration order.
#[derive(Serialize, Default)]
struct EventRecord<'a> {
    t: u64,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    src: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dst: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cause: Option<&'a str>,
}

impl<'a> From<&'a Event> for EventRecord<'a> {
    fn from(e: &'a Event) -> Self {
        let base = EventRecord {
            t: e.time(),
            kind: e.kind(),
            ..Default::default()
        };
        match *e {
            Event::Birth { node, .. } | Event::Death { node, .. } => EventRecord {
                node: Some(node.0),
                ..base
            },
            Event::LinkAdd { src, dst, .. } | Event::LinkDel { src, dst, .. } => EventRecord {
                src: Some(src.0),
                dst: Some(dst.0),
                ..base
            },
        }
    }
}

struct Jsonl {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Jsonl {
    fn line(&mut self, record: &EventRecord) -> Result<(), Error> {
        serde_json::to_writer(&mut self.w, record)
            .map_err(std::io::Error::from)
            .and_then(|_| self.w.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }
}

struct DesignLogs {
    indicators: Csv,
    rank: Option<Csv>,
    topk: Option<Csv>,
}

pub fn build_graph(spec: &GraphSpec, rng: &mut SimRng) -> Result<TemporalGraph, Error> {
    Ok(match spec {
        GraphSpec::ErdosRenyi {
            n,
            p,
            mean_degree,
            symmetric,
        } => {
            let p = p.unwrap_or_else(|| generators::erdos_renyi_p_for_mean_degree(*n, mean_degree.unwrap_or(0.0)));
            generators::erdos_renyi(*n, p, *symmetric, rng)
        }
        GraphSpec::Barbell { clique, path_len } => generators::barbell(*clique, *path_len),
        GraphSpec::Path { n, symmetric } => generators::path(*n, *symmetric),
        GraphSpec::Cycle { n, symmetric } => generators::cycle(*n, *symmetric),
        GraphSpec::Star { leaves, symmetric } => generators::star(*leaves, *symmetric),
        GraphSpec::Complete { n } => generators::complete(*n),
        GraphSpec::Snapshot { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            read_snapshot(&text)?
        }
        GraphSpec::Empty => TemporalGraph::new(),
    })
}

fn moments(xs: &[usize]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<usize>() as f64 / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Executes one run and writes its logs into `out`, which is created if
/// needed. Fails before touching the filesystem if the config is invalid.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunSummary, Error> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let write_file = |name: &str, body: &str| {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };

    let mut rng = seeded(cfg.seed);
    let mut g = build_graph(&cfg.graph, &mut rng)?;
    write_file("config.toml", &cfg.to_toml())?;
    write_file("snapshot_initial.txt", &write_snapshot(&g))?;
    let smoother = cfg.smoother.build().expect("validated");

    let mut designs: Vec<(&str, DesignRunner, RankState, DesignLogs)> = Vec::new();
    for (name, dc) in &cfg.designs {
        let runner = DesignRunner::new(dc.clone(), &g, &mut rng);
        let logs = DesignLogs {
            indicators: Csv::create(out, &format!("indicators_{name}.csv"), &["t", "node_id", "Z", "m", "M"])?,
            rank: match cfg.output.rank_log {
                true => Some(Csv::create(out, &format!("rank_{name}.csv"), &["t", "node_id", "v", "cum_mean"])?),
                false => None,
            },
            topk: match cfg.output.top_k {
                0 => None,
                _ => Some(Csv::create(out, &format!("topk_{name}.csv"), &["t", "rank", "node_id", "v"])?),
            },
        };
        designs.push((name, runner, RankState::new(smoother.clone()), logs));
    }

    let (events_path, events_w) = create(out, "events.jsonl")?;
    let mut events = Jsonl {
        path: events_path,
        w: events_w,
    };
    let mut epidemic = match &cfg.epidemic {
        Some(_) => Some((
            EpidemicState::new(&g),
            Csv::create(
                out,
                "prevalence.csv",
                &["t", "n_susceptible", "n_early", "n_chronic", "expected_net_change"],
            )?,
            Csv::create(out, "infections.csv", &["t", "node_id", "source_id"])?,
        )),
        None => None,
    };

    let initial = g.population_size();
    let (mut births, mut deaths) = (0u64, 0u64);
    let (mut infections, mut virus_deaths, mut peak) = (0u64, 0u64, 0usize);
    let mut sizes: Vec<Vec<usize>> = vec![Vec::with_capacity(cfg.steps as usize); designs.len()];
    let mut jumps = vec![0u64; designs.len()];

    let ignite = |g: &TemporalGraph,
                      state: &mut EpidemicState,
                      log: &mut Csv,
                      rng: &mut SimRng|
     -> Result<u64, Error> {
        let seeds = state.ignite(g, &cfg.epidemic.as_ref().expect("configured").initial_infected, rng)?;
        for i in &seeds {
            log.row((g.time(), i.0, ""))?;
        }
        Ok(seeds.len() as u64)
    };
    if let (Some(ec), Some((state, _, inf))) = (&cfg.epidemic, epidemic.as_mut()) {
        if ec.start_step == 0 {
            infections += ignite(&g, state, inf, &mut rng)?;
        }
    }

    for _ in 0..cfg.steps {
        let log = flamerank_core::dynamics::evolve_step(&mut g, &cfg.dynamics, &mut rng);
        let t = g.time();
        for e in &log.events {
            events.line(&e.into())?;
        }
        births += log.births().count() as u64;
        let dead: BTreeSet<NodeId> = log.deaths().collect();
        deaths += dead.len() as u64;
        for (_, d, _, _) in designs.iter_mut() {
            d.purge_dead(&dead, &g, &mut rng);
        }
        if let Some((state, _, _)) = epidemic.as_mut() {
            state.sync(&g);
        }

        for (k, (_, d, _, _)) in designs.iter_mut().enumerate() {
            let delta = d.step(&g, epidemic.as_ref().map(|e| &e.0), &mut rng)?;
            jumps[k] += delta.jumps as u64;
        }

        if let (Some(ec), Some((state, prev, inf))) = (&cfg.epidemic, epidemic.as_mut()) {
            if t == ec.start_step {
                infections += ignite(&g, state, inf, &mut rng)?;
            } else if t > ec.start_step {
                let step = step_epidemic(&mut g, state, ec, &mut rng);
                for &(i, src) in &step.new_infections {
                    inf.row((t, i.0, src.0))?;
                }
                infections += step.new_infections.len() as u64;
                let killed: BTreeSet<NodeId> = step.deaths.iter().copied().collect();
                for i in &killed {
                    events.line(&EventRecord {
                        t,
                        kind: "death",
                        node: Some(i.0),
                        cause: Some("virus"),
                        ..Default::default()
                    })?;
                }
                virus_deaths += killed.len() as u64;
                for (_, d, _, _) in designs.iter_mut() {
                    d.purge_dead(&killed, &g, &mut rng);
                }
            }
            if t >= ec.start_step {
                let (s, e, c) = state.counts();
                peak = peak.max(e + c);
                let demo = (!cfg.dynamics.is_frozen()).then_some(&cfg.dynamics);
                prev.row((t, s, e, c, expected_net_change(&g, state, ec, demo)))?;
            }
        }

        for (k, (_, d, rank, logs)) in designs.iter_mut().enumerate() {
            let s = &d.state;
            rank.update_all(t, g.nodes(), |i| s.indicator(i));
            sizes[k].push(s.size());
            let touched: BTreeSet<NodeId> = s
                .current()
                .iter()
                .chain(s.multiplicities().keys())
                .chain(s.walk_counts().keys())
                .copied()
                .collect();
            for i in touched {
                logs.indicators
                    .row((t, i.0, u8::from(s.indicator(i)), s.multiplicity(i), s.walk_count(i)))?;
            }
            if let Some(w) = logs.rank.as_mut() {
                for (i, v, cum) in rank.values() {
                    w.row((t, i.0, v, cum))?;
                }
            }
            if let Some(w) = logs.topk.as_mut() {
                for (r, (i, v)) in rank.top_k(cfg.output.top_k).into_iter().enumerate() {
                    w.row((t, r + 1, i.0, v))?;
                }
            }
        }
    }

    let mut summary = RunSummary {
        seed: cfg.seed,
        steps: cfg.steps,
        population: PopulationSummary {
            initial,
            last: g.population_size(),
            births,
            deaths: deaths + virus_deaths,
        },
        designs: BTreeMap::new(),
        epidemic: None,
    };
    for (k, (name, d, _, logs)) in designs.into_iter().enumerate() {
        let n = &sizes[k];
        let (mean_size, sd_size) = moments(n);
        summary.designs.insert(
            name.to_string(),
            DesignSummary {
                mean_size,
                sd_size,
                mean_size_late: moments(&n[n.len() / 2..]).0,
                min_size: n.iter().copied().min().unwrap_or(0),
                max_size: n.iter().copied().max().unwrap_or(0),
                final_size: d.state.size(),
                ever_sampled: d.state.ever_sampled().len(),
                stuck_jumps: jumps[k],
            },
        );
        logs.indicators.finish()?;
        if let Some(w) = logs.rank {
            w.finish()?;
        }
        if let Some(w) = logs.topk {
            w.finish()?;
        }
    }
    if let Some((state, prev, inf)) = epidemic {
        let (s, e, c) = state.counts();
        summary.epidemic = Some(EpidemicSummary {
            n_susceptible: s,
            n_early: e,
            n_chronic: c,
            infections,
            virus_deaths,
            peak_prevalence: peak,
        });
        prev.finish()?;
        inf.finish()?;
    }
    events.w.flush().map_err(|e| Error::io(&events.path, e))?;
    write_file("snapshot_final.txt", &write_snapshot(&g))?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    json.push('\n');
    write_file("summary.json", &json)?;
    Ok(summary)
}

/// Runs `replicates` copies of `cfg` in parallel, replicate `k` with seed
/// `cfg.seed + k` and output in `out/rep_<k>`.
pub fn run_replicates(cfg: &RunConfig, out: &Path, replicates: u64) -> Result<Vec<RunSummary>, Error> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(k);
            run(&c, &out.join(format!("rep_{k:03}")))
        })
        .collect()
}
