use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use flamerank::config::{GraphSpec, RunConfig, SmootherConfig};
use flamerank::snapshot::{read_snapshot, write_snapshot};
use flamerank::{analyze, run, run_replicates};
use flamerank_core::rng::seeded;
use flamerank_core::{dynamics, generators, DynamicsConfig, NodeId};

const BASE: &str = r#"
config_version = 1
seed = 11
steps = 300

[graph]
generator = "erdos_renyi"
n = 40
mean_degree = 4.0

[dynamics]
birth_rate = 0.3
death_prob = 0.005
link_form_rate = 1.0
link_dissolve_prob = 0.02

[designs.walk]
design = "random_walk"
walk_count = 4
lazy_prob = 0.3
jump_when_stuck = true

[designs.traced]
design = "d2"
control = "back"
target_size = 8
trace_prob = 0.4
jump_when_stuck = true

[designs.infected]
design = "d5"
infected_seed_prob = 0.3
link_trace_prob = 0.3
removal_prob = 0.2

[epidemic]
start_step = 20
beta_early = 0.2
beta_chronic = 0.02

[output]
top_k = 5
"#;

fn base() -> RunConfig {
    RunConfig::from_toml(BASE).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn valid_config_has_no_violations() {
    assert!(base().validate().is_empty());
}

#[test]
fn ewma_bound_violation_names_the_field() {
    let mut cfg = base();
    cfg.smoother = SmootherConfig::Ewma { lambda: 1.2 };
    let v = cfg.validate();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].field, "smoother.lambda");
    assert!(v[0].message.contains("lambda"));
}

#[test]
fn chronic_transmission_above_early_is_rejected() {
    let mut cfg = base();
    let e = cfg.epidemic.as_mut().unwrap();
    e.beta_chronic = 0.5;
    let v = cfg.validate();
    assert!(v.iter().any(|x| x.field == "epidemic.beta_chronic"), "{v:?}");
}

#[test]
fn nested_design_fields_get_dotted_paths() {
    let mut cfg = base();
    cfg.designs.get_mut("traced").unwrap().trace_prob = 1.5;
    cfg.epidemic = None;
    let fields: Vec<String> = cfg.validate().into_iter().map(|v| v.field).collect();
    assert!(fields.contains(&"designs.traced.trace_prob".to_string()));
    assert!(fields.contains(&"designs.infected.design".to_string()));
}

#[test]
fn unknown_keys_are_parse_errors() {
    let text = BASE.replace("walk_count = 4", "walk_count = 4\nwalkers = 2");
    assert!(RunConfig::from_toml(&text).is_err());
}

#[test]
fn config_survives_a_toml_round_trip() {
    let cfg = base();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn zero_steps_leaves_only_the_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base();
    cfg.steps = 0;
    let summary = run(&cfg, dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("events.jsonl")).unwrap(), "");
    for name in ["indicators_traced.csv", "rank_walk.csv", "prevalence.csv"] {
        let body = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(body.lines().count(), 1, "{name} should hold only a header");
    }
    let snap = fs::read_to_string(dir.path().join("snapshot_initial.txt")).unwrap();
    assert!(snap.starts_with("0 40 "));
    assert_eq!(summary.designs["traced"].mean_size, 0.0);
}

#[test]
fn same_config_gives_byte_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&base(), a.path()).unwrap();
    run(&base(), b.path()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 16);
    assert_eq!(fa, fb);

    let mut other = base();
    other.seed += 1;
    let c = tempfile::tempdir().unwrap();
    run(&other, c.path()).unwrap();
    assert_ne!(files(c.path()), fa);
}

#[test]
fn every_logged_node_has_an_origin() {
    let dir = tempfile::tempdir().unwrap();
    run(&base(), dir.path()).unwrap();
    let snap = read_snapshot(&fs::read_to_string(dir.path().join("snapshot_initial.txt")).unwrap()).unwrap();
    let mut known: BTreeSet<u64> = snap.nodes().iter().map(|i| i.0).collect();
    let events = fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    let mut mentioned = BTreeSet::new();
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["kind"] == "birth" {
            known.insert(v["node"].as_u64().unwrap());
        }
        for k in ["node", "src", "dst"] {
            if let Some(i) = v[k].as_u64() {
                mentioned.insert(i);
            }
        }
    }
    for name in ["indicators_walk.csv", "indicators_traced.csv", "rank_infected.csv", "infections.csv"] {
        let mut r = csv::Reader::from_path(dir.path().join(name)).unwrap();
        for rec in r.records() {
            mentioned.insert(rec.unwrap()[1].parse::<u64>().unwrap());
        }
    }
    let orphans: Vec<_> = mentioned.difference(&known).collect();
    assert!(orphans.is_empty(), "{orphans:?}");
}

#[test]
fn walker_count_is_conserved_in_the_logs() {
    let dir = tempfile::tempdir().unwrap();
    run(&base(), dir.path()).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("indicators_walk.csv")).unwrap();
    let mut per_t = std::collections::BTreeMap::<u64, u64>::new();
    for rec in r.records() {
        let rec = rec.unwrap();
        *per_t.entry(rec[0].parse().unwrap()).or_default() += rec[4].parse::<u64>().unwrap();
    }
    assert_eq!(per_t.len(), 300);
    assert!(per_t.values().all(|&m| m == 4));
}

#[test]
fn back_control_summary_mean_is_near_target() {
    let text = r#"
config_version = 1
seed = 2
steps = 10000
[graph]
generator = "erdos_renyi"
n = 100
mean_degree = 6.0
[designs.d1]
design = "d1"
control = "back"
target_size = 30
trace_prob = 0.3
[output]
rank_log = false
"#;
    let dir = tempfile::tempdir().unwrap();
    let s = run(&RunConfig::from_toml(text).unwrap(), dir.path()).unwrap();
    let m = s.designs["d1"].mean_size;
    assert!((29.0..=31.0).contains(&m), "{m}");
}

#[test]
fn snapshot_round_trip_preserves_structure() {
    let mut rng = seeded(1);
    let mut g = generators::erdos_renyi(25, 0.15, false, &mut rng);
    let cfg = DynamicsConfig {
        birth_rate: 1.0,
        death_prob: 0.05,
        link_form_rate: 2.0,
        ..DynamicsConfig::frozen()
    };
    for _ in 0..20 {
        dynamics::evolve_step(&mut g, &cfg, &mut rng);
    }
    let text = write_snapshot(&g);
    let back = read_snapshot(&text).unwrap();
    assert_eq!(write_snapshot(&back), text);
    assert_eq!(back.time(), g.time());
    assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    for &i in g.nodes() {
        assert_eq!(back.birth_time(i), g.birth_time(i));
    }
    let mut back = back;
    let fresh = back.add_node();
    assert!(fresh > *g.nodes().last().unwrap());
}

#[test]
fn malformed_snapshots_are_rejected() {
    assert!(read_snapshot("").is_err());
    assert!(read_snapshot("0 1 0\nnode 0 0\nnode 0 0\n").is_err());
    assert!(read_snapshot("0 2 1\nnode 0 0\nnode 1 0\nedge 0 5\n").is_err());
    assert!(read_snapshot("0 2 0\nnode 0 0\n").is_err());
    let g = read_snapshot("4 2 1\nnode 0 0\nnode 3 2\nedge 3 0\n").unwrap();
    assert!(g.has_edge(NodeId(3), NodeId(0)));
    assert_eq!(g.time(), 4);
}

#[test]
fn snapshot_graph_spec_loads_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), write_snapshot(&generators::cycle(6, true))).unwrap();
    let text = BASE.replace(
        "generator = \"erdos_renyi\"\nn = 40\nmean_degree = 4.0",
        "generator = \"snapshot\"\npath = \"g.txt\"",
    );
    fs::write(dir.path().join("run.toml"), text).unwrap();
    let cfg = RunConfig::load(&dir.path().join("run.toml")).unwrap();
    assert!(matches!(&cfg.graph, GraphSpec::Snapshot { path } if path.is_absolute()));
    let s = run(&cfg, &dir.path().join("out")).unwrap();
    assert_eq!(s.population.initial, 6);
}

#[test]
fn replicates_use_consecutive_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base();
    cfg.steps = 30;
    let summaries = run_replicates(&cfg, dir.path(), 3).unwrap();
    let seeds: Vec<u64> = summaries.iter().map(|s| s.seed).collect();
    assert_eq!(seeds, vec![11, 12, 13]);
    let single = tempfile::tempdir().unwrap();
    cfg.seed = 12;
    run(&cfg, single.path()).unwrap();
    assert_eq!(files(&dir.path().join("rep_001")), files(single.path()));
}

#[test]
fn analysis_report_covers_every_design() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base();
    cfg.graph = GraphSpec::Cycle { n: 40, symmetric: true };
    run(&cfg, dir.path()).unwrap();
    let report = analyze(dir.path(), Some((50, 300)), 20).unwrap();
    assert_eq!(report.window, (50, 300));
    assert_eq!(report.designs.len(), 3);
    for d in report.designs.values() {
        let g = d.flame_concentration.unwrap();
        assert!((0.0..=1.0).contains(&g));
    }
    let st = report.stationary.expect("initial graph analysed");
    assert!((st.pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(st.pi.iter().all(|p| (p - 1.0 / 40.0).abs() < 1e-9));
}

#[test]
fn disconnected_initial_graph_reports_why_there_is_no_stationary_vector() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base();
    cfg.graph = GraphSpec::Path { n: 5, symmetric: false };
    cfg.designs.get_mut("walk").unwrap().jump_when_stuck = false;
    cfg.steps = 20;
    run(&cfg, dir.path()).unwrap();
    let report = analyze(dir.path(), None, 20).unwrap();
    assert!(report.stationary.is_none());
    assert!(report.stationary_error.is_some());
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flamerank"))
}

#[test]
fn cli_validate_reports_violations_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, BASE.replace("[output]", "[smoother]\nkind = \"ewma\"\nlambda = 1.2\n\n[output]")).unwrap();
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("smoother.lambda"));

    let good = dir.path().join("good.toml");
    fs::write(&good, BASE).unwrap();
    let out = bin().arg("validate").arg(&good).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn cli_run_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, BASE).unwrap();
    let out_dir = dir.path().join("out");
    let st = bin()
        .args(["run", cfg.to_str().unwrap(), "--seed", "5", "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);

    let an = bin()
        .args(["analyze", out_dir.to_str().unwrap(), "--window", "10:300"])
        .output()
        .unwrap();
    assert!(an.status.success(), "{}", String::from_utf8_lossy(&an.stderr));
    let report: serde_json::Value = serde_json::from_slice(&an.stdout).unwrap();
    assert_eq!(report["window"], serde_json::json!([10, 300]));

    let reps = dir.path().join("reps");
    let st = bin()
        .args(["run", cfg.to_str().unwrap(), "--replicates", "2", "--out", reps.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(st.status.success());
    assert!(reps.join("rep_000/summary.json").is_file() && reps.join("rep_001/summary.json").is_file());

    let bad = bin().args(["analyze", out_dir.to_str().unwrap(), "--window", "9:3"]).output().unwrap();
    assert!(!bad.status.success());
}
