use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use flamerank::analyze::{parse_window, DEFAULT_HORIZON};
use flamerank::{analyze, format_violations, run, run_replicates, RunConfig};

#[derive(Parser)]
#[command(name = "flamerank", version, about = "Sampling designs and flame rank on temporal networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run (or several replicates) and write its logs.
    Run {
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replicate k runs with seed + k into <out>/rep_<k>.
        #[arg(long)]
        replicates: Option<u64>,
        /// Output directory; defaults to output.dir, then ./out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and list every violation.
    Validate { config: PathBuf },
    /// Summarise a finished run directory as JSON.
    Analyze {
        run_dir: PathBuf,
        /// Inclusive step window `a:b`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(u64, u64)>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    match try_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn try_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            replicates,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let started = Instant::now();
            match replicates {
                Some(r) => {
                    let summaries = run_replicates(&cfg, &out, r)?;
                    eprintln!("{} replicates in {:.2?}", summaries.len(), started.elapsed());
                }
                None => {
                    let summary = run(&cfg, &out)?;
                    println!("{}", serde_json::to_string_pretty(&summary)?);
                    eprintln!("{} steps in {:.2?}", cfg.steps, started.elapsed());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let v = cfg.validate();
            if v.is_empty() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{}", format_violations(&v));
                Ok(ExitCode::from(2))
            }
        }
        Command::Analyze {
            run_dir,
            window,
            horizon,
            out,
        } => {
            if !run_dir.join("config.toml").is_file() {
                bail!("{} is not a run directory", run_dir.display());
            }
            let report = analyze(&run_dir, window, horizon)?;
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
