//! Experiment driver for `flamerank-core`: TOML run configs, the seeded
//! step loop, log export, replicate fan-out and post-hoc analysis.

use std::path::{Path, PathBuf};

use flamerank_core::analysis::AnalysisError;
use flamerank_core::designs::DesignError;
use flamerank_core::epidemic::EpidemicError;
use flamerank_core::Violation;

pub mod analyze;
pub mod config;
pub mod run;
pub mod snapshot;

pub use analyze::{analyze, AnalysisReport};
pub use config::RunConfig;
pub use run::{run, run_replicates, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}: {1}")]
    Malformed(PathBuf, String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Epidemic(#[from] EpidemicError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Error::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}
