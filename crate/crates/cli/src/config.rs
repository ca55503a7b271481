//! Run configuration, read from TOML.
//!
//! ```toml
//! config_version = 1
//! seed = 7
//! steps = 10000
//!
//! [graph]
//! generator = "erdos_renyi"
//! n = 100
//! mean_degree = 6.0
//!
//! [dynamics]
//! death_prob = 0.01
//!
//! [designs.back]
//! design = "d1"
//! control = "back"
//! target_size = 30
//! trace_prob = 0.3
//!
//! [smoother]
//! kind = "ewma"
//! lambda = 0.95
//! ```
//!
//! Designs are keyed by name; they are initialised and stepped in ascending
//! name order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flamerank_core::designs::DesignKind;
use flamerank_core::flame::{Smoother, DEFAULT_LAMBDA};
use flamerank_core::{DesignConfig, DynamicsConfig, EpidemicConfig, Violation};
use serde::{Deserialize, Serialize};

use crate::Error;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub steps: u64,
    pub graph: GraphSpec,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub designs: BTreeMap<String, DesignConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epidemic: Option<EpidemicConfig>,
    #[serde(default)]
    pub smoother: SmootherConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Give either `p` or `mean_degree`.
    ErdosRenyi {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_degree: Option<f64>,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    Barbell {
        clique: usize,
        path_len: usize,
    },
    Path {
        n: usize,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    Cycle {
        n: usize,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    Star {
        leaves: usize,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    Complete {
        n: usize,
    },
    /// A snapshot file; relative paths resolve against the config file.
    Snapshot {
        path: PathBuf,
    },
    Empty,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmootherConfig {
    Ewma {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    EqualWindow {
        lags: usize,
    },
    HalfNormal {
        lags: usize,
        sigma: f64,
    },
    Cumulative,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig::Ewma { lambda: DEFAULT_LAMBDA }
    }
}

impl SmootherConfig {
    pub fn build(&self) -> Result<Smoother, Violation> {
        match *self {
            SmootherConfig::Ewma { lambda } => {
                Smoother::ewma(lambda).map_err(|e| Violation::new("lambda", e.to_string()))
            }
            SmootherConfig::EqualWindow { lags } => Ok(Smoother::equal_window(lags)),
            SmootherConfig::HalfNormal { lags, sigma } => {
                Smoother::half_normal_window(lags, sigma).map_err(|e| Violation::new("sigma", e.to_string()))
            }
            SmootherConfig::Cumulative => Ok(Smoother::Cumulative),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Where `run` writes unless `--out` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write `rank_<design>.csv` with every live node every step.
    pub rank_log: bool,
    /// Rows per step in `topk_<design>.csv`; 0 disables the file.
    pub top_k: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            rank_log: true,
            top_k: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a config file, resolving a relative snapshot path against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let GraphSpec::Snapshot { path: snap } = &mut cfg.graph {
            if snap.is_relative() {
                if let Some(dir) = path.parent() {
                    *snap = dir.join(&*snap);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    /// Every violated constraint; empty means the config is runnable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.config_version != CONFIG_VERSION {
            v.push(Violation::new(
                "config_version",
                format!("unsupported version {} (expected {CONFIG_VERSION})", self.config_version),
            ));
        }
        v.extend(self.graph.violations().into_iter().map(|x| x.under("graph")));
        v.extend(self.dynamics.violations().into_iter().map(|x| x.under("dynamics")));
        for (name, d) in &self.designs {
            let prefix = format!("designs.{name}");
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                v.push(Violation::new(prefix.clone(), "design names may use only [A-Za-z0-9_-]"));
            }
            v.extend(d.violations().into_iter().map(|x| x.under(&prefix)));
            if d.design == DesignKind::D5 && self.epidemic.is_none() {
                v.push(Violation::new(format!("{prefix}.design"), "d5 needs an [epidemic] section"));
            }
        }
        if let Some(e) = &self.epidemic {
            v.extend(e.violations().into_iter().map(|x| x.under("epidemic")));
        }
        if let Err(x) = self.smoother.build() {
            v.push(x.under("smoother"));
        }
        v
    }
}

impl GraphSpec {
    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        match self {
            GraphSpec::ErdosRenyi { p, mean_degree, .. } => match (p, mean_degree) {
                (Some(p), None) if !(0.0..=1.0).contains(p) => {
                    v.push(Violation::new("p", format!("probability must lie in [0, 1] (got {p})")))
                }
                (None, Some(d)) if !(d.is_finite() && *d >= 0.0) => {
                    v.push(Violation::new("mean_degree", format!("must be finite and >= 0 (got {d})")))
                }
                (Some(_), Some(_)) | (None, None) => {
                    v.push(Violation::new("p", "give exactly one of p and mean_degree"))
                }
                _ => {}
            },
            GraphSpec::Barbell { clique, .. } if *clique < 2 => {
                v.push(Violation::new("clique", "cliques need at least 2 nodes"))
            }
            GraphSpec::Snapshot { path } if !path.is_file() => {
                v.push(Violation::new("path", format!("no snapshot file at {}", path.display())))
            }
            _ => {}
        }
        v
    }
}
