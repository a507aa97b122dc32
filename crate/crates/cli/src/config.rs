//! Flag/config-file merging. Flags win over the config file, which wins
//! over the preset, which wins over built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use txconfirm_core::batch::{Precision, SolverOptions};
use txconfirm_core::priority::{PAPER_BLOCK_CAPACITY, PAPER_ZETA};
use txconfirm_core::service::PAPER_BLOCK_RATE;
use txconfirm_core::sim::BlockFill;
use txconfirm_core::ServiceDistribution;

/// Bad flags or config values; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

const KNOWN_KEYS: &[&str] = &[
    "preset",
    "service",
    "mu",
    "erlang_shape",
    "b",
    "precision",
    "lambda",
    "lambda_high",
    "lambda_low",
    "zeta",
    "seed",
    "replications",
    "warmup",
    "horizon",
    "fill",
];

/// `key = value` lines; `#` starts a comment. Dashes in keys are read as
/// underscores.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("line {}: expected key=value, found `{line}`", i + 1));
            };
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return usage(format!("line {}: unknown key `{}`", i + 1, k.trim()));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => match v.parse() {
                Ok(x) => Ok(Some(x)),
                Err(_) => usage(format!("config key `{key}`: invalid value `{v}`")),
            },
        }
    }

    pub fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => match T::from_str(v, true) {
                Ok(x) => Ok(Some(x)),
                Err(_) => usage(format!("config key `{key}`: invalid value `{v}`")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ServiceArg {
    Exp,
    Det,
    Erlang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FillArg {
    /// A completing block takes the highest-priority transactions present.
    Priority,
    /// Arrivals join the open block while it has room; contents never change.
    Frozen,
}

impl From<FillArg> for BlockFill {
    fn from(f: FillArg) -> Self {
        match f {
            FillArg::Priority => BlockFill::PriorityAtCompletion,
            FillArg::Frozen => BlockFill::Frozen,
        }
    }
}

/// Model flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// key=value file with defaults for these and other flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,
    /// Parameter set measured on the Bitcoin network (b=1750, mu=1.8379e-3, zeta=13.288).
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Block-generation time law.
    #[arg(long, global = true, value_enum)]
    pub service: Option<ServiceArg>,
    /// Block-generation rate (1/E[S], per second).
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Number of phases for --service erlang.
    #[arg(long, global = true)]
    pub erlang_shape: Option<u32>,
    /// Maximum transactions per block.
    #[arg(long, global = true)]
    pub b: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub precision: Option<PrecisionArg>,
}

/// Fully resolved model settings.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ConfigFile,
    pub paper: bool,
    pub service: ServiceDistribution,
    pub capacity: Option<usize>,
    pub options: SolverOptions,
}

impl Model {
    pub fn capacity(&self) -> Result<usize> {
        match self.capacity {
            Some(b) => Ok(b),
            None => usage("--b is required (or use --preset paper)"),
        }
    }

    /// Ratio lambda_H / lambda_L: flag, then config, then the preset value.
    pub fn zeta(&self, flag: Option<f64>) -> Result<f64> {
        Ok(flag.or(self.config.get("zeta")?).unwrap_or(PAPER_ZETA))
    }
}

pub fn or_config<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<Model> {
        let config = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let preset = match self.preset {
            Some(p) => Some(p),
            None => config.get_enum("preset")?,
        };
        let paper = preset == Some(Preset::Paper);
        let kind = match self.service {
            Some(s) => s,
            None => config.get_enum("service")?.unwrap_or(ServiceArg::Exp),
        };
        let mu = or_config(self.mu, &config, "mu")?.unwrap_or(PAPER_BLOCK_RATE);
        if !(mu.is_finite() && mu > 0.0) {
            return usage(format!("--mu must be positive, got {mu}"));
        }
        let shape = or_config(self.erlang_shape, &config, "erlang_shape")?;
        let service = match kind {
            ServiceArg::Exp => ServiceDistribution::exponential(mu),
            ServiceArg::Det => ServiceDistribution::deterministic(1.0 / mu),
            ServiceArg::Erlang => {
                let Some(k) = shape else {
                    return usage("--service erlang needs --erlang-shape");
                };
                ServiceDistribution::erlang(k, k as f64 * mu)
            }
        }
        .map_err(|e| UsageError(e.to_string()))?;
        let capacity = or_config(self.b, &config, "b")?.or(paper.then_some(PAPER_BLOCK_CAPACITY));
        if capacity == Some(0) {
            return usage("--b must be at least 1");
        }
        let precision = match self.precision {
            Some(p) => Some(p),
            None => config.get_enum("precision")?,
        };
        let precision = match precision.unwrap_or(PrecisionArg::Double) {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
            PrecisionArg::Auto => Precision::Auto,
        };
        Ok(Model {
            config,
            paper,
            service,
            capacity,
            options: SolverOptions { precision },
        })
    }
}
