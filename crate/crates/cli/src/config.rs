//! Experiment configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! replicates = 100
//! max_generations = 50
//!
//! [schedule]
//! kind = "partially_synthetic"   # fully_synthetic | partially_synthetic | most_recent | randomly_sampled
//! samples = 10                   # n
//! real_samples = 100             # N, partially_synthetic only
//! # window = 4                   # K, most_recent only
//! # real_data = "fresh"          # or "fixed_corpus", randomly_sampled only
//!
//! [initial]
//! size = 600                     # s
//! support = 52                   # s~
//! s0 = 0.1
//! # probs = [0.5, 0.3, 0.2]      # instead of the three keys above
//!
//! [output]
//! dir = "out/fig3"
//! formats = ["csv", "json", "svg"]
//!
//! [bounds]
//! epsilon = 0.1
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use collapse_core::{RealDataMode, Schedule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::initial::InitialSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        })
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    replicates: Option<u64>,
    max_generations: u64,
    schedule: RawSchedule,
    initial: RawInitial,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    bounds: BoundsOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    kind: String,
    samples: u64,
    real_samples: Option<u64>,
    window: Option<u64>,
    real_data: Option<RealDataMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    probs: Option<Vec<f64>>,
    size: Option<usize>,
    support: Option<usize>,
    s0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    formats: Option<Vec<Format>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOptions {
    /// Target drift for the synthetic-budget calculation.
    pub epsilon: Option<f64>,
    /// Overrides the simulated estimate of the first generation's
    /// balanced-split product.
    pub expected_lambda1: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPLICATES: u64 = 100;

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicates: u64,
    pub max_generations: u64,
    pub schedule: Schedule,
    pub initial: InitialSpec,
    pub bounds: BoundsOptions,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub formats: Vec<Format>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        resolve(raw)
    }

    /// Short hex digest of the resolved configuration; used as the run id.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let replicates = raw.replicates.unwrap_or(DEFAULT_REPLICATES);
    if replicates == 0 {
        return Err(ConfigError::validation("replicates", "must be at least 1"));
    }
    if raw.max_generations == 0 {
        return Err(ConfigError::validation("max_generations", "must be at least 1"));
    }
    let schedule = resolve_schedule(&raw.schedule)?;
    let initial = InitialSpec::resolve(
        raw.initial.probs,
        raw.initial.size,
        raw.initial.support,
        raw.initial.s0,
    )?;
    if let Some(eps) = raw.bounds.epsilon {
        if !(eps > 0.0) {
            return Err(ConfigError::validation("bounds.epsilon", "must be positive"));
        }
    }
    if let Some(l) = raw.bounds.expected_lambda1 {
        if !(0.0..=0.25).contains(&l) {
            return Err(ConfigError::validation(
                "bounds.expected_lambda1",
                "must lie in [0, 1/4]",
            ));
        }
    }
    let mut formats = raw
        .output
        .formats
        .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]);
    formats.sort();
    formats.dedup();
    Ok(ExperimentConfig {
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        replicates,
        max_generations: raw.max_generations,
        schedule,
        initial,
        bounds: raw.bounds,
        out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        formats,
    })
}

fn resolve_schedule(raw: &RawSchedule) -> Result<Schedule, ConfigError> {
    let unexpected = |field: &str, kind: &str| {
        ConfigError::validation(
            format!("schedule.{field}"),
            format!("not used by kind `{kind}`"),
        )
    };
    let kind = raw.kind.as_str();
    if raw.real_samples.is_some() && kind != "partially_synthetic" {
        return Err(unexpected("real_samples", kind));
    }
    if raw.window.is_some() && kind != "most_recent" {
        return Err(unexpected("window", kind));
    }
    if raw.real_data.is_some() && kind != "randomly_sampled" {
        return Err(unexpected("real_data", kind));
    }
    let schedule = match kind {
        "fully_synthetic" => Schedule::fully_synthetic(raw.samples),
        "partially_synthetic" => {
            let real = raw.real_samples.ok_or_else(|| {
                ConfigError::validation("schedule.real_samples", "required by partially_synthetic")
            })?;
            Schedule::partially_synthetic(real, raw.samples)
        }
        "most_recent" => {
            let window = raw.window.ok_or_else(|| {
                ConfigError::validation("schedule.window", "required by most_recent")
            })?;
            Schedule::most_recent(raw.samples, window)
        }
        "randomly_sampled" => {
            Schedule::randomly_sampled(raw.samples, raw.real_data.unwrap_or_default())
        }
        other => {
            return Err(ConfigError::validation(
                "schedule.kind",
                format!(
                    "unknown kind `{other}` (expected fully_synthetic, partially_synthetic, most_recent or randomly_sampled)"
                ),
            ))
        }
    };
    schedule.map_err(|e| ConfigError::validation("schedule", e.to_string()))
}
