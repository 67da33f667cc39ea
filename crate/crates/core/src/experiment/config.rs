//! Flat `key=value` experiment configuration.
//!
//! One key per line, `#` starts a comment, lists are comma separated.
//! Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::chain::KernelKind;
use crate::protocol::{validate, BackoffSemantics, ParamError, RawParams, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    MissingEquals { line: usize },
    #[error("line {line}: unknown key \"{key}\"")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key \"{key}\" given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: malformed value \"{value}\" for \"{key}\"")]
    Malformed {
        line: usize,
        key: String,
        value: String,
    },
    #[error("\"{0}\" needs at least one value")]
    EmptyList(&'static str),
    #[error("trials must be at least 1 when simulation is requested")]
    NoTrials,
    #[error("mean_window must be positive")]
    MeanWindow,
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(()),
        }
    }
}

/// A parameter sweep and the methods to run at every point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Shared parameters; `n_stations` and `packet_len` hold the first
    /// sweep values.
    pub base: RawParams,
    pub n_values: Vec<u32>,
    pub l_values: Vec<u32>,
    pub semantics: BackoffSemantics,
    /// Sorted, deduplicated.
    pub kernels: Vec<KernelKind>,
    pub policy: RetryPolicy,
    pub simulate: bool,
    pub exact: bool,
    pub trials: u64,
    pub seed: u64,
    /// Override of `E[W]` in the channel-busy probability.
    pub mean_window: Option<f64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let base = RawParams::default();
        Self {
            base,
            n_values: vec![base.n_stations],
            l_values: vec![base.packet_len],
            semantics: BackoffSemantics::Corrected,
            kernels: vec![KernelKind::Original, KernelKind::Improved],
            policy: RetryPolicy::CollisionContinue,
            simulate: true,
            exact: true,
            trials: 10_000,
            seed: 0,
            mean_window: None,
            format: OutputFormat::Csv,
            out: None,
        }
    }
}

fn parse_scalar<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Malformed {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_scalar(line, key, v.trim()))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Malformed {
            line,
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

fn parse_kernel(line: usize, value: &str) -> Result<KernelKind, ConfigError> {
    match value {
        "original" => Ok(KernelKind::Original),
        "improved" => Ok(KernelKind::Improved),
        _ => Err(ConfigError::Malformed {
            line,
            key: "kernels".into(),
            value: value.into(),
        }),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::MissingEquals { line })?;
        let (key, value) = (key.trim(), value.trim());
        let canonical = match key {
            "packet_len" => "L",
            "n_stations" => "N",
            k => k,
        };

        match canonical {
            "be_min" => cfg.base.be_min = parse_scalar(line, key, value)?,
            "be_max" => cfg.base.be_max = parse_scalar(line, key, value)?,
            "nb_max" => cfg.base.nb_max = parse_scalar(line, key, value)?,
            "cw" => cfg.base.cw = parse_scalar(line, key, value)?,
            "L" => cfg.l_values = parse_list(line, key, value)?,
            "N" => cfg.n_values = parse_list(line, key, value)?,
            "semantics" => {
                cfg.semantics = match value {
                    "naive" => BackoffSemantics::Naive,
                    "corrected" => BackoffSemantics::Corrected,
                    _ => {
                        return Err(ConfigError::Malformed {
                            line,
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "kernels" => {
                let mut kinds = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| parse_kernel(line, v))
                    .collect::<Result<Vec<_>, _>>()?;
                kinds.sort();
                kinds.dedup();
                cfg.kernels = kinds;
            }
            "policy" => {
                cfg.policy = match value {
                    "nack_done" => RetryPolicy::NackDone,
                    "collision_continue" => RetryPolicy::CollisionContinue,
                    _ => {
                        return Err(ConfigError::Malformed {
                            line,
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "sim" => cfg.simulate = parse_bool(line, key, value)?,
            "exact" => cfg.exact = parse_bool(line, key, value)?,
            "trials" => cfg.trials = parse_scalar(line, key, value)?,
            "seed" => cfg.seed = parse_scalar(line, key, value)?,
            "mean_window" => cfg.mean_window = Some(parse_scalar(line, key, value)?),
            "format" => cfg.format = parse_scalar(line, key, value)?,
            "out" => cfg.out = Some(PathBuf::from(value)),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        if !seen.insert(canonical.to_string()) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }

    check(&mut cfg)?;
    Ok(cfg)
}

fn check(cfg: &mut ExperimentConfig) -> Result<(), ConfigError> {
    let (&n0, &l0) = match (cfg.n_values.first(), cfg.l_values.first()) {
        (None, _) => return Err(ConfigError::EmptyList("N")),
        (_, None) => return Err(ConfigError::EmptyList("L")),
        (Some(n), Some(l)) => (n, l),
    };
    cfg.base.n_stations = n0;
    cfg.base.packet_len = l0;
    for &n in &cfg.n_values {
        for &l in &cfg.l_values {
            validate(RawParams {
                n_stations: n,
                packet_len: l,
                ..cfg.base
            })?;
        }
    }
    if cfg.simulate && cfg.trials == 0 {
        return Err(ConfigError::NoTrials);
    }
    if cfg.mean_window.is_some_and(|m| m.is_nan() || m <= 0.0) {
        return Err(ConfigError::MeanWindow);
    }
    Ok(())
}
