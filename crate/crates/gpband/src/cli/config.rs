//! Subcommand configurations: TOML files with flat keys, unknown keys
//! rejected, every flag having a file equivalent.

use crate::sim::LambdaRule;
use crate::spectral::SmoothnessClass;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("invalid value for {key}: {message}")]
    BadValue { key: &'static str, message: String },
}

fn default_n() -> usize {
    200
}
fn default_nu() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    0.1
}
fn default_grid() -> usize {
    200
}
fn default_beta() -> f64 {
    0.95
}
fn default_draws() -> usize {
    1000
}
fn default_rule() -> String {
    "default".into()
}
fn default_betas() -> Vec<f64> {
    vec![0.80, 0.90]
}
fn default_replicates() -> usize {
    1000
}
fn default_radius() -> f64 {
    1.0
}
fn default_class() -> String {
    "holder".into()
}
fn default_seeds_per_n() -> usize {
    20
}

/// Configuration of `fit`: one synthetic or file-backed dataset, one
/// posterior, grid summaries and plot data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Optional CSV dataset (columns x,y with header); synthetic when absent.
    pub dataset: Option<String>,
    pub n: usize,
    pub kernel_nu: f64,
    pub sigma: f64,
    pub grid_size: usize,
    pub beta: f64,
    pub band_draws: usize,
    pub lambda_rule: String,
    pub lambda_value: Option<f64>,
    pub class: Option<String>,
    pub class_radius: Option<f64>,
    pub seed: u64,
    pub parallel: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            n: default_n(),
            kernel_nu: default_nu(),
            sigma: default_sigma(),
            grid_size: default_grid(),
            beta: default_beta(),
            band_draws: default_draws(),
            lambda_rule: default_rule(),
            lambda_value: None,
            class: None,
            class_radius: None,
            seed: 0,
            parallel: None,
        }
    }
}

/// Configuration of `coverage`: the replicated experiment over a grid of
/// kernels, sample sizes and levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageConfig {
    pub kernel_nus: Vec<f64>,
    pub ns: Vec<usize>,
    #[serde(rename = "betas")]
    pub betas: Vec<f64>,
    pub replicates: usize,
    pub grid_size: usize,
    pub sigma: f64,
    pub band_draws: usize,
    pub lambda_rule: String,
    pub lambda_value: Option<f64>,
    pub class: Option<String>,
    pub class_radius: Option<f64>,
    pub seed: u64,
    pub parallel: Option<usize>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            kernel_nus: vec![0.1, 0.15, 1.2],
            ns: vec![200, 500, 2000],
            betas: default_betas(),
            replicates: default_replicates(),
            grid_size: default_grid(),
            sigma: default_sigma(),
            band_draws: default_draws(),
            lambda_rule: default_rule(),
            lambda_value: None,
            class: None,
            class_radius: None,
            seed: 0,
            parallel: None,
        }
    }
}

/// Configuration of `rates`: the sup-norm rate experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub ns: Vec<usize>,
    pub alpha: f64,
    pub class: String,
    pub radius: f64,
    pub sigma: f64,
    pub seeds_per_n: usize,
    pub grid_size: usize,
    pub seed: u64,
    pub parallel: Option<usize>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            ns: vec![100, 200, 400, 800, 1600],
            alpha: 1.2,
            class: default_class(),
            radius: default_radius(),
            sigma: default_sigma(),
            seeds_per_n: default_seeds_per_n(),
            grid_size: default_grid(),
            seed: 0,
            parallel: None,
        }
    }
}

/// Arguments of `asymptotic` (no file outputs, so no file config).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticConfig {
    pub alpha: f64,
    pub beta: f64,
    pub h: Option<f64>,
}

pub fn parse_class(name: &str) -> Result<SmoothnessClass, ConfigError> {
    match name.to_ascii_lowercase().as_str() {
        "holder" => Ok(SmoothnessClass::Holder),
        "sobolev" => Ok(SmoothnessClass::Sobolev),
        other => Err(ConfigError::BadValue {
            key: "class",
            message: format!("unknown class '{other}' (holder|sobolev)"),
        }),
    }
}

/// Map the flat config keys onto a penalty rule.
pub fn resolve_lambda_rule(
    rule: &str,
    value: Option<f64>,
    class: Option<&str>,
    radius: Option<f64>,
) -> Result<LambdaRule, ConfigError> {
    match rule.to_ascii_lowercase().as_str() {
        "default" | "unit_prior" => Ok(LambdaRule::Default),
        "kernel_matched" => Ok(LambdaRule::KernelMatched),
        "explicit" => {
            let v = value.ok_or(ConfigError::BadValue {
                key: "lambda_value",
                message: "lambda_rule = \"explicit\" requires lambda_value".into(),
            })?;
            if !(v > 0.0) {
                return Err(ConfigError::BadValue {
                    key: "lambda_value",
                    message: format!("must be positive, got {v}"),
                });
            }
            Ok(LambdaRule::Explicit(v))
        }
        "class_based" => {
            let class = parse_class(class.ok_or(ConfigError::BadValue {
                key: "class",
                message: "lambda_rule = \"class_based\" requires class".into(),
            })?)?;
            Ok(LambdaRule::ClassBased {
                class,
                radius: radius.unwrap_or(1.0),
            })
        }
        other => Err(ConfigError::BadValue {
            key: "lambda_rule",
            message: format!(
                "unknown rule '{other}' (default|kernel_matched|explicit|class_based)"
            ),
        }),
    }
}

/// Parse a TOML config file with unknown keys rejected.
pub fn load_toml<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Environment override for the base seed.
pub fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var(super::ENV_SEED) {
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|e| ConfigError::BadValue {
                key: "GPBAND_SEED",
                message: e.to_string(),
            }),
        Err(_) => Ok(None),
    }
}

/// Environment override for the parallelism degree.
pub fn env_parallel() -> Result<Option<usize>, ConfigError> {
    match std::env::var(super::ENV_PARALLEL) {
        Ok(raw) => raw
            .parse::<usize>()
            .map(Some)
            .map_err(|e| ConfigError::BadValue {
                key: "GPBAND_PARALLEL",
                message: e.to_string(),
            }),
        Err(_) => Ok(None),
    }
}
