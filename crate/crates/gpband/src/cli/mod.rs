//! Batch experiment driver: config files, subcommand execution, and
//! deterministic CSV/JSON outputs.
//!
//! Every run resolves its configuration (file values, then environment
//! overrides, then explicit flags), executes under a fixed base seed, and
//! writes a `manifest.json` run record next to its outputs. Re-running a
//! manifest reproduces every data output byte for byte; the manifest itself
//! is the only file carrying wall-clock information.

mod commands;
mod config;

pub use commands::{
    cmd_asymptotic, cmd_coverage, cmd_fit, cmd_rates, config_from_manifest, load_manifest,
    AsymptoticReport, CliError,
};
pub use config::{
    env_parallel as config_env_parallel, env_seed as config_env_seed, load_toml as load_config,
    resolve_lambda_rule, AsymptoticConfig, ConfigError, CoverageConfig, FitConfig, RatesConfig,
};

use serde::{Deserialize, Serialize};
use std::path::Path;

/// Environment variable overriding the base seed of any subcommand.
pub const ENV_SEED: &str = "GPBAND_SEED";
/// Environment variable overriding the parallelism degree.
pub const ENV_PARALLEL: &str = "GPBAND_PARALLEL";

/// Run record written next to every set of outputs. The deterministic part
/// (everything except the timing fields) is embedded into JSON reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub base_seed: u64,
    pub config: serde_json::Value,
    pub started_at_unix: f64,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn core(&self) -> ManifestCore {
        ManifestCore {
            subcommand: self.subcommand.clone(),
            version: self.version.clone(),
            base_seed: self.base_seed,
            config: self.config.clone(),
        }
    }
}

/// The deterministic portion of a manifest, embedded in report files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestCore {
    pub subcommand: String,
    pub version: String,
    pub base_seed: u64,
    pub config: serde_json::Value,
}

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// 17 significant digits: enough to reproduce any f64 exactly on re-read.
pub fn fmt17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Minimal RFC-4180 writer for purely numeric tables: comma separated,
/// CRLF terminated, no quoting needed.
pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new() -> Self {
        Self { buf: String::new() }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for field in fields {
            if !first {
                self.buf.push(',');
            }
            debug_assert!(!field.as_ref().contains([',', '"', '\n', '\r']));
            self.buf.push_str(field.as_ref());
            first = false;
        }
        self.buf.push_str("\r\n");
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

impl Default for CsvWriter {
    fn default() -> Self {
        Self::new()
    }
}

pub fn write_output(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)
}
