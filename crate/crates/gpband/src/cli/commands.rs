//! The four batch subcommands. Each returns the manifest of the completed
//! run after writing its outputs.

use super::config::{
    parse_class, resolve_lambda_rule, AsymptoticConfig, ConfigError, CoverageConfig, FitConfig,
    RatesConfig,
};
use super::{fmt17, tool_version, CsvWriter, ManifestCore, RunManifest};
use crate::credible::{credible_band, normal_quantile};
use crate::error::Error;
use crate::kernels::KernelSpec;
use crate::posterior::{fit, Dataset};
use crate::rng::derive_seed;
use crate::sim::{
    equispaced_grid, generate_data, rate_experiment, run_replicates, true_function_many,
    CoverageReport, RateConfig, RateTable, SimConfig,
};
use crate::spectral::{
    asymptotic_pointwise_coverage, asymptotic_pointwise_coverage_unrooted, c_ir_limit,
    SpectralModel,
};
use serde::Serialize;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Command-level failure, split by exit class: configuration and input
/// problems exit 2, numerical failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            // invalid parameter values are configuration mistakes; only
            // genuine numerical breakdowns report as such
            CliError::Numerical(Error::Factorization(_)) => 3,
            CliError::Numerical(_) => 2,
        }
    }
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn manifest_for<T: Serialize>(
    subcommand: &str,
    config: &T,
    base_seed: u64,
    started: f64,
    timer: Instant,
) -> RunManifest {
    RunManifest {
        subcommand: subcommand.to_string(),
        version: tool_version(),
        base_seed,
        config: serde_json::to_value(config).expect("serializable config"),
        started_at_unix: started,
        wall_clock_seconds: timer.elapsed().as_secs_f64(),
    }
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("serializable manifest");
    super::write_output(dir, "manifest.json", &text)?;
    Ok(())
}

fn read_dataset_csv(path: &str) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.to_string(),
        source,
    })?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let x = fields.next().unwrap_or("").trim();
        let y = fields.next().unwrap_or("").trim();
        match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(ConfigError::Invalid(format!(
                    "{path}:{}: expected two numeric fields, got '{line}'",
                    lineno + 1
                ))
                .into())
            }
        }
    }
    Dataset::new(xs, ys).map_err(CliError::Numerical)
}

/// Fit one posterior and write grid summaries: `fit.csv` (mean and interval),
/// `band.csv` (simultaneous radius), and `plot_data.csv` with the full band
/// geometry against the reference function.
pub fn cmd_fit(config: &FitConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = now_unix();
    let timer = Instant::now();

    let synthetic = config.dataset.is_none();
    let data = match &config.dataset {
        Some(path) => read_dataset_csv(path)?,
        None => generate_data(config.n, config.sigma, config.seed)?,
    };
    let n = data.len();
    let kernel = KernelSpec::matern(config.kernel_nu).map_err(CliError::Numerical)?;
    let rule = resolve_lambda_rule(
        &config.lambda_rule,
        config.lambda_value,
        config.class.as_deref(),
        config.class_radius,
    )?;
    let sim_cfg = SimConfig {
        n,
        kernel_nu: config.kernel_nu,
        betas: vec![config.beta],
        replicates: 1,
        grid_size: config.grid_size,
        sigma: config.sigma,
        band_draws: config.band_draws,
        lambda_rule: rule,
        base_seed: config.seed,
    };
    sim_cfg.validate()?;
    let lambda = sim_cfg.lambda()?;
    let sigma2 = if config.sigma > 0.0 {
        config.sigma * config.sigma
    } else {
        0.01
    };

    let post = fit(data, kernel, lambda, sigma2)?;
    let grid = equispaced_grid(config.grid_size);
    let gp = post.grid_posterior(&grid)?;
    let band = credible_band(&gp, config.beta, config.band_draws, derive_seed(config.seed, 21, 0))?;
    let z = normal_quantile((1.0 + config.beta) / 2.0)?;
    let truth: Vec<f64> = if synthetic {
        true_function_many(&grid)
    } else {
        vec![f64::NAN; grid.len()]
    };

    let mut fit_csv = CsvWriter::new();
    fit_csv.row(["x", "mean", "ci_lo", "ci_hi"]);
    let mut plot_csv = CsvWriter::new();
    plot_csv.row(["x", "f_star", "mean", "ci_lo", "ci_hi", "band_lo", "band_hi"]);
    for (i, &x) in grid.iter().enumerate() {
        let mean = gp.mean()[i];
        let sd = (gp.cov()[[i, i]] - gp.jitter()).max(0.0).sqrt();
        let (lo, hi) = (mean - z * sd, mean + z * sd);
        fit_csv.row([fmt17(x), fmt17(mean), fmt17(lo), fmt17(hi)]);
        plot_csv.row([
            fmt17(x),
            fmt17(truth[i]),
            fmt17(mean),
            fmt17(lo),
            fmt17(hi),
            fmt17(mean - band.radius()),
            fmt17(mean + band.radius()),
        ]);
    }
    let mut band_csv = CsvWriter::new();
    band_csv.row(["beta", "radius", "draws", "lambda", "jitter"]);
    band_csv.row([
        fmt17(config.beta),
        fmt17(band.radius()),
        band.draws().to_string(),
        fmt17(lambda),
        fmt17(gp.jitter()),
    ]);

    super::write_output(out_dir, "fit.csv", &fit_csv.finish())?;
    super::write_output(out_dir, "band.csv", &band_csv.finish())?;
    super::write_output(out_dir, "plot_data.csv", &plot_csv.finish())?;

    let manifest = manifest_for("fit", config, config.seed, started, timer);
    write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Serialize)]
struct CoverageOutput {
    manifest: ManifestCore,
    reports: Vec<CoverageReport>,
}

/// Run the replicated coverage experiment over the configured grid of
/// kernels and sample sizes; write `report.json` and the coverage table
/// `table.csv` (rows: kernel nu; columns: n x beta cells).
pub fn cmd_coverage(config: &CoverageConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = now_unix();
    let timer = Instant::now();

    let rule = resolve_lambda_rule(
        &config.lambda_rule,
        config.lambda_value,
        config.class.as_deref(),
        config.class_radius,
    )?;
    if config.kernel_nus.is_empty() || config.ns.is_empty() {
        return Err(ConfigError::Invalid("kernel_nus and ns must be non-empty".into()).into());
    }

    let mut reports = Vec::new();
    for (i, &nu) in config.kernel_nus.iter().enumerate() {
        for (j, &n) in config.ns.iter().enumerate() {
            let cell = (i * config.ns.len() + j) as u64;
            let sim_cfg = SimConfig {
                n,
                kernel_nu: nu,
                betas: config.betas.clone(),
                replicates: config.replicates,
                grid_size: config.grid_size,
                sigma: config.sigma,
                band_draws: config.band_draws,
                lambda_rule: rule,
                base_seed: derive_seed(config.seed, 22, cell),
            };
            reports.push(run_replicates(&sim_cfg)?);
        }
    }

    let mut table = CsvWriter::new();
    let mut header = vec!["nu".to_string()];
    for &n in &config.ns {
        for &beta in &config.betas {
            header.push(format!("n{n}_b{beta}"));
        }
    }
    table.row(header);
    for (i, &nu) in config.kernel_nus.iter().enumerate() {
        let mut row = vec![fmt17(nu)];
        for j in 0..config.ns.len() {
            let report = &reports[i * config.ns.len() + j];
            for bc in &report.per_beta {
                row.push(fmt17(bc.simultaneous_coverage));
            }
        }
        table.row(row);
    }
    super::write_output(out_dir, "table.csv", &table.finish())?;

    let manifest = manifest_for("coverage", config, config.seed, started, timer);
    let output = CoverageOutput {
        manifest: manifest.core(),
        reports,
    };
    super::write_output(
        out_dir,
        "report.json",
        &serde_json::to_string_pretty(&output).expect("serializable report"),
    )?;
    write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}

/// Population-level coverage constants for a smoothness exponent.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub alpha: f64,
    pub beta: f64,
    pub c_ir_limit: f64,
    /// Principal variant: quantile inflated by sqrt(C_IR).
    pub coverage_sqrt: f64,
    /// Comparison variant: quantile inflated by C_IR itself.
    pub coverage_unrooted: f64,
    /// Finite-bandwidth inflation ratio, when a bandwidth was given.
    pub c_ir_at_h: Option<f64>,
    pub coverage_sqrt_at_h: Option<f64>,
    pub version: String,
}

/// Compute the asymptotic interval-coverage constants (both quantile
/// variants) and optionally the finite-bandwidth ratio.
pub fn cmd_asymptotic(config: &AsymptoticConfig) -> Result<AsymptoticReport, CliError> {
    let limit = c_ir_limit(config.alpha)?;
    let sqrt_variant = asymptotic_pointwise_coverage(config.alpha, config.beta)?;
    let unrooted = asymptotic_pointwise_coverage_unrooted(config.alpha, config.beta)?;
    let (c_ir_at_h, coverage_at_h) = match config.h {
        Some(h) => {
            let model = SpectralModel::new(config.alpha, h, 1.0)?;
            let c = model.c_ir();
            let z = normal_quantile((1.0 + config.beta) / 2.0)?;
            let cov = 2.0 * crate::stats::normal_cdf(c.sqrt() * z) - 1.0;
            (Some(c), Some(cov))
        }
        None => (None, None),
    };
    Ok(AsymptoticReport {
        alpha: config.alpha,
        beta: config.beta,
        c_ir_limit: limit,
        coverage_sqrt: sqrt_variant,
        coverage_unrooted: unrooted,
        c_ir_at_h,
        coverage_sqrt_at_h: coverage_at_h,
        version: tool_version(),
    })
}

#[derive(Debug, Serialize)]
struct RatesOutput {
    manifest: ManifestCore,
    table: RateTable,
}

/// Run the sup-norm rate experiment; write `rates.csv` with per-n errors and
/// rate diagnostics plus `rates.json` with the fitted slope.
pub fn cmd_rates(config: &RatesConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = now_unix();
    let timer = Instant::now();

    let rate_cfg = RateConfig {
        ns: config.ns.clone(),
        alpha: config.alpha,
        class: parse_class(&config.class)?,
        radius: config.radius,
        sigma: config.sigma,
        seeds_per_n: config.seeds_per_n,
        grid_size: config.grid_size,
        base_seed: config.seed,
    };
    let table = rate_experiment(&rate_cfg)?;

    let mut csv = CsvWriter::new();
    csv.row([
        "n",
        "bandwidth",
        "lambda",
        "median_sup_error",
        "gamma_n",
        "delta_n",
    ]);
    for row in &table.rows {
        csv.row([
            row.n.to_string(),
            fmt17(row.bandwidth),
            fmt17(row.lambda),
            fmt17(row.median_sup_error),
            fmt17(row.gamma_n),
            fmt17(row.delta_n),
        ]);
    }
    super::write_output(out_dir, "rates.csv", &csv.finish())?;

    let manifest = manifest_for("rates", config, config.seed, started, timer);
    let output = RatesOutput {
        manifest: manifest.core(),
        table,
    };
    super::write_output(
        out_dir,
        "rates.json",
        &serde_json::to_string_pretty(&output).expect("serializable rates"),
    )?;
    write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}

/// Load a previously written manifest and return its subcommand name plus
/// resolved config value.
pub fn load_manifest(path: &str) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.to_string(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| ConfigError::Invalid(format!("manifest {path}: {e}")).into())
}

/// Re-materialize a typed config from a manifest's embedded value.
pub fn config_from_manifest<T: serde::de::DeserializeOwned>(
    manifest: &RunManifest,
) -> Result<T, CliError> {
    serde_json::from_value(manifest.config.clone())
        .map_err(|e| ConfigError::Invalid(format!("manifest config: {e}")).into())
}
