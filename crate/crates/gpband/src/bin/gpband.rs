use clap::{Args, Parser, Subcommand};
use gpband::cli::{
    cmd_asymptotic, cmd_coverage, cmd_fit, cmd_rates, AsymptoticConfig, CoverageConfig, FitConfig,
    RatesConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Gaussian-process regression experiments: posterior fits, credible bands,
/// replicated coverage studies, and rate diagnostics.
#[derive(Parser)]
#[command(name = "gpband", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config file (flat keys; unknown keys are errors)
    #[arg(long)]
    config: Option<String>,

    /// Re-run the resolved config stored in a manifest.json
    #[arg(long, conflicts_with = "config")]
    manifest: Option<String>,

    /// Output directory
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,

    /// Base seed (overrides file and GPBAND_SEED)
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (overrides file and GPBAND_PARALLEL)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one posterior and write grid mean, intervals, band and plot data
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Synthetic sample size
        #[arg(long)]
        n: Option<usize>,
        /// Matern smoothness of the prior kernel
        #[arg(long)]
        kernel_nu: Option<f64>,
        /// Credible level
        #[arg(long)]
        beta: Option<f64>,
        /// CSV dataset with x,y columns
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Replicated simultaneous/pointwise coverage experiment
    Coverage {
        #[command(flatten)]
        common: CommonArgs,
        /// Replicates per cell
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Asymptotic coverage constants for a smoothness exponent
    Asymptotic {
        /// Smoothness exponent (> 1/2)
        #[arg(long)]
        alpha: f64,
        /// Credible level
        #[arg(long, default_value_t = 0.95)]
        beta: f64,
        /// Also evaluate the inflation ratio at this bandwidth
        #[arg(long)]
        h: Option<f64>,
        /// Emit JSON instead of text
        #[arg(long)]
        json: bool,
    },
    /// Sup-norm convergence rate experiment
    Rates {
        #[command(flatten)]
        common: CommonArgs,
        /// Smoothness exponent of the synthetic truth
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn apply_env_overrides(
    seed: &mut u64,
    parallel: &mut Option<usize>,
    args: &CommonArgs,
) -> Result<(), gpband::cli::ConfigError> {
    if let Some(env_seed) = gpband::cli::config_env_seed()? {
        *seed = env_seed;
    }
    if let Some(env_par) = gpband::cli::config_env_parallel()? {
        *parallel = Some(env_par);
    }
    if let Some(flag_seed) = args.seed {
        *seed = flag_seed;
    }
    if let Some(flag_threads) = args.threads {
        *parallel = Some(flag_threads);
    }
    Ok(())
}

fn init_parallelism(parallel: Option<usize>) {
    if let Some(threads) = parallel {
        // ignore failure when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run() -> Result<(), gpband::cli::CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Fit {
            common,
            n,
            kernel_nu,
            beta,
            dataset,
        } => {
            let mut config: FitConfig = if let Some(path) = &common.manifest {
                let manifest = gpband::cli::load_manifest(path)?;
                gpband::cli::config_from_manifest(&manifest)?
            } else if let Some(path) = &common.config {
                gpband::cli::load_config(path)?
            } else {
                FitConfig::default()
            };
            if let Some(n) = n {
                config.n = n;
            }
            if let Some(nu) = kernel_nu {
                config.kernel_nu = nu;
            }
            if let Some(beta) = beta {
                config.beta = beta;
            }
            if dataset.is_some() {
                config.dataset = dataset;
            }
            apply_env_overrides(&mut config.seed, &mut config.parallel, &common)?;
            init_parallelism(config.parallel);
            let manifest = cmd_fit(&config, &common.out_dir)?;
            eprintln!(
                "fit: wrote fit.csv, band.csv, plot_data.csv to {} ({:.2}s)",
                common.out_dir.display(),
                manifest.wall_clock_seconds
            );
            Ok(())
        }
        Command::Coverage { common, replicates } => {
            let mut config: CoverageConfig = if let Some(path) = &common.manifest {
                let manifest = gpband::cli::load_manifest(path)?;
                gpband::cli::config_from_manifest(&manifest)?
            } else if let Some(path) = &common.config {
                gpband::cli::load_config(path)?
            } else {
                CoverageConfig::default()
            };
            if let Some(replicates) = replicates {
                config.replicates = replicates;
            }
            apply_env_overrides(&mut config.seed, &mut config.parallel, &common)?;
            init_parallelism(config.parallel);
            let manifest = cmd_coverage(&config, &common.out_dir)?;
            eprintln!(
                "coverage: wrote report.json, table.csv to {} ({:.2}s)",
                common.out_dir.display(),
                manifest.wall_clock_seconds
            );
            Ok(())
        }
        Command::Asymptotic {
            alpha,
            beta,
            h,
            json,
        } => {
            let report = cmd_asymptotic(&AsymptoticConfig { alpha, beta, h })?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable report")
                );
            } else {
                println!("alpha = {alpha}, beta = {beta}");
                println!("inflation ratio limit 2a/(2a-1) = {:.10}", report.c_ir_limit);
                println!(
                    "asymptotic interval coverage (sqrt inflation, principal) = {:.6}",
                    report.coverage_sqrt
                );
                println!(
                    "asymptotic interval coverage (unrooted variant)          = {:.6}",
                    report.coverage_unrooted
                );
                if let (Some(c), Some(cov)) = (report.c_ir_at_h, report.coverage_sqrt_at_h) {
                    println!("inflation ratio at h = {:?}: {:.10}", h.unwrap(), c);
                    println!("coverage at h (sqrt inflation) = {cov:.6}");
                }
            }
            Ok(())
        }
        Command::Rates { common, alpha } => {
            let mut config: RatesConfig = if let Some(path) = &common.manifest {
                let manifest = gpband::cli::load_manifest(path)?;
                gpband::cli::config_from_manifest(&manifest)?
            } else if let Some(path) = &common.config {
                gpband::cli::load_config(path)?
            } else {
                RatesConfig::default()
            };
            if let Some(alpha) = alpha {
                config.alpha = alpha;
            }
            apply_env_overrides(&mut config.seed, &mut config.parallel, &common)?;
            init_parallelism(config.parallel);
            let manifest = cmd_rates(&config, &common.out_dir)?;
            eprintln!(
                "rates: wrote rates.csv, rates.json to {} ({:.2}s)",
                common.out_dir.display(),
                manifest.wall_clock_seconds
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // single-threaded BLAS keeps results independent of the worker count;
    // parallelism happens across replicates
    std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
