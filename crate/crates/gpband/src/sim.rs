//! Replicated coverage experiments: synthetic data from the reference
//! regression function, repeated posterior fits, interval and band coverage
//! over the replicate ensemble, and the sup-norm rate experiment.

use crate::credible::{band_coverage_limit, normal_quantile, simultaneous_radii};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::posterior::{fit, kernel_matched_lambda, stream_id, unit_prior_lambda, Dataset};
use crate::rng::derive_rng;
use crate::spectral::{
    asymptotic_pointwise_coverage, bandwidth_for_class, class_norm, FunctionCoeffs,
    SmoothnessClass, SpectralModel,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Number of series terms kept when evaluating the reference function.
pub const TRUE_FUNCTION_TERMS: usize = 100_000;

/// Number of basis pairs kept when projecting the reference function onto
/// the Fourier basis for theory predictions.
const TRUTH_PROJECTION_PAIRS: usize = 1000;

fn true_function_weights() -> &'static Vec<f64> {
    static WEIGHTS: OnceLock<Vec<f64>> = OnceLock::new();
    WEIGHTS.get_or_init(|| {
        (1..=TRUE_FUNCTION_TERMS)
            .map(|j| (j as f64).powf(-1.7) * (j as f64).sin())
            .collect()
    })
}

/// Reference regression function
/// `f*(x) = sum_j j^{-1.7} sin(j) cos(pi (j - 1/2) x)`, truncated at
/// [`TRUE_FUNCTION_TERMS`] terms (sup truncation error below 5e-4).
pub fn true_function(x: f64) -> f64 {
    true_function_many(&[x])[0]
}

/// Evaluate the reference function at many points, terms capped at the
/// default truncation.
pub fn true_function_many(points: &[f64]) -> Vec<f64> {
    true_function_many_truncated(points, TRUE_FUNCTION_TERMS)
}

/// Same with an explicit series truncation (primarily for consistency checks).
pub fn true_function_many_truncated(points: &[f64], terms: usize) -> Vec<f64> {
    let weights = &true_function_weights()[..terms.min(TRUE_FUNCTION_TERMS)];
    let mut out = vec![0.0; points.len()];
    // process points in blocks: the angle advances by a fixed rotation per
    // term, so the whole block shares one pass over the weights
    const BLOCK: usize = 64;
    let mut cos_t = [0.0f64; BLOCK];
    let mut sin_t = [0.0f64; BLOCK];
    let mut rot_c = [0.0f64; BLOCK];
    let mut rot_s = [0.0f64; BLOCK];
    let mut acc = [0.0f64; BLOCK];
    for (block_idx, chunk) in points.chunks(BLOCK).enumerate() {
        let width = chunk.len();
        for (p, &x) in chunk.iter().enumerate() {
            let half = 0.5 * PI * x;
            cos_t[p] = half.cos(); // angle pi (1 - 1/2) x
            sin_t[p] = half.sin();
            rot_c[p] = (PI * x).cos();
            rot_s[p] = (PI * x).sin();
            acc[p] = 0.0;
        }
        for &w in weights {
            for p in 0..width {
                acc[p] += w * cos_t[p];
                let c = cos_t[p] * rot_c[p] - sin_t[p] * rot_s[p];
                sin_t[p] = sin_t[p] * rot_c[p] + cos_t[p] * rot_s[p];
                cos_t[p] = c;
            }
        }
        out[block_idx * BLOCK..block_idx * BLOCK + width].copy_from_slice(&acc[..width]);
    }
    out
}

/// Reference-function values on the canonical equispaced grid, cached across
/// replicates of a run.
pub fn true_function_on_grid(grid_size: usize) -> &'static [f64] {
    static CACHE: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, &'static [f64]>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().expect("grid cache lock");
    map.entry(grid_size).or_insert_with(|| {
        let grid = equispaced_grid(grid_size);
        Box::leak(true_function_many(&grid).into_boxed_slice())
    })
}

/// `grid_size` equally spaced points covering [0, 1].
pub fn equispaced_grid(grid_size: usize) -> Vec<f64> {
    if grid_size == 1 {
        return vec![0.5];
    }
    (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect()
}

/// Projection of the reference function onto the Fourier basis, from the
/// closed-form integrals of `cos(pi (m - 1/2) x)` against each basis
/// function. The basis is not fully orthogonal on [0, 1], so these are plain
/// L2 projections used for indicative bias predictions only.
pub fn true_function_coeffs() -> &'static FunctionCoeffs {
    static COEFFS: OnceLock<FunctionCoeffs> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let weights = true_function_weights();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut coeffs = vec![0.0; 2 * TRUTH_PROJECTION_PAIRS];
        for k in 1..=TRUTH_PROJECTION_PAIRS {
            let kf = k as f64;
            let mut sin_acc = 0.0;
            let mut cos_acc = 0.0;
            for (idx, &w) in weights.iter().enumerate() {
                let m = (idx + 1) as f64;
                // int cos(pi (m-1/2) x) sin(pi k x) dx
                sin_acc += w * (1.0 / (kf + m - 0.5) + 1.0 / (kf - m + 0.5));
                // int cos(pi (m-1/2) x) cos(pi k x) dx
                let sign = if (idx + 1 + k) % 2 == 0 { -1.0 } else { 1.0 };
                cos_acc += w * sign * (1.0 / (m + kf - 0.5) + 1.0 / (m - kf - 0.5));
            }
            coeffs[2 * k - 2] = sqrt2 / (2.0 * PI) * sin_acc;
            coeffs[2 * k - 1] = sqrt2 / (2.0 * PI) * cos_acc;
        }
        FunctionCoeffs::new(coeffs)
    })
}

/// Draw `n` observations `y = f*(x) + sigma xi` with uniform design.
/// Deterministic per seed; `sigma = 0` returns noiseless responses.
pub fn generate_data(n: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyInput("n"));
    }
    let mut x_rng = derive_rng(seed, stream_id::DATA_X, 0);
    let xs: Vec<f64> = (0..n).map(|_| x_rng.random()).collect();
    let mut ys = true_function_many(&xs);
    if sigma != 0.0 {
        let mut noise_rng = derive_rng(seed, stream_id::DATA_NOISE, 0);
        for y in ys.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut noise_rng);
            *y += sigma * xi;
        }
    }
    Dataset::new(xs, ys)
}

/// How the penalty level is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum LambdaRule {
    /// `1/n`: the unit-amplitude prior `GP(0, sigma^2 K)`.
    Default,
    /// `n^{-2 alpha/(2 alpha + 1)}` with `alpha = nu + 1/2`.
    KernelMatched,
    /// A fixed penalty level.
    Explicit(f64),
    /// Bandwidth matched to a smoothness class of the given radius.
    ClassBased {
        class: SmoothnessClass,
        radius: f64,
    },
}

/// Configuration of one replicated coverage experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub kernel_nu: f64,
    pub betas: Vec<f64>,
    pub replicates: usize,
    pub grid_size: usize,
    pub sigma: f64,
    pub band_draws: usize,
    pub lambda_rule: LambdaRule,
    pub base_seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, kernel_nu: f64, betas: Vec<f64>, replicates: usize) -> Self {
        Self {
            n,
            kernel_nu,
            betas,
            replicates,
            grid_size: 200,
            sigma: 0.1,
            band_draws: 1000,
            lambda_rule: LambdaRule::Default,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Domain {
                name: "replicates",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if self.grid_size < 2 {
            return Err(Error::Domain {
                name: "grid_size",
                value: self.grid_size as f64,
                range: "[2, inf)",
            });
        }
        if self.betas.is_empty() {
            return Err(Error::EmptyInput("betas"));
        }
        for &beta in &self.betas {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Domain {
                    name: "beta",
                    value: beta,
                    range: "(0, 1)",
                });
            }
        }
        if self.n == 0 {
            return Err(Error::EmptyInput("n"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Domain {
                name: "sigma",
                value: self.sigma,
                range: "[0, inf)",
            });
        }
        Ok(())
    }

    /// Smoothness exponent of the kernel under the Matern correspondence.
    pub fn alpha(&self) -> f64 {
        self.kernel_nu + 0.5
    }

    /// Resolve the penalty level for this configuration.
    pub fn lambda(&self) -> Result<f64> {
        let kernel = KernelSpec::matern(self.kernel_nu)?;
        Ok(match self.lambda_rule {
            LambdaRule::Default => unit_prior_lambda(self.n),
            LambdaRule::KernelMatched => kernel_matched_lambda(&kernel, self.n),
            LambdaRule::Explicit(value) => value,
            LambdaRule::ClassBased { class, radius } => {
                let h = bandwidth_for_class(self.n as f64, self.alpha(), radius, self.sigma, class)?;
                h.powf(2.0 * self.alpha())
            }
        })
    }
}

/// Population-level predictions attached to an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryPrediction {
    /// Interval-coverage limit as the bandwidth vanishes.
    pub asymptotic_pointwise: f64,
    /// Zero-bias interval coverage at the experiment's bandwidth.
    pub pointwise_finite_h: f64,
    /// Mean over the grid of the bias-adjusted interval prediction, using
    /// the projected reference-function coefficients.
    pub pointwise_with_bias_mean: f64,
    /// Monte-Carlo band coverage limit at the experiment's bandwidth.
    pub band_limit: f64,
}

/// Coverage results for one credible level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaCoverage {
    pub beta: f64,
    pub simultaneous_coverage: f64,
    pub simultaneous_se: f64,
    pub mean_pointwise_coverage: f64,
    pub pointwise_coverage: Vec<f64>,
    pub theory: TheoryPrediction,
}

/// Aggregate report of a replicated experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: SimConfig,
    pub lambda: f64,
    pub bandwidth: f64,
    pub alpha: f64,
    pub per_beta: Vec<BetaCoverage>,
    pub replicates_completed: usize,
}

struct ReplicateOutcome {
    pointwise_hits: Vec<Vec<bool>>, // [beta][grid point]
    band_hits: Vec<bool>,           // [beta]
}

const STREAM_REPLICATE: u64 = 10;

/// Run the replicated experiment: per replicate, draw a dataset, fit the
/// posterior, restrict to the grid, and record pointwise and simultaneous
/// coverage of the reference function at every level; then aggregate and
/// attach population predictions. A failed replicate aborts the whole run.
pub fn run_replicates(config: &SimConfig) -> Result<CoverageReport> {
    config.validate()?;
    let kernel = KernelSpec::matern(config.kernel_nu)?;
    let lambda = config.lambda()?;
    let alpha = config.alpha();
    let h = lambda.powf(1.0 / (2.0 * alpha));
    // the posterior's noise level is a known positive input; noiseless data
    // generation keeps the default level for the fit
    let sigma2 = if config.sigma > 0.0 {
        config.sigma * config.sigma
    } else {
        0.01
    };
    let grid = equispaced_grid(config.grid_size);
    let truth = true_function_on_grid(config.grid_size);
    let z_levels: Vec<f64> = config
        .betas
        .iter()
        .map(|&beta| normal_quantile((1.0 + beta) / 2.0))
        .collect::<Result<_>>()?;

    let outcomes: Vec<Result<ReplicateOutcome>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            run_one_replicate(
                config, &kernel, lambda, sigma2, &grid, truth, &z_levels, r as u64,
            )
            .map_err(|e| Error::Factorization(format!("replicate {r}: {e}")))
        })
        .collect();

    let mut pointwise_counts = vec![vec![0usize; config.grid_size]; config.betas.len()];
    let mut band_counts = vec![0usize; config.betas.len()];
    for outcome in outcomes {
        let outcome = outcome?;
        for (b, hits) in outcome.pointwise_hits.iter().enumerate() {
            for (g, &hit) in hits.iter().enumerate() {
                if hit {
                    pointwise_counts[b][g] += 1;
                }
            }
        }
        for (b, &hit) in outcome.band_hits.iter().enumerate() {
            if hit {
                band_counts[b] += 1;
            }
        }
    }

    let r = config.replicates as f64;
    let model = SpectralModel::from_lambda(alpha, lambda, sigma2)?;
    let truth_coeffs = true_function_coeffs();
    let per_beta = config
        .betas
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let p = band_counts[b] as f64 / r;
            let pointwise: Vec<f64> = pointwise_counts[b]
                .iter()
                .map(|&c| c as f64 / r)
                .collect();
            let mean_pointwise = pointwise.iter().sum::<f64>() / pointwise.len() as f64;
            let theory = theory_prediction(&model, config, beta, truth_coeffs)?;
            Ok(BetaCoverage {
                beta,
                simultaneous_coverage: p,
                simultaneous_se: (p * (1.0 - p) / r).sqrt(),
                mean_pointwise_coverage: mean_pointwise,
                pointwise_coverage: pointwise,
                theory,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CoverageReport {
        config: config.clone(),
        lambda,
        bandwidth: h,
        alpha,
        per_beta,
        replicates_completed: config.replicates,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_one_replicate(
    config: &SimConfig,
    kernel: &KernelSpec,
    lambda: f64,
    sigma2: f64,
    grid: &[f64],
    truth: &[f64],
    z_levels: &[f64],
    replicate: u64,
) -> Result<ReplicateOutcome> {
    let mut seed_rng = derive_rng(config.base_seed, STREAM_REPLICATE, replicate);
    let data_seed: u64 = seed_rng.random();
    let draw_seed: u64 = seed_rng.random();

    let data = generate_data(config.n, config.sigma, data_seed)?;
    let post = fit(data, *kernel, lambda, sigma2)?;
    let gp = post.grid_posterior(grid)?;

    let sup_error = truth
        .iter()
        .zip(gp.mean().iter())
        .map(|(t, m)| (t - m).abs())
        .fold(0.0f64, f64::max);

    let radii = simultaneous_radii(&gp, &config.betas, config.band_draws, draw_seed)?;
    let band_hits = radii.iter().map(|&radius| sup_error <= radius).collect();

    let pointwise_hits = z_levels
        .iter()
        .map(|&z| {
            (0..grid.len())
                .map(|i| {
                    let sd = (gp.cov()[[i, i]] - gp.jitter()).max(0.0).sqrt();
                    (truth[i] - gp.mean()[i]).abs() <= z * sd
                })
                .collect()
        })
        .collect();

    Ok(ReplicateOutcome {
        pointwise_hits,
        band_hits,
    })
}

fn theory_prediction(
    model: &SpectralModel,
    config: &SimConfig,
    beta: f64,
    truth_coeffs: &FunctionCoeffs,
) -> Result<TheoryPrediction> {
    let z = normal_quantile((1.0 + beta) / 2.0)?;
    let finite_h = 2.0 * crate::stats::normal_cdf(model.c_ir().sqrt() * z) - 1.0;
    // bias-adjusted prediction, averaged over a light subgrid
    let mut with_bias = 0.0;
    let probe = 21usize;
    for i in 0..probe {
        let x = i as f64 / (probe - 1) as f64;
        with_bias += model.coverage_prediction(x, truth_coeffs, config.n, beta)?;
    }
    with_bias /= probe as f64;
    let band_grid = equispaced_grid(config.grid_size.min(100));
    let band_limit = band_coverage_limit(
        model,
        config.n,
        &band_grid,
        beta,
        config.band_draws.max(1000),
        config.base_seed ^ 0xbad5eed,
    )?;
    Ok(TheoryPrediction {
        asymptotic_pointwise: asymptotic_pointwise_coverage(model.alpha(), beta)?,
        pointwise_finite_h: finite_h,
        pointwise_with_bias_mean: with_bias,
        band_limit,
    })
}

/// One row of the rate experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub bandwidth: f64,
    pub lambda: f64,
    pub median_sup_error: f64,
    pub gamma_n: f64,
    pub delta_n: f64,
}

/// Fitted log-log slope with its ordinary-least-squares confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub target_slope: f64,
}

/// Configuration of a sup-norm rate experiment against a synthetic truth of
/// exactly the configured class norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateConfig {
    pub ns: Vec<usize>,
    pub alpha: f64,
    pub class: SmoothnessClass,
    pub radius: f64,
    pub sigma: f64,
    pub seeds_per_n: usize,
    pub grid_size: usize,
    pub base_seed: u64,
}

impl RateConfig {
    pub fn holder(ns: Vec<usize>, alpha: f64, seeds_per_n: usize) -> Self {
        Self {
            ns,
            alpha,
            class: SmoothnessClass::Holder,
            radius: 1.0,
            sigma: 0.1,
            seeds_per_n,
            grid_size: 200,
            base_seed: 0,
        }
    }
}

/// Synthetic truth used by the rate experiment: a power-law coefficient
/// sequence just inside the class, normalized to the requested class norm.
pub fn rate_truth(alpha: f64, class: SmoothnessClass, radius: f64) -> FunctionCoeffs {
    let len = 2000usize;
    let raw = FunctionCoeffs::from_fn(len, |j| (j as f64).powf(-(alpha + 1.05)));
    let norm = class_norm(&raw, alpha, class).expect("positive alpha");
    FunctionCoeffs::from_fn(len, |j| radius / norm * (j as f64).powf(-(alpha + 1.05)))
}

const STREAM_RATE: u64 = 11;

/// Median sup-norm error of the posterior mean against the synthetic truth
/// at each sample size under the class-matched bandwidth schedule, plus the
/// least-squares slope of log error against log n.
pub fn rate_experiment(config: &RateConfig) -> Result<RateTable> {
    if config.ns.len() < 2 {
        return Err(Error::Domain {
            name: "ns",
            value: config.ns.len() as f64,
            range: "at least two sample sizes",
        });
    }
    if config.seeds_per_n == 0 {
        return Err(Error::EmptyInput("seeds_per_n"));
    }
    let truth = rate_truth(config.alpha, config.class, config.radius);
    let grid = equispaced_grid(config.grid_size);
    let truth_grid: Vec<f64> = grid.iter().map(|&x| truth.eval(x)).collect();
    let sigma2 = config.sigma * config.sigma;

    let mut rows = Vec::with_capacity(config.ns.len());
    for (n_idx, &n) in config.ns.iter().enumerate() {
        let h = bandwidth_for_class(
            n as f64,
            config.alpha,
            config.radius,
            config.sigma,
            config.class,
        )?;
        let lambda = h.powf(2.0 * config.alpha);
        let kernel = KernelSpec::spectral(config.alpha, crate::spectral::default_truncation(h))?;

        let errors: Vec<Result<f64>> = (0..config.seeds_per_n)
            .into_par_iter()
            .map(|s| {
                let seed_index = (n_idx as u64) << 32 | s as u64;
                let mut seed_rng = derive_rng(config.base_seed, STREAM_RATE, seed_index);
                let mut xs_rng = derive_rng(seed_rng.random(), stream_id::DATA_X, 0);
                let xs: Vec<f64> = (0..n).map(|_| xs_rng.random()).collect();
                let mut noise_rng = derive_rng(seed_rng.random(), stream_id::DATA_NOISE, 0);
                let ys: Vec<f64> = xs
                    .iter()
                    .map(|&x| {
                        let xi: f64 = StandardNormal.sample(&mut noise_rng);
                        truth.eval(x) + config.sigma * xi
                    })
                    .collect();
                let post = fit(Dataset::new(xs, ys)?, kernel, lambda, sigma2.max(1e-12))?;
                let sup = grid
                    .iter()
                    .zip(&truth_grid)
                    .map(|(&x, &t)| (post.mean_at(x) - t).abs())
                    .fold(0.0f64, f64::max);
                Ok(sup)
            })
            .collect();
        let mut errors: Vec<f64> = errors.into_iter().collect::<Result<Vec<_>>>()?;
        errors.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite errors"));
        let median = if errors.len() % 2 == 1 {
            errors[errors.len() / 2]
        } else {
            0.5 * (errors[errors.len() / 2 - 1] + errors[errors.len() / 2])
        };

        let model = SpectralModel::new(config.alpha, h, sigma2.max(1e-12))?;
        let rates = model.rates(n.max(2), &truth)?;
        rows.push(RateRow {
            n,
            bandwidth: h,
            lambda,
            median_sup_error: median,
            gamma_n: rates.gamma_n,
            delta_n: rates.delta_n,
        });
    }

    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_sup_error.ln()).collect();
    let (slope, ci) = ols_slope_ci(&xs, &ys);
    let target = match config.class {
        SmoothnessClass::Holder => -config.alpha / (2.0 * config.alpha + 1.0),
        SmoothnessClass::Sobolev => -(config.alpha - 0.5) / (2.0 * config.alpha),
    };
    Ok(RateTable {
        rows,
        slope,
        slope_ci: ci,
        target_slope: target,
    })
}

/// Least-squares slope with a 95% confidence interval (normal when the
/// residual degrees of freedom are too few for a t quantile).
fn ols_slope_ci(xs: &[f64], ys: &[f64]) -> (f64, (f64, f64)) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = xs.len().saturating_sub(2);
    if dof == 0 {
        return (slope, (slope, slope));
    }
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fitted = intercept + slope * x;
            (y - fitted) * (y - fitted)
        })
        .sum();
    let se = (rss / dof as f64 / sxx).sqrt();
    let t = if dof >= 1 {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        StudentsT::new(0.0, 1.0, dof as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(1.959964)
    } else {
        1.959964
    };
    (slope, (slope - t * se, slope + t * se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn true_function_at_zero_matches_compensated_sum() {
        // all cosines are one at x = 0; compare against Kahan summation in
        // the reverse order
        let weights = true_function_weights();
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        for &w in weights.iter().rev() {
            let y = w - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        assert_abs_diff_eq!(true_function(0.0), acc, epsilon = 1e-8);
        // 30-digit reference for the truncated sum
        assert_abs_diff_eq!(true_function(0.0), 1.03677583528, epsilon = 1e-6);
    }

    #[test]
    fn true_function_recurrence_matches_direct_terms() {
        for &x in &[0.1, 0.37, 0.5, 0.77, 1.0] {
            let direct: f64 = (1..=20_000)
                .map(|j| (j as f64).powf(-1.7) * (j as f64).sin() * (PI * (j as f64 - 0.5) * x).cos())
                .sum();
            let fast = true_function_many_truncated(&[x], 20_000)[0];
            assert_abs_diff_eq!(fast, direct, epsilon = 1e-8);
        }
    }

    #[test]
    fn true_function_bounded_by_zeta() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!(true_function(x).abs() <= 2.0542887568377512);
        }
    }

    #[test]
    fn true_function_truncation_consistent() {
        let grid = equispaced_grid(200);
        let full = true_function_many_truncated(&grid, TRUE_FUNCTION_TERMS);
        let half = true_function_many_truncated(&grid, TRUE_FUNCTION_TERMS / 2);
        for (a, b) in full.iter().zip(&half) {
            assert!((a - b).abs() <= 5e-4);
        }
    }

    #[test]
    fn generated_data_deterministic_and_noiseless_at_sigma_zero() {
        let a = generate_data(50, 0.1, 7).unwrap();
        let b = generate_data(50, 0.1, 7).unwrap();
        assert_eq!(a.xs(), b.xs());
        assert_eq!(a.ys(), b.ys());

        let clean = generate_data(50, 0.0, 7).unwrap();
        assert_eq!(clean.xs(), a.xs());
        let truth = true_function_many(clean.xs());
        assert_eq!(clean.ys(), truth.as_slice());
    }

    #[test]
    fn generated_noise_variance_close_to_sigma_squared() {
        let sigma = 0.1;
        let data = generate_data(100_000, sigma, 11).unwrap();
        let truth = true_function_many(data.xs());
        let mut ss = 0.0;
        for (y, t) in data.ys().iter().zip(&truth) {
            ss += (y - t) * (y - t);
        }
        let var = ss / data.len() as f64;
        assert!(
            (var - sigma * sigma).abs() < 0.05 * sigma * sigma,
            "variance {var}"
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(50, 0.5, vec![0.9], 5);
        assert!(cfg.validate().is_ok());
        cfg.betas = vec![1.0];
        assert!(cfg.validate().is_err());
        cfg.betas = vec![0.9];
        cfg.grid_size = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lambda_rules_resolve() {
        let mut cfg = SimConfig::new(200, 0.5, vec![0.9], 1);
        assert_abs_diff_eq!(cfg.lambda().unwrap(), 1.0 / 200.0, epsilon = 1e-18);
        let alpha = 1.0;
        cfg.lambda_rule = LambdaRule::KernelMatched;
        assert_abs_diff_eq!(
            cfg.lambda().unwrap(),
            200f64.powf(-2.0 * alpha / (2.0 * alpha + 1.0)),
            epsilon = 1e-15
        );
        cfg.lambda_rule = LambdaRule::Explicit(0.03);
        assert_eq!(cfg.lambda().unwrap(), 0.03);
        cfg.lambda_rule = LambdaRule::ClassBased {
            class: SmoothnessClass::Holder,
            radius: 1.0,
        };
        let h = bandwidth_for_class(200.0, 1.0, 1.0, 0.1, SmoothnessClass::Holder).unwrap();
        assert_abs_diff_eq!(cfg.lambda().unwrap(), h * h, epsilon = 1e-15);
    }

    #[test]
    fn single_noiseless_replicate_covers_everywhere_under_smoothing() {
        // sigma = 0 with an under-smoothed, lightly penalized prior: the
        // posterior mean hugs the truth while interval widths stay positive
        // (the fit keeps the default known noise level), so every grid point
        // is covered
        let mut cfg = SimConfig::new(150, 0.1, vec![0.8, 0.9], 1);
        cfg.sigma = 0.0;
        cfg.grid_size = 60;
        cfg.band_draws = 400;
        cfg.lambda_rule = LambdaRule::Explicit(0.01 / 150.0);
        let report = run_replicates(&cfg).unwrap();
        for bc in &report.per_beta {
            for (g, &p) in bc.pointwise_coverage.iter().enumerate() {
                assert_eq!(p, 1.0, "beta {} grid point {g}", bc.beta);
            }
        }
    }

    #[test]
    fn replicated_run_is_deterministic() {
        let mut cfg = SimConfig::new(40, 0.5, vec![0.8], 6);
        cfg.grid_size = 30;
        cfg.band_draws = 200;
        cfg.base_seed = 5;
        let a = run_replicates(&cfg).unwrap();
        let b = run_replicates(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.replicates_completed, 6);
        for bc in &a.per_beta {
            assert!(bc.simultaneous_coverage >= 0.0 && bc.simultaneous_coverage <= 1.0);
            assert_abs_diff_eq!(
                bc.simultaneous_se,
                (bc.simultaneous_coverage * (1.0 - bc.simultaneous_coverage) / 6.0).sqrt(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn rate_truth_has_requested_norm() {
        let truth = rate_truth(1.2, SmoothnessClass::Holder, 1.0);
        assert_abs_diff_eq!(
            class_norm(&truth, 1.2, SmoothnessClass::Holder).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noiseless_rate_errors_do_not_grow() {
        // sigma ~ 0 at a shrinking-penalty schedule: the information only
        // grows, so the fitted slope cannot be positive
        let mut cfg = RateConfig::holder(vec![50, 100, 200, 400], 1.2, 4);
        cfg.sigma = 1e-6;
        cfg.grid_size = 60;
        cfg.base_seed = 9;
        let table = rate_experiment(&cfg).unwrap();
        assert!(table.slope <= 0.0, "slope {}", table.slope);
    }

    #[test]
    fn doubling_noise_at_most_doubles_median_error() {
        let mut low = RateConfig::holder(vec![200], 1.2, 9);
        low.grid_size = 60;
        low.base_seed = 31;
        let mut high = low.clone();
        high.sigma = 0.2;
        let err_low = rate_experiment(&low).unwrap().rows[0].median_sup_error;
        let err_high = rate_experiment(&high).unwrap().rows[0].median_sup_error;
        // error splits into bias plus noise parts; only the noise part scales
        assert!(err_high <= 2.0 * err_low * 1.05, "{err_high} vs {err_low}");
        assert!(err_high >= err_low * 0.9);
    }

    #[test]
    fn simultaneous_coverage_ordering_when_band_is_tighter() {
        // conditional ordering: when the band radius is below the smallest
        // interval half-width, simultaneous coverage cannot exceed the
        // pointwise minimum; asserted on replicates where the premise holds
        let mut cfg = SimConfig::new(60, 0.5, vec![0.8], 40);
        cfg.grid_size = 25;
        cfg.band_draws = 200;
        cfg.base_seed = 77;
        let report = run_replicates(&cfg).unwrap();
        let bc = &report.per_beta[0];
        let min_pointwise = bc
            .pointwise_coverage
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        // premise checked on a fresh replicate of the same configuration
        let kernel = KernelSpec::matern(0.5).unwrap();
        let lambda = cfg.lambda().unwrap();
        let data = generate_data(60, 0.1, 123).unwrap();
        let post = fit(data, kernel, lambda, 0.01).unwrap();
        let grid = equispaced_grid(25);
        let gp = post.grid_posterior(&grid).unwrap();
        let radius =
            crate::credible::simultaneous_radius(&gp, 0.8, 200, 5).unwrap();
        let z = normal_quantile(0.9).unwrap();
        let min_half = (0..25)
            .map(|i| z * (gp.cov()[[i, i]] - gp.jitter()).max(0.0).sqrt())
            .fold(f64::INFINITY, f64::min);
        if radius <= min_half {
            assert!(bc.simultaneous_coverage <= min_pointwise + 1e-12);
        }
    }

    #[test]
    fn ols_slope_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 - 0.7 * x).collect();
        let (slope, (lo, hi)) = ols_slope_ci(&xs, &ys);
        assert_abs_diff_eq!(slope, -0.7, epsilon = 1e-12);
        assert!(lo <= slope && slope <= hi);
    }
}
