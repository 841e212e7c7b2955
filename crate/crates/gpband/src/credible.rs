//! Pointwise credible intervals and simultaneous credible bands from a
//! fitted posterior, and the population-level coverage limit obtained by
//! comparing the sup norms of the two limiting processes.

use crate::error::{Error, Result};
use crate::posterior::{stream_id, GridPosterior, PosteriorGp};
use crate::rng::derive_rng;
use crate::spectral::SpectralModel;
use ndarray::prelude::*;
use rand::RngCore;

pub use crate::stats::normal_quantile;

/// Equal-tailed posterior interval for `f(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseInterval {
    pub center: f64,
    pub half_length: f64,
    pub level: f64,
}

impl PointwiseInterval {
    pub fn lo(&self) -> f64 {
        self.center - self.half_length
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_length
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.center).abs() <= self.half_length
    }
}

/// Interval centered at the posterior mean with half length
/// `z_{(1+beta)/2} sqrt(cov(x, x))`, so its posterior mass is exactly beta.
pub fn pointwise_interval(post: &PosteriorGp, x: f64, beta: f64) -> Result<PointwiseInterval> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            range: "(0, 1)",
        });
    }
    let z = normal_quantile((1.0 + beta) / 2.0)?;
    Ok(PointwiseInterval {
        center: post.mean_at(x),
        half_length: z * post.cov_at(x, x).max(0.0).sqrt(),
        level: beta,
    })
}

/// Sup-norm ball around the posterior mean on a grid.
#[derive(Debug, Clone)]
pub struct CredibleBand {
    grid: Vec<f64>,
    center: Array1<f64>,
    radius: f64,
    level: f64,
    draws: usize,
}

impl CredibleBand {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn draws(&self) -> usize {
        self.draws
    }
}

/// Empirical quantile at the order statistic `ceil(beta * len)` (1-based):
/// deterministic and never below the nominal mass.
fn empirical_quantile(sorted: &[f64], beta: f64) -> f64 {
    let idx = (beta * sorted.len() as f64).ceil() as usize;
    sorted[idx.clamp(1, sorted.len()) - 1]
}

/// Radius of the beta-level simultaneous band: the empirical beta-quantile of
/// the sup deviation of posterior draws from the mean.
pub fn simultaneous_radius(
    gp: &GridPosterior,
    beta: f64,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            range: "(0, 1)",
        });
    }
    if draws < 100 {
        return Err(Error::Domain {
            name: "draws",
            value: draws as f64,
            range: "[100, inf)",
        });
    }
    let sample = gp.sample(draws, seed)?;
    let mut sups = sup_deviations(&sample, gp.mean());
    sups.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite sups"));
    Ok(empirical_quantile(&sups, beta))
}

/// Radii at several levels from one shared set of draws.
pub fn simultaneous_radii(
    gp: &GridPosterior,
    betas: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if draws < 100 {
        return Err(Error::Domain {
            name: "draws",
            value: draws as f64,
            range: "[100, inf)",
        });
    }
    for &beta in betas {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                range: "(0, 1)",
            });
        }
    }
    let sample = gp.sample(draws, seed)?;
    let mut sups = sup_deviations(&sample, gp.mean());
    sups.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite sups"));
    Ok(betas
        .iter()
        .map(|&beta| empirical_quantile(&sups, beta))
        .collect())
}

fn sup_deviations(sample: &Array2<f64>, mean: &Array1<f64>) -> Vec<f64> {
    sample
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(mean.iter())
                .map(|(d, m)| (d - m).abs())
                .fold(0.0f64, f64::max)
        })
        .collect()
}

/// Assemble the band itself.
pub fn credible_band(
    gp: &GridPosterior,
    beta: f64,
    draws: usize,
    seed: u64,
) -> Result<CredibleBand> {
    let radius = simultaneous_radius(gp, beta, draws, seed)?;
    Ok(CredibleBand {
        grid: gp.grid().to_vec(),
        center: gp.mean().clone(),
        radius,
        level: beta,
        draws,
    })
}

/// Closed membership test: true iff the sup deviation from the center does
/// not exceed the radius.
pub fn band_contains(band: &CredibleBand, values: &[f64]) -> Result<bool> {
    if values.len() != band.center.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: band.center.len(),
        });
    }
    let sup = values
        .iter()
        .zip(band.center.iter())
        .map(|(v, c)| (v - c).abs())
        .fold(0.0f64, f64::max);
    Ok(sup <= band.radius)
}

/// Probability that the sup norm of a draw from `target` stays within the
/// beta-quantile of the sup norm under `reference`, both centered at zero.
pub fn sup_norm_coverage(
    reference: &Array2<f64>,
    target: &Array2<f64>,
    beta: f64,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            range: "(0, 1)",
        });
    }
    if draws < 1000 {
        return Err(Error::Domain {
            name: "draws",
            value: draws as f64,
            range: "[1000, inf)",
        });
    }
    let m = reference.nrows();
    if target.nrows() != m {
        return Err(Error::LengthMismatch {
            left: target.nrows(),
            right: m,
        });
    }
    let grid: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let zero = Array1::zeros(m);
    let ref_gp = GridPosterior::from_parts(grid.clone(), zero.clone(), reference.clone())?;
    let tgt_gp = GridPosterior::from_parts(grid, zero.clone(), target.clone())?;

    let mut seed_rng = derive_rng(seed, stream_id::BAND_REFERENCE, 0);
    let ref_seed = seed_rng.next_u64();
    let mut seed_rng = derive_rng(seed, stream_id::BAND_SAMPLING, 0);
    let tgt_seed = seed_rng.next_u64();

    let ref_sample = ref_gp.sample(draws, ref_seed)?;
    let mut ref_sups = sup_deviations(&ref_sample, &zero);
    ref_sups.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite sups"));
    let q = empirical_quantile(&ref_sups, beta);

    let tgt_sample = tgt_gp.sample(draws, tgt_seed)?;
    let covered = sup_deviations(&tgt_sample, &zero)
        .into_iter()
        .filter(|s| *s <= q)
        .count();
    Ok(covered as f64 / draws as f64)
}

/// Population-level limit of the simultaneous band coverage: the centered
/// posterior process sets the quantile, the sampling process is measured
/// against it. `n` is carried for reporting only; both covariances are
/// population quantities of the model.
pub fn band_coverage_limit(
    model: &SpectralModel,
    _n: usize,
    grid: &[f64],
    beta: f64,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid"));
    }
    let m = grid.len();
    let mut cov_b = Array2::zeros((m, m));
    let mut cov_hat = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let b = model.c_hat_b(grid[i], grid[j]);
            let h = model.c_hat(grid[i], grid[j]);
            cov_b[[i, j]] = b;
            cov_b[[j, i]] = b;
            cov_hat[[i, j]] = h;
            cov_hat[[j, i]] = h;
        }
    }
    sup_norm_coverage(&cov_b, &cov_hat, beta, draws, seed)
}

/// Two-sample Kolmogorov distance: the largest gap between the empirical
/// c.d.f.s over the pooled sample points.
pub fn kolmogorov_distance(samples_a: &[f64], samples_b: &[f64]) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    b.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite samples"));

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut dist = 0.0f64;
    while ia < a.len() && ib < b.len() {
        let t = a[ia].min(b[ib]);
        while ia < a.len() && a[ia] <= t {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= t {
            ib += 1;
        }
        dist = dist.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    Ok(dist)
}
