//! Scalar normal-distribution helpers shared across the crate.

use crate::error::{Error, Result};
use statrs::function::erf;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal c.d.f.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile: returns z with `normal_cdf(z) = gamma`.
///
/// Seeded from the inverse error function, then polished with Newton steps
/// so the defining identity holds to 1e-10 or better across (0, 1).
pub fn normal_quantile(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            range: "(0, 1)",
        });
    }
    let mut z = SQRT_2 * erf::erf_inv(2.0 * gamma - 1.0);
    for _ in 0..3 {
        let err = normal_cdf(z) - gamma;
        if err == 0.0 {
            break;
        }
        let step = err / normal_pdf(z);
        // quantile curvature can overshoot far in the tails
        z -= step.clamp(-1.0, 1.0);
    }
    Ok(z)
}
