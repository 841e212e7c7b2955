//! Python bindings: the main kernel, posterior, band, and experiment
//! operations exposed over plain floats and lists.

use gpband::credible;
use gpband::kernels;
use gpband::posterior;
use gpband::sim;
use gpband::spectral;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: gpband::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Matern kernel value at smoothness `nu`.
#[pyfunction]
fn matern_eval(x: f64, y: f64, nu: f64) -> PyResult<f64> {
    kernels::matern_eval(x, y, nu).map_err(err)
}

/// Orthonormal Fourier basis function `psi_j(x)`.
#[pyfunction]
fn fourier_basis(j: usize, x: f64) -> PyResult<f64> {
    if j == 0 {
        return Err(PyValueError::new_err("basis index starts at 1"));
    }
    Ok(kernels::fourier_basis(j, x))
}

/// Standard normal quantile.
#[pyfunction]
fn normal_quantile(gamma: f64) -> PyResult<f64> {
    credible::normal_quantile(gamma).map_err(err)
}

/// Asymptotic pointwise interval coverage under under-smoothing.
#[pyfunction]
fn asymptotic_pointwise_coverage(alpha: f64, beta: f64) -> PyResult<f64> {
    spectral::asymptotic_pointwise_coverage(alpha, beta).map_err(err)
}

/// Limit of the variance-inflation ratio: `2 alpha / (2 alpha - 1)`.
#[pyfunction]
fn c_ir_limit(alpha: f64) -> PyResult<f64> {
    spectral::c_ir_limit(alpha).map_err(err)
}

/// Reference regression function of the simulation study.
#[pyfunction]
fn true_function(x: f64) -> f64 {
    sim::true_function(x)
}

/// Draw a synthetic dataset `(xs, ys)` from the reference function.
#[pyfunction]
fn generate_data(n: usize, sigma: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let data = sim::generate_data(n, sigma, seed).map_err(err)?;
    Ok((data.xs().to_vec(), data.ys().to_vec()))
}

/// Two-sample Kolmogorov distance.
#[pyfunction]
fn kolmogorov_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    credible::kolmogorov_distance(&a, &b).map_err(err)
}

/// Fitted posterior over [0, 1] with a Matern prior kernel.
#[pyclass]
struct Posterior {
    inner: posterior::PosteriorGp,
}

#[pymethods]
impl Posterior {
    #[new]
    fn new(xs: Vec<f64>, ys: Vec<f64>, nu: f64, lambda: f64, sigma2: f64) -> PyResult<Self> {
        let data = posterior::Dataset::new(xs, ys).map_err(err)?;
        let kernel = kernels::KernelSpec::matern(nu).map_err(err)?;
        let inner = posterior::fit(data, kernel, lambda, sigma2).map_err(err)?;
        Ok(Self { inner })
    }

    /// Posterior mean at each query point.
    fn mean(&self, xs: Vec<f64>) -> Vec<f64> {
        xs.into_iter().map(|x| self.inner.mean_at(x)).collect()
    }

    /// Posterior variance at each query point.
    fn variance(&self, xs: Vec<f64>) -> Vec<f64> {
        xs.into_iter().map(|x| self.inner.cov_at(x, x)).collect()
    }

    /// Posterior covariance between two points.
    fn cov(&self, x: f64, y: f64) -> f64 {
        self.inner.cov_at(x, y)
    }

    /// Pointwise credible interval `(lo, hi)` at level beta.
    fn interval(&self, x: f64, beta: f64) -> PyResult<(f64, f64)> {
        let iv = credible::pointwise_interval(&self.inner, x, beta).map_err(err)?;
        Ok((iv.lo(), iv.hi()))
    }

    /// Simultaneous band on an equispaced grid:
    /// returns `(grid, center, radius)`.
    fn band(
        &self,
        grid_size: usize,
        beta: f64,
        draws: usize,
        seed: u64,
    ) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
        let grid = sim::equispaced_grid(grid_size);
        let gp = self.inner.grid_posterior(&grid).map_err(err)?;
        let band = credible::credible_band(&gp, beta, draws, seed).map_err(err)?;
        Ok((grid, band.center().to_vec(), band.radius()))
    }
}

/// Population-level eigenbasis model at a fixed bandwidth.
#[pyclass]
struct SpectralModel {
    inner: spectral::SpectralModel,
}

#[pymethods]
impl SpectralModel {
    #[new]
    fn new(alpha: f64, h: f64, sigma2: f64) -> PyResult<Self> {
        Ok(Self {
            inner: spectral::SpectralModel::new(alpha, h, sigma2).map_err(err)?,
        })
    }

    #[getter]
    fn lambda(&self) -> f64 {
        self.inner.lambda()
    }

    /// Equivalent-kernel eigenweight `nu_j`.
    fn nu(&self, j: usize) -> PyResult<f64> {
        self.inner.nu(j).map_err(err)
    }

    fn equivalent_kernel(&self, s: f64, t: f64) -> f64 {
        self.inner.equivalent_kernel(s, t)
    }

    fn c_hat_b(&self, x: f64, y: f64) -> f64 {
        self.inner.c_hat_b(x, y)
    }

    fn c_hat(&self, x: f64, y: f64) -> f64 {
        self.inner.c_hat(x, y)
    }

    /// Variance-inflation ratio at this bandwidth.
    fn c_ir(&self) -> f64 {
        self.inner.c_ir()
    }

    /// Monte-Carlo limit of the simultaneous band coverage.
    fn band_coverage_limit(
        &self,
        grid_size: usize,
        beta: f64,
        draws: usize,
        seed: u64,
    ) -> PyResult<f64> {
        let grid = sim::equispaced_grid(grid_size);
        credible::band_coverage_limit(&self.inner, 0, &grid, beta, draws, seed).map_err(err)
    }
}

/// Run a replicated coverage experiment; returns the full report as a JSON
/// string (`betas`/`coverages` are the headline numbers).
#[pyfunction]
#[pyo3(signature = (n, nu, betas, replicates, seed=0, grid_size=200, band_draws=1000, sigma=0.1))]
#[allow(clippy::too_many_arguments)]
fn run_coverage(
    n: usize,
    nu: f64,
    betas: Vec<f64>,
    replicates: usize,
    seed: u64,
    grid_size: usize,
    band_draws: usize,
    sigma: f64,
) -> PyResult<String> {
    let mut cfg = sim::SimConfig::new(n, nu, betas, replicates);
    cfg.base_seed = seed;
    cfg.grid_size = grid_size;
    cfg.band_draws = band_draws;
    cfg.sigma = sigma;
    let report = sim::run_replicates(&cfg).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn gpband_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(matern_eval, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_basis, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_pointwise_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(c_ir_limit, m)?)?;
    m.add_function(wrap_pyfunction!(true_function, m)?)?;
    m.add_function(wrap_pyfunction!(generate_data, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_coverage, m)?)?;
    m.add_class::<Posterior>()?;
    m.add_class::<SpectralModel>()?;
    Ok(())
}
