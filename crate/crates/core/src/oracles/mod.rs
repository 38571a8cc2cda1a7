//! Independent ground truth for the bounds: exact Gaussian covariances, a
//! grid solver for the elliptic potential `φ` of the covariance
//! representation, and a Metropolis covariance estimator.

mod gaussian;
mod mcmc;
mod potential;

pub use gaussian::{gaussian_exact_covariance, GaussianModel};
pub use mcmc::{
    chain_seed, mcmc_covariance_matrix, mcmc_estimate_covariance, ChainEstimate, CovarianceMatrixEstimate, SamplerConfig,
};
pub use potential::{
    quadrature_covariance, solve_potential, verify_core_identity, verify_directional_pi, verify_dual_pi,
    verify_representation, verify_single_site_pi, CoreIdentityReport, DirectionalPiReport, DualPiReport, GridSpec,
    RepresentationReport,
    PotentialField, SingleSitePiReport, TOL_GRID_CONSTANT,
};

/// A smooth observable with its gradient.
pub trait Observable: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// `f(x) = x_site`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl Observable for Coordinate {
    fn value(&self, x: &[f64]) -> f64 {
        x[self.0]
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[self.0] = 1.0;
    }
}

/// `f(x) = w·x + offset`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub weights: Vec<f64>,
    pub offset: f64,
}

impl Observable for Affine {
    fn value(&self, x: &[f64]) -> f64 {
        self.offset + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.weights);
    }
}

/// `f(x) = c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Observable for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// A function of a single coordinate given with its derivative.
#[derive(Debug, Clone, Copy)]
pub struct SiteFunction {
    pub site: usize,
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
}

impl SiteFunction {
    pub fn cube(site: usize) -> Self {
        Self { site, f: |x| x * x * x, df: |x| 3.0 * x * x }
    }

    pub fn sin(site: usize) -> Self {
        Self { site, f: f64::sin, df: f64::cos }
    }

    pub fn tanh(site: usize) -> Self {
        Self { site, f: f64::tanh, df: |x| 1.0 - x.tanh().powi(2) }
    }
}

impl Observable for SiteFunction {
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x[self.site])
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[self.site] = (self.df)(x[self.site]);
    }
}
