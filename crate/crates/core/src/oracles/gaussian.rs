use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gibbs_model::GibbsModel;
use crate::linalg::{check_symmetric, cholesky};

/// Gaussian measure with density ∝ `exp(−½ xᵀ P x − bᵀ x)`.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    precision: DMatrix<f64>,
    linear: DVector<f64>,
}

impl GaussianModel {
    pub fn new(precision: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        check_symmetric(&precision)?;
        if linear.len() != precision.nrows() {
            return Err(Error::DimensionMismatch { expected: precision.nrows(), got: linear.len() });
        }
        if cholesky(&precision).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { precision, linear })
    }

    /// The Hessian of an unperturbed model, `diag(q) − J`.
    pub fn from_model(model: &GibbsModel) -> Result<Self> {
        if !model.is_gaussian() {
            return Err(Error::InvalidModel("model has non-Gaussian single-site potentials".into()));
        }
        let n = model.n_sites();
        Self::new(model.hessian(&vec![0.0; n])?, DVector::zeros(n))
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    /// Attractive coupling: all off-diagonal precision entries `≤ 0`.
    pub fn is_ferromagnetic(&self) -> bool {
        let n = self.precision.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.precision[(i, j)] <= 0.0))
    }
}

/// `cov(x_n, x_k) = (P⁻¹)_nk`, independent of the linear term. Computed by LU
/// so it shares no code path with the Cholesky inverse used for the bounds.
pub fn gaussian_exact_covariance(gm: &GaussianModel) -> Result<DMatrix<f64>> {
    gm.precision.clone().lu().try_inverse().ok_or(Error::NotPositiveDefinite)
}
