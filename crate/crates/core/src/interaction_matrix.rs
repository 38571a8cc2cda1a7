//! The interaction matrix `A` (diagonal `ρ_i`, off-diagonal `−κ_ij`), its
//! tilted variant `Ã`, and the hypothesis checks the covariance and decay
//! bounds rest on.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs_model::GibbsModel;
use crate::lattice::LatticeGeometry;
use crate::linalg::{self, check_symmetric, cholesky, min_eigenvalue, symmetric_part, CLAMP_TOL};

/// Where an [`InteractionMatrix`] came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Provenance {
    Model,
    Direct,
}

/// Symmetric Z-matrix `A` with `A_ii = ρ_i > 0` and `A_ij = −κ_ij ≤ 0`.
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    a: DMatrix<f64>,
    rho: Vec<f64>,
    kappa: DMatrix<f64>,
    provenance: Provenance,
}

impl InteractionMatrix {
    pub fn build(rho: &[f64], kappa: &DMatrix<f64>) -> Result<Self> {
        let n = rho.len();
        if kappa.nrows() != n || kappa.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: kappa.nrows() });
        }
        if let Some(r) = rho.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {r}")));
        }
        for i in 0..n {
            if kappa[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument("kappa must have zero diagonal".into()));
            }
            for j in 0..n {
                let k = kappa[(i, j)];
                if !(k >= 0.0) || !k.is_finite() {
                    return Err(Error::InvalidArgument(format!("kappa[{i},{j}] = {k} is negative")));
                }
            }
        }
        check_symmetric(kappa)?;
        let mut a = -kappa.clone();
        for (i, &r) in rho.iter().enumerate() {
            a[(i, i)] = r;
        }
        Ok(Self { a, rho: rho.to_vec(), kappa: kappa.clone(), provenance: Provenance::Direct })
    }

    pub fn from_model(model: &GibbsModel) -> Result<Self> {
        let mut im = Self::build(&model.rho(), &model.kappa_matrix())?;
        im.provenance = Provenance::Model;
        Ok(im)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn kappa(&self) -> &DMatrix<f64> {
        &self.kappa
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky(&self.a).is_some()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.a)
    }

    /// Entrywise nonnegative `A⁻¹`; see [`inverse_entrywise`].
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        inverse_entrywise(&self.a)
    }
}

/// Cholesky-based positive definiteness with pivot tolerance `1e−12 · max diag`.
pub fn is_positive_definite(a: &DMatrix<f64>) -> Result<bool> {
    check_symmetric(a)?;
    Ok(cholesky(a).is_some())
}

/// Largest `δ ≥ 0` with `Σ_{j≠i} |A_ij| + δ ≤ A_ii` for all rows, or `None`
/// when no positive margin exists.
pub fn is_strictly_diagonally_dominant(a: &DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let margin = (0..n)
        .map(|i| a[(i, i)] - (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (margin > 0.0).then_some(margin)
}

/// `A⁻¹` for a positive definite Z-matrix. Entries within `1e−12` of zero are
/// clamped to zero so the M-matrix sign pattern holds exactly.
pub fn inverse_entrywise(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut inv = linalg::spd_inverse(a)?;
    inv.iter_mut().for_each(|v| {
        if v.abs() <= CLAMP_TOL {
            *v = 0.0;
        }
    });
    Ok(inv)
}

/// PI criterion: if `A ≥ ϱ Id` with `ϱ > 0`, then the Gibbs measure satisfies
/// PI with constant `ϱ`. Returns the certified constant `λ_min(A)`.
pub fn pi_criterion_check(im: &InteractionMatrix) -> Option<f64> {
    let lambda = im.min_eigenvalue();
    (lambda > 0.0).then_some(lambda)
}

/// `Ã` with off-diagonals `−e^{δ(i,j)} κ_ij` and its smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct TiltedMatrix {
    pub a_tilde: DMatrix<f64>,
    pub metric: Vec<Vec<f64>>,
    /// `λ_min(Ã)` when positive.
    pub rho_tilde: Option<f64>,
    pub min_eigenvalue: f64,
}

pub fn build_tilted_matrix(im: &InteractionMatrix, geom: &LatticeGeometry) -> Result<TiltedMatrix> {
    let n = im.n();
    if geom.n_sites() != n {
        return Err(Error::DimensionMismatch { expected: n, got: geom.n_sites() });
    }
    let metric = geom.distance_matrix();
    let mut a_tilde = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a_tilde[(i, j)] = if i == j { im.rho[i] } else { -metric[i][j].exp() * im.kappa[(i, j)] };
        }
    }
    let lambda = min_eigenvalue(&a_tilde);
    Ok(TiltedMatrix { a_tilde, metric, rho_tilde: (lambda > 0.0).then_some(lambda), min_eigenvalue: lambda })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityCheck {
    pub pass: bool,
    /// Smallest eigenvalue of the symmetric part of `D A D⁻¹`.
    pub rho: f64,
}

/// Checks `D A D⁻¹ ≥ ϱ Id` in the sense of quadratic forms.
pub fn weighted_similarity_check(a: &DMatrix<f64>, weights: &[f64]) -> Result<SimilarityCheck> {
    let n = linalg::check_square(a)?;
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    if weights.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument("weights must be positive".into()));
    }
    let mut m = a.clone();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] *= weights[i] / weights[j];
        }
    }
    let rho = min_eigenvalue(&symmetric_part(&m));
    let pass = rho > 0.0;
    if pass {
        // positivity of D A D⁻¹ forces A to be positive definite
        let eig = min_eigenvalue(&symmetric_part(a));
        assert!(eig > 0.0, "D A D^-1 >= {rho} but A has eigenvalue {eig}");
    }
    Ok(SimilarityCheck { pass, rho })
}

/// Terms `T_k = (diag(1/ρ) κ)^k diag(1/ρ)` of the random-walk expansion of `A⁻¹`.
#[derive(Debug, Clone)]
pub struct NeumannExpansion {
    pub terms: Vec<DMatrix<f64>>,
    /// Running sums `S_k = Σ_{m≤k} T_m`.
    pub partial_sums: Vec<DMatrix<f64>>,
}

impl NeumannExpansion {
    pub fn sum(&self) -> &DMatrix<f64> {
        self.partial_sums.last().expect("at least T_0")
    }
}

pub fn neumann_partial_sums(im: &InteractionMatrix, k_max: usize) -> Result<NeumannExpansion> {
    if is_strictly_diagonally_dominant(&im.a).is_none() {
        return Err(Error::NotDiagonallyDominant);
    }
    let n = im.n();
    let inv_rho = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, im.rho.iter().map(|r| 1.0 / r)));
    let step = &inv_rho * &im.kappa;
    let mut terms = Vec::with_capacity(k_max + 1);
    let mut partial_sums = Vec::with_capacity(k_max + 1);
    let mut t = inv_rho.clone();
    let mut s = inv_rho;
    terms.push(t.clone());
    partial_sums.push(s.clone());
    for _ in 0..k_max {
        t = &step * &t;
        s += &t;
        terms.push(t.clone());
        partial_sums.push(s.clone());
    }
    Ok(NeumannExpansion { terms, partial_sums })
}

/// `c = max_n Σ_m κ_nm / ρ_n`, required to be below one.
pub fn neumann_contraction_constant(im: &InteractionMatrix) -> Result<f64> {
    let c = row_contraction(im);
    if c < 1.0 {
        Ok(c)
    } else {
        Err(Error::NoContraction(c))
    }
}

pub(crate) fn row_contraction(im: &InteractionMatrix) -> f64 {
    (0..im.n())
        .map(|i| im.kappa.row(i).sum() / im.rho[i])
        .fold(0.0, f64::max)
}

/// `max_n Σ_m κ_mn / ρ_m`, the column analogue of the contraction constant.
pub(crate) fn column_contraction(im: &InteractionMatrix) -> f64 {
    (0..im.n())
        .map(|j| (0..im.n()).map(|m| im.kappa[(m, j)] / im.rho[m]).sum::<f64>())
        .fold(0.0, f64::max)
}
