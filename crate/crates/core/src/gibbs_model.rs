//! Hamiltonians of lattice spin systems with continuous real spins.
//!
//! `H(x) = Σ_i ψ_i(x_i) − Σ_{i<j} J_ij x_i x_j` with single-site potentials
//! `ψ_i(x) = (q/2)x² + δψ(x)`, where the perturbation `δψ` is bounded with a
//! certified oscillation. Temperature is fixed to one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::linalg::{min_eigenvalue, symmetric_part};

/// Bounded perturbation of the quadratic single-site part.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    /// `a · cos(b x)`.
    Cosine { amplitude: f64, frequency: f64 },
    /// Piecewise-linear interpolation of uniformly spaced values on
    /// `[x_min, x_max]`, held constant outside.
    Table { x_min: f64, x_max: f64, values: Vec<f64> },
}

impl Perturbation {
    fn value(&self, x: f64) -> f64 {
        match self {
            Perturbation::None => 0.0,
            Perturbation::Cosine { amplitude, frequency } => amplitude * (frequency * x).cos(),
            Perturbation::Table { x_min, x_max, values } => {
                let (k, t) = table_segment(*x_min, *x_max, values.len(), x);
                values[k] * (1.0 - t) + values[(k + 1).min(values.len() - 1)] * t
            }
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            Perturbation::None => 0.0,
            Perturbation::Cosine { amplitude, frequency } => -amplitude * frequency * (frequency * x).sin(),
            Perturbation::Table { x_min, x_max, values } => {
                if x <= *x_min || x >= *x_max || values.len() < 2 {
                    return 0.0;
                }
                let (k, _) = table_segment(*x_min, *x_max, values.len(), x);
                let h = (x_max - x_min) / (values.len() - 1) as f64;
                (values[k + 1] - values[k]) / h
            }
        }
    }

    fn second_derivative(&self, x: f64) -> f64 {
        match self {
            Perturbation::Cosine { amplitude, frequency } => {
                -amplitude * frequency * frequency * (frequency * x).cos()
            }
            _ => 0.0,
        }
    }
}

fn table_segment(x_min: f64, x_max: f64, len: usize, x: f64) -> (usize, f64) {
    if len < 2 || x <= x_min {
        return (0, 0.0);
    }
    if x >= x_max {
        return (len - 1, 0.0);
    }
    let h = (x_max - x_min) / (len - 1) as f64;
    let pos = (x - x_min) / h;
    let k = (pos.floor() as usize).min(len - 2);
    (k, pos - k as f64)
}

/// `ψ(x) = (q/2)x² + δψ(x)` together with a certified bound on `osc δψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSitePotential {
    quadratic: f64,
    perturbation: Perturbation,
    osc_bound: f64,
}

impl SingleSitePotential {
    pub fn gaussian(quadratic: f64) -> Result<Self> {
        Self::check_quadratic(quadratic)?;
        Ok(Self { quadratic, perturbation: Perturbation::None, osc_bound: 0.0 })
    }

    /// Cosine perturbation; its oscillation is exactly `2|a|`.
    pub fn cosine(quadratic: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        Self::check_quadratic(quadratic)?;
        if !amplitude.is_finite() || !frequency.is_finite() {
            return Err(Error::InvalidModel("cosine parameters must be finite".into()));
        }
        Ok(Self {
            quadratic,
            perturbation: Perturbation::Cosine { amplitude, frequency },
            osc_bound: 2.0 * amplitude.abs(),
        })
    }

    /// Tabulated perturbation. The caller certifies `osc_bound`; it must at
    /// least cover the spread of the table, which is the exact oscillation of
    /// the interpolant.
    pub fn tabulated(quadratic: f64, x_min: f64, x_max: f64, values: Vec<f64>, osc_bound: f64) -> Result<Self> {
        Self::check_quadratic(quadratic)?;
        if values.len() < 2 || !(x_max > x_min) {
            return Err(Error::InvalidModel("table needs at least two nodes on a nonempty interval".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("table values must be finite".into()));
        }
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(osc_bound >= hi - lo) {
            return Err(Error::InvalidModel(format!(
                "osc_bound {osc_bound} below table oscillation {}",
                hi - lo
            )));
        }
        Ok(Self { quadratic, perturbation: Perturbation::Table { x_min, x_max, values }, osc_bound })
    }

    fn check_quadratic(q: f64) -> Result<()> {
        if q > 0.0 && q.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("quadratic coefficient must be positive, got {q}")))
        }
    }

    pub fn quadratic(&self) -> f64 {
        self.quadratic
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn osc_bound(&self) -> f64 {
        self.osc_bound
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.perturbation, Perturbation::None)
    }

    pub fn value(&self, x: f64) -> f64 {
        0.5 * self.quadratic * x * x + self.perturbation.value(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.quadratic * x + self.perturbation.derivative(x)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.quadratic + self.perturbation.second_derivative(x)
    }

    /// Certified PI constant of the single-site conditional measures:
    /// Bakry-Émery gives `q` for the convex part (the linear field from the
    /// neighbors only shifts it), Holley-Stroock costs a factor `exp(−osc δψ)`.
    pub fn pi_constant(&self) -> Result<f64> {
        Self::check_quadratic(self.quadratic)?;
        Ok(self.quadratic * (-self.osc_bound).exp())
    }
}

/// Pairwise coupling rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// `J_ij = ε` iff `δ(i,j) = 1`.
    NearestNeighbor { epsilon: f64 },
    /// `J_ij = c / (|i−j|^{d+α} + 1)` with the Euclidean torus distance.
    Algebraic { c: f64, alpha: f64, d: usize },
    /// Symmetric matrix with zero diagonal.
    Explicit(DMatrix<f64>),
}

/// A Gibbs measure `Z⁻¹ exp(−H) dx` on `ℝ^N`. Immutable; evaluations are pure.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    geometry: LatticeGeometry,
    potentials: Vec<SingleSitePotential>,
    coupling: Coupling,
    j: DMatrix<f64>,
}

impl GibbsModel {
    /// `potentials` holds either one shared potential or one per site.
    pub fn new(geometry: LatticeGeometry, potentials: Vec<SingleSitePotential>, coupling: Coupling) -> Result<Self> {
        let n = geometry.n_sites();
        let potentials = match potentials.len() {
            1 => vec![potentials[0].clone(); n],
            len if len == n => potentials,
            len => return Err(Error::DimensionMismatch { expected: n, got: len }),
        };
        let j = coupling_matrix(&geometry, &coupling)?;
        Ok(Self { geometry, potentials, coupling, j })
    }

    pub fn shared(geometry: LatticeGeometry, potential: SingleSitePotential, coupling: Coupling) -> Result<Self> {
        Self::new(geometry, vec![potential], coupling)
    }

    pub fn n_sites(&self) -> usize {
        self.geometry.n_sites()
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn potential(&self, i: usize) -> &SingleSitePotential {
        &self.potentials[i]
    }

    pub fn potentials(&self) -> &[SingleSitePotential] {
        &self.potentials
    }

    /// Coupling matrix `J`.
    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn is_gaussian(&self) -> bool {
        self.potentials.iter().all(SingleSitePotential::is_gaussian)
    }

    /// All couplings attractive (`J_ij ≥ 0`).
    pub fn is_ferromagnetic(&self) -> bool {
        self.j.iter().all(|&v| v >= 0.0)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_sites() {
            Err(Error::DimensionMismatch { expected: self.n_sites(), got: x.len() })
        } else {
            Ok(())
        }
    }

    pub fn hamiltonian(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let n = x.len();
        let mut h: f64 = x.iter().zip(&self.potentials).map(|(&xi, p)| p.value(xi)).sum();
        for i in 0..n {
            for j in (i + 1)..n {
                h -= self.j[(i, j)] * x[i] * x[j];
            }
        }
        Ok(h)
    }

    /// Σ_j J_ij x_j, the linear field seen by site `i`.
    pub fn local_field(&self, i: usize, x: &[f64]) -> f64 {
        self.j.row(i).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn grad_hamiltonian(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok((0..x.len())
            .map(|i| self.potentials[i].derivative(x[i]) - self.local_field(i, x))
            .collect())
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let mut h = -self.j.clone();
        for i in 0..x.len() {
            h[(i, i)] = self.potentials[i].second_derivative(x[i]);
        }
        Ok(h)
    }

    /// Uniform bounds `κ_ij = |J_ij|` on the mixed second derivatives.
    pub fn kappa_matrix(&self) -> DMatrix<f64> {
        self.j.abs()
    }

    pub fn single_site_pi_constant(&self, i: usize) -> Result<f64> {
        if i >= self.n_sites() {
            return Err(Error::IndexOutOfRange { index: i, len: self.n_sites() });
        }
        self.potentials[i].pi_constant()
    }

    /// All single-site PI constants `ρ_i`.
    pub fn rho(&self) -> Vec<f64> {
        self.potentials.iter().map(|p| p.pi_constant().expect("validated at construction")).collect()
    }
}

fn coupling_matrix(geometry: &LatticeGeometry, coupling: &Coupling) -> Result<DMatrix<f64>> {
    let n = geometry.n_sites();
    let mut j = DMatrix::<f64>::zeros(n, n);
    match coupling {
        Coupling::NearestNeighbor { epsilon } => {
            if !epsilon.is_finite() {
                return Err(Error::InvalidModel("epsilon must be finite".into()));
            }
            for a in 0..n {
                for b in 0..n {
                    if a != b && geometry.graph_distance(a, b)? == 1.0 {
                        j[(a, b)] = *epsilon;
                    }
                }
            }
        }
        Coupling::Algebraic { c, alpha, d } => {
            if !(*c > 0.0) || !(*alpha > 0.0) {
                return Err(Error::InvalidModel("algebraic coupling needs c > 0 and alpha > 0".into()));
            }
            if *d != geometry.dimension() || geometry.side_lengths().is_none() {
                return Err(Error::InvalidModel(format!(
                    "algebraic coupling with d = {d} needs a {d}-dimensional periodic grid"
                )));
            }
            let p = *d as f64 + alpha;
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        let r = geometry.euclidean_site_distance(a, b)?;
                        j[(a, b)] = c / (r.powf(p) + 1.0);
                    }
                }
            }
        }
        Coupling::Explicit(m) => {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
            }
            for a in 0..n {
                if m[(a, a)] != 0.0 {
                    return Err(Error::InvalidModel("explicit coupling must have zero diagonal".into()));
                }
                for b in 0..n {
                    if m[(a, b)] != m[(b, a)] || !m[(a, b)].is_finite() {
                        return Err(Error::InvalidModel("explicit coupling must be symmetric and finite".into()));
                    }
                }
            }
            j.copy_from(m);
        }
    }
    Ok(j)
}

/// Outcome of [`pointwise_relaxed_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedCheck {
    pub pass: bool,
    pub min_eigenvalue: f64,
}

/// Sampled-point check of `D 𝒜(x) D⁻¹ ≥ ϱ` where `𝒜(x)` has diagonal `ρ_i` and
/// the signed mixed second derivatives off the diagonal. Only the supplied
/// points are examined.
pub fn pointwise_relaxed_check(
    model: &GibbsModel,
    weights: &[f64],
    points: &[Vec<f64>],
    rho_target: f64,
) -> Result<RelaxedCheck> {
    let n = model.n_sites();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    if weights.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument("weights must be positive".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("point list is empty".into()));
    }
    let rho = model.rho();
    let mut worst = f64::INFINITY;
    for x in points {
        let hess = model.hessian(x)?;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let a = if i == j { rho[i] } else { hess[(i, j)] };
                m[(i, j)] = weights[i] * a / weights[j];
            }
        }
        worst = worst.min(min_eigenvalue(&symmetric_part(&m)));
    }
    Ok(RelaxedCheck { pass: worst >= rho_target, min_eigenvalue: worst })
}
