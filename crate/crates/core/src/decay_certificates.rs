//! Machine-checkable decay certificates for the entries of `A⁻¹`.
//!
//! Exponential decay follows from positivity of the tilted matrix `Ã`:
//! `(A⁻¹)_ij ≤ e^{−δ(i,j)} (Ã⁻¹)_ij ≤ e^{−δ(i,j)} / ϱ̃`.
//!
//! Algebraic decay follows from strict diagonal dominance and an interaction
//! profile `κ_ij ≤ c_κ / (|i−j|^{d+α} + 1)`. The random-walk expansion
//! `A⁻¹ = Σ_k T_k` is split at `ñ(i,j)`, the smallest integer larger than
//! `log |i−j|^{d+α} / |log c|`:
//!
//! * tail: `Σ_{k≥ñ} T_k ≤ c^ñ/(1−c) · max 1/ρ ≤ |i−j|^{−(d+α)} · max 1/ρ/(1−c)`,
//! * head: a path of `k` steps from `i` to `j` has a step of Euclidean length
//!   at least `|i−j|/k`, so `T_k ≤ C_T k^{d+α+1} ĉ^{k−1} / |i−j|^{d+α}` with
//!   `C_T = c_κ / min ρ²` and `ĉ` the larger of the row and column
//!   contraction constants.
//!
//! The certificate evaluates both parts for every pair, checks them against
//! the computed inverse, and folds them into an explicit prefactor `C` with
//! `(A⁻¹)_ij ≤ C / (|i−j|^{d+α/2} + 1)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction_matrix::{
    build_tilted_matrix, column_contraction, is_strictly_diagonally_dominant, neumann_partial_sums, row_contraction,
    InteractionMatrix,
};
use crate::lattice::LatticeGeometry;
use crate::linalg::{cholesky, spd_inverse};

/// Audit threshold for the element-wise tilt inequality.
pub const TILT_AUDIT_TOL: f64 = 1e-10;
/// Absolute slack for comparing computed inverse entries with certified bounds.
const ENTRY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Exponential,
    Algebraic,
}

/// Least-squares decay fit of the computed inverse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Decay rate (exponential) or exponent (algebraic) from the slope.
    pub value: f64,
    pub range: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub kind: DecayKind,
    pub pass: bool,
    /// Hypothesis and consistency checks, by name.
    pub checks: BTreeMap<String, bool>,
    /// Per-unit-distance rate (exponential) or `d + α̃` (algebraic).
    pub rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefactor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance_margin: Option<f64>,
    /// Extra constants (profile constant, term-bound constant, tail cut, ...).
    pub constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted: Option<DecayFit>,
}

impl DecayCertificate {
    fn new(kind: DecayKind) -> Self {
        Self {
            kind,
            pass: false,
            checks: BTreeMap::new(),
            rate: 0.0,
            alpha: None,
            alpha_tilde: None,
            prefactor: None,
            rho_tilde: None,
            contraction: None,
            dominance_margin: None,
            constants: BTreeMap::new(),
            fitted: None,
        }
    }

    fn check(&mut self, name: &str, ok: bool) -> bool {
        self.checks.insert(name.to_string(), ok);
        ok
    }

    fn finish(mut self) -> Self {
        self.pass = !self.checks.is_empty() && self.checks.values().all(|&v| v);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltAudit {
    pub max_violation: f64,
    pub pass: bool,
}

/// Largest relative violation of `(A⁻¹)_ij ≤ e^{−δ(i,j)} (Ã⁻¹)_ij`.
pub fn tilt_inequality_audit(im: &InteractionMatrix, geom: &LatticeGeometry) -> Result<TiltAudit> {
    let tilted = build_tilted_matrix(im, geom)?;
    if cholesky(im.matrix()).is_none() || cholesky(&tilted.a_tilde).is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let inv = spd_inverse(im.matrix())?;
    let tinv = spd_inverse(&tilted.a_tilde)?;
    let n = im.n();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let rhs = (-tilted.metric[i][j]).exp() * tinv[(i, j)];
            worst = worst.max((inv[(i, j)] - rhs) / (tinv[(i, j)].abs() + 1e-300));
        }
    }
    Ok(TiltAudit { max_violation: worst, pass: worst <= TILT_AUDIT_TOL })
}

/// Exponential certificate: passes iff `Ã` is positive definite and the
/// element-wise tilt inequality holds on the instance.
pub fn exponential_certificate(im: &InteractionMatrix, geom: &LatticeGeometry) -> Result<DecayCertificate> {
    let tilted = build_tilted_matrix(im, geom)?;
    let mut cert = DecayCertificate::new(DecayKind::Exponential);
    cert.rate = 1.0;
    cert.constants.insert("tilted_min_eigenvalue".into(), tilted.min_eigenvalue);
    let Some(rho_tilde) = tilted.rho_tilde else {
        cert.check("tilted_positive_definite", false);
        return Ok(cert.finish());
    };
    cert.check("tilted_positive_definite", true);
    cert.rho_tilde = Some(rho_tilde);
    cert.prefactor = Some(1.0 / rho_tilde);
    let audit = tilt_inequality_audit(im, geom)?;
    cert.constants.insert("tilt_max_violation".into(), audit.max_violation);
    cert.check("tilt_inequality", audit.pass);

    let inv = im.inverse()?;
    let bound_ok = (0..im.n()).all(|i| {
        (0..im.n()).all(|j| inv[(i, j)] <= (-tilted.metric[i][j]).exp() / rho_tilde + ENTRY_SLACK)
    });
    cert.check("entry_bounds", bound_ok);
    let profile = decay_profile(&inv, &tilted.metric);
    cert.fitted = fit(&profile, 1.0, f64::INFINITY, false);
    Ok(cert.finish())
}

/// `(distance, max_{δ(i,j)=distance} |(A⁻¹)_ij|)` sorted by distance.
pub fn decay_profile(inverse: &DMatrix<f64>, distances: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (i, row) in distances.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            let v = inverse[(i, j)].abs();
            match pts.iter_mut().find(|(dd, _)| (dd - d).abs() <= 1e-9 * d.max(1.0)) {
                Some(p) => p.1 = p.1.max(v),
                None => pts.push((d, v)),
            }
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Euclidean torus distances between all grid sites.
pub fn euclidean_distances(geom: &LatticeGeometry) -> Result<Vec<Vec<f64>>> {
    let n = geom.n_sites();
    (0..n).map(|i| (0..n).map(|j| geom.euclidean_site_distance(i, j)).collect()).collect()
}

/// Least-squares slope of `log v` against `log r` (or `r` when `log_x` is
/// false) over `lo ≤ r ≤ hi`, reported as a positive decay value.
fn fit(profile: &[(f64, f64)], lo: f64, hi: f64, log_x: bool) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, v)| *r >= lo && *r <= hi && *r > 0.0 && *v > 0.0)
        .map(|&(r, v)| (if log_x { r.ln() } else { r }, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let lo_used = profile.iter().map(|p| p.0).filter(|&r| r >= lo && r <= hi && r > 0.0).fold(f64::INFINITY, f64::min);
    let hi_used = profile.iter().map(|p| p.0).filter(|&r| r >= lo && r <= hi).fold(0.0, f64::max);
    Some(DecayFit { value: -sxy / sxx, range: (lo_used, hi_used), points: pts.len() })
}

/// Tail cut `ñ`: the smallest integer strictly larger than `(d+α) log r / |log c|`.
pub fn tail_cut(distance: f64, exponent: f64, contraction: f64) -> usize {
    if contraction <= 0.0 || distance <= 1.0 {
        return 1;
    }
    (exponent * distance.ln() / contraction.ln().abs()).floor() as usize + 1
}

/// Algebraic certificate with `α̃ = α/2`.
pub fn algebraic_certificate(im: &InteractionMatrix, geom: &LatticeGeometry, alpha: f64) -> Result<DecayCertificate> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if geom.n_sites() != im.n() {
        return Err(Error::DimensionMismatch { expected: im.n(), got: geom.n_sites() });
    }
    let sides = geom.side_lengths().ok_or(Error::NoCoordinates)?.to_vec();
    let n = im.n();
    let d = geom.dimension() as f64;
    let p = d + alpha;
    let alpha_tilde = alpha / 2.0;

    let mut cert = DecayCertificate::new(DecayKind::Algebraic);
    cert.alpha = Some(alpha);
    cert.alpha_tilde = Some(alpha_tilde);
    cert.rate = d + alpha_tilde;

    let dist = euclidean_distances(geom)?;
    let kappa = im.kappa();
    let mut profile_constant = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                profile_constant = profile_constant.max(kappa[(i, j)] * (dist[i][j].powf(p) + 1.0));
            }
        }
    }
    cert.constants.insert("profile_constant".into(), profile_constant);

    let margin = is_strictly_diagonally_dominant(im.matrix());
    cert.dominance_margin = margin;
    if !cert.check("strictly_diagonally_dominant", margin.is_some()) {
        return Ok(cert.finish());
    }
    let c = row_contraction(im);
    cert.contraction = Some(c);
    if !cert.check("contraction_below_one", c < 1.0) {
        return Ok(cert.finish());
    }
    let c_hat = c.max(column_contraction(im));
    let rho_min = im.rho().iter().cloned().fold(f64::INFINITY, f64::min);
    let inv_rho_max = 1.0 / rho_min;
    let term_constant = profile_constant / (rho_min * rho_min);
    cert.constants.insert("column_contraction".into(), column_contraction(im));
    cert.constants.insert("term_constant".into(), term_constant);

    let mut max_cut = 1;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_cut = max_cut.max(tail_cut(dist[i][j], p, c));
            }
        }
    }
    cert.constants.insert("max_tail_cut".into(), max_cut as f64);
    let expansion = neumann_partial_sums(im, max_cut)?;
    let inv = im.inverse()?;

    // head sums Σ_{k=1}^{m-1} k^{p+1} ĉ^{k-1}, indexed by m
    let mut head_series = vec![0.0; max_cut + 1];
    for m in 2..=max_cut {
        let k = (m - 1) as f64;
        head_series[m] = head_series[m - 1] + k.powf(p + 1.0) * c_hat.powi(m as i32 - 2);
    }

    let diag_bound = inv_rho_max / (1.0 - c);
    let mut tail_ok = true;
    let mut terms_ok = true;
    let mut pair_ok = true;
    let mut prefactor = diag_bound;
    for i in 0..n {
        if inv[(i, i)] > diag_bound + ENTRY_SLACK {
            pair_ok = false;
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = dist[i][j];
            let cut = tail_cut(r, p, c);
            let tail = inv[(i, j)] - expansion.partial_sums[cut - 1][(i, j)];
            if tail > c.powi(cut as i32) / (1.0 - c) * inv_rho_max + ENTRY_SLACK {
                tail_ok = false;
            }
            for k in 1..=max_cut {
                let t_bound = term_constant * (k as f64).powf(p + 1.0) * c_hat.powi(k as i32 - 1) / r.powf(p);
                if expansion.terms[k][(i, j)] > t_bound * (1.0 + 1e-12) + 1e-300 {
                    terms_ok = false;
                }
            }
            let bound = (term_constant * head_series[cut] + inv_rho_max / (1.0 - c)) / r.powf(p);
            if inv[(i, j)] > bound + ENTRY_SLACK {
                pair_ok = false;
            }
            prefactor = prefactor.max(bound * (r.powf(d + alpha_tilde) + 1.0));
        }
    }
    cert.check("tail_bound", tail_ok);
    cert.check("term_bound", terms_ok);
    cert.check("pair_bounds", pair_ok);
    let decay_ok = (0..n).all(|i| {
        (0..n).all(|j| inv[(i, j)] <= prefactor / (dist[i][j].powf(d + alpha_tilde) + 1.0) + ENTRY_SLACK)
    });
    cert.check("decay_bound", decay_ok && prefactor.is_finite());
    cert.prefactor = Some(prefactor);

    let side = sides.iter().copied().min().unwrap_or(1) as f64;
    let profile = decay_profile(&inv, &dist);
    cert.fitted = fit(&profile, side.powf(0.25).ceil(), (side / 4.0).floor(), true);
    Ok(cert.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs_model::{Coupling, GibbsModel, SingleSitePotential};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(n: usize, coupling: Coupling) -> InteractionMatrix {
        let m = GibbsModel::shared(LatticeGeometry::ring(n).unwrap(), SingleSitePotential::gaussian(1.0).unwrap(), coupling).unwrap();
        InteractionMatrix::from_model(&m).unwrap()
    }

    #[test]
    fn exponential_examples() {
        let geom = LatticeGeometry::ring(16).unwrap();
        let cert = exponential_certificate(&ring(16, Coupling::NearestNeighbor { epsilon: 0.0 }), &geom).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.prefactor, Some(1.0));

        let cert = exponential_certificate(&ring(16, Coupling::NearestNeighbor { epsilon: 0.1 }), &geom).unwrap();
        assert!(cert.pass);
        let expect = 1.0 - 0.2 * std::f64::consts::E;
        assert!((cert.rho_tilde.unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.4563).abs() < 1e-4);
        assert!(cert.fitted.as_ref().unwrap().value > 1.0);

        let cert = exponential_certificate(&ring(16, Coupling::NearestNeighbor { epsilon: 0.2 }), &geom).unwrap();
        assert!(!cert.pass);
        assert!(cert.rho_tilde.is_none());
        assert!((cert.constants["tilted_min_eigenvalue"] - (1.0 - 0.4 * std::f64::consts::E)).abs() < 1e-12);
    }

    #[test]
    fn tilt_audit_examples() {
        let two = |k: f64| InteractionMatrix::build(&[1.0, 1.0], &DMatrix::from_row_slice(2, 2, &[0.0, k, k, 0.0])).unwrap();
        let g = LatticeGeometry::ring(2).unwrap();
        let a = tilt_inequality_audit(&two(0.0), &g).unwrap();
        assert!(a.pass && a.max_violation <= 0.0);
        let a = tilt_inequality_audit(&two(0.1), &g).unwrap();
        assert!(a.pass);
        // closed forms of the off-diagonal entries
        let e = std::f64::consts::E;
        let lhs = 0.1 / (1.0 - 0.01);
        let rhs = (-1.0f64).exp() * 0.1 * e / (1.0 - (0.1 * e) * (0.1 * e));
        assert!(lhs <= rhs);
        assert!(tilt_inequality_audit(&two(0.5), &g).is_err());
    }

    #[test]
    fn tilt_audit_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n = rng.random_range(2..=20);
            let geom = LatticeGeometry::ring(n).unwrap();
            let rho: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let mut kappa = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.random_range(0.0..1.0) * (-geom.graph_distance(i, j).unwrap()).exp();
                    kappa[(i, j)] = v;
                    kappa[(j, i)] = v;
                }
            }
            let tilted_rows = (0..n)
                .map(|i| (0..n).map(|j| kappa[(i, j)] * geom.graph_distance(i, j).unwrap().exp()).sum::<f64>() / rho[i])
                .fold(0.0, f64::max);
            kappa *= 0.9 / tilted_rows.max(1e-300);
            let im = InteractionMatrix::build(&rho, &kappa).unwrap();
            assert!(tilt_inequality_audit(&im, &geom).unwrap().pass);
        }
    }

    #[test]
    fn tail_cut_is_monotone() {
        let mut prev = 0;
        for r in 1..200 {
            let m = tail_cut(r as f64, 2.0, 0.3);
            assert!(m >= prev);
            prev = m;
        }
        // strictly larger than an integer-valued argument
        let c = (-1.0f64).exp();
        assert_eq!(tail_cut(std::f64::consts::E, 2.0, c), 3);
    }

    #[test]
    fn algebraic_trivial_when_uncoupled() {
        let geom = LatticeGeometry::ring(32).unwrap();
        let im = ring(32, Coupling::NearestNeighbor { epsilon: 0.0 });
        let cert = algebraic_certificate(&im, &geom, 1.0).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.contraction, Some(0.0));
        assert!(cert.prefactor.unwrap().is_finite());
    }

    #[test]
    fn algebraic_power_law_instance() {
        let geom = LatticeGeometry::ring(128).unwrap();
        let im = ring(128, Coupling::Algebraic { c: 0.1, alpha: 1.0, d: 1 });
        let cert = algebraic_certificate(&im, &geom, 1.0).unwrap();
        assert!(cert.pass, "{:?}", cert.checks);
        assert_eq!(cert.alpha_tilde, Some(0.5));
        assert_eq!(cert.rate, 1.5);
        let c = cert.contraction.unwrap();
        // 0.1 Σ_{r≠0} 1/(r²+1) on the 128-ring, just below 0.1 (π coth π − 1)
        assert!(c < 0.1 * (std::f64::consts::PI / std::f64::consts::PI.tanh() - 1.0));
        assert!(c > 0.2);
        let fit = cert.fitted.unwrap();
        assert_eq!(fit.range, (4.0, 32.0));
        assert!(fit.value >= 1.5, "fitted {}", fit.value);
    }

    #[test]
    fn algebraic_fails_without_dominance() {
        let geom = LatticeGeometry::ring(16).unwrap();
        let im = ring(16, Coupling::Algebraic { c: 1.0, alpha: 0.5, d: 1 });
        let cert = algebraic_certificate(&im, &geom, 0.5).unwrap();
        assert!(!cert.pass);
        assert_eq!(cert.checks.get("strictly_diagonally_dominant"), Some(&false));
    }

    #[test]
    fn algebraic_two_dimensional() {
        let geom = LatticeGeometry::periodic(&[12, 12]).unwrap();
        let m = GibbsModel::shared(geom.clone(), SingleSitePotential::cosine(1.0, 0.1, 1.0).unwrap(), Coupling::Algebraic { c: 0.05, alpha: 1.0, d: 2 }).unwrap();
        let im = InteractionMatrix::from_model(&m).unwrap();
        let cert = algebraic_certificate(&im, &geom, 1.0).unwrap();
        assert!(cert.pass, "{:?}", cert.checks);
        assert_eq!(cert.rate, 2.5);
    }

    #[test]
    fn profile_groups_distances() {
        let geom = LatticeGeometry::ring(8).unwrap();
        let im = ring(8, Coupling::NearestNeighbor { epsilon: 0.2 });
        let prof = decay_profile(&im.inverse().unwrap(), &geom.distance_matrix());
        assert_eq!(prof.len(), 5);
        assert!(prof.windows(2).all(|w| w[0].1 > w[1].1));
    }
}
