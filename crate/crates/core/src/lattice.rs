//! Finite site sets and the metrics used by the decay estimates.
//!
//! Two flavors exist: a periodic `d`-dimensional grid (a discrete torus) with
//! its graph distance, and an explicit metric table supplied by the caller.
//! Sites on a periodic grid are numbered row-major, the last coordinate
//! running fastest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many sites the triangle inequality is checked on sampled triples.
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 64;
const SAMPLED_TRIPLES: usize = 200_000;
const METRIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeometryKind {
    PeriodicGrid { side_lengths: Vec<usize> },
    Explicit { metric: Vec<Vec<f64>> },
}

/// Finite index set of sites with a metric. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    kind: GeometryKind,
    n_sites: usize,
}

impl LatticeGeometry {
    /// Periodic grid with the given side lengths.
    pub fn periodic(side_lengths: &[usize]) -> Result<Self> {
        if side_lengths.is_empty() {
            return Err(Error::InvalidArgument("periodic grid needs at least one dimension".into()));
        }
        if side_lengths.contains(&0) {
            return Err(Error::InvalidArgument("side lengths must be positive".into()));
        }
        let n_sites = side_lengths.iter().product();
        Ok(Self {
            kind: GeometryKind::PeriodicGrid { side_lengths: side_lengths.to_vec() },
            n_sites,
        })
    }

    /// One-dimensional ring of `len` sites.
    pub fn ring(len: usize) -> Result<Self> {
        Self::periodic(&[len])
    }

    /// Explicit metric table. Rejects tables that are not a metric.
    pub fn explicit(metric: Vec<Vec<f64>>) -> Result<Self> {
        validate_metric(&metric)?;
        let n_sites = metric.len();
        Ok(Self { kind: GeometryKind::Explicit { metric }, n_sites })
    }

    pub fn kind(&self) -> &GeometryKind {
        &self.kind
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Lattice dimension; an explicit table counts as dimension 1 with no coordinates.
    pub fn dimension(&self) -> usize {
        match &self.kind {
            GeometryKind::PeriodicGrid { side_lengths } => side_lengths.len(),
            GeometryKind::Explicit { .. } => 1,
        }
    }

    pub fn side_lengths(&self) -> Option<&[usize]> {
        match &self.kind {
            GeometryKind::PeriodicGrid { side_lengths } => Some(side_lengths),
            GeometryKind::Explicit { .. } => None,
        }
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.n_sites {
            Err(Error::IndexOutOfRange { index: i, len: self.n_sites })
        } else {
            Ok(())
        }
    }

    /// Grid coordinates of site `i`.
    pub fn coords(&self, i: usize) -> Result<Vec<usize>> {
        self.check(i)?;
        let sides = self.side_lengths().ok_or(Error::NoCoordinates)?;
        let mut out = vec![0; sides.len()];
        let mut rem = i;
        for (k, &l) in sides.iter().enumerate().rev() {
            out[k] = rem % l;
            rem /= l;
        }
        Ok(out)
    }

    /// Site index of the given grid coordinates (taken modulo the side lengths).
    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        let sides = self.side_lengths().ok_or(Error::NoCoordinates)?;
        if coords.len() != sides.len() {
            return Err(Error::DimensionMismatch { expected: sides.len(), got: coords.len() });
        }
        Ok(coords.iter().zip(sides).fold(0, |acc, (&c, &l)| acc * l + c % l))
    }

    /// Torus-minimal displacement magnitudes per coordinate.
    fn torus_offsets(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        let sides = self.side_lengths().ok_or(Error::NoCoordinates)?;
        let (a, b) = (self.coords(i)?, self.coords(j)?);
        Ok(sides
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(&l, (&x, &y))| {
                let d = x.abs_diff(y);
                d.min(l - d)
            })
            .collect())
    }

    /// The metric δ(i, j): ℓ¹ torus distance on grids, the table entry otherwise.
    pub fn graph_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        match &self.kind {
            GeometryKind::PeriodicGrid { .. } => {
                Ok(self.torus_offsets(i, j)?.iter().sum::<usize>() as f64)
            }
            GeometryKind::Explicit { metric } => Ok(metric[i][j]),
        }
    }

    /// Euclidean length of the torus-minimal displacement between two grid sites.
    pub fn euclidean_site_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        let offsets = self.torus_offsets(i, j)?;
        Ok(offsets.iter().map(|&d| (d * d) as f64).sum::<f64>().sqrt())
    }

    /// Full N×N table of δ.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_sites)
            .map(|i| (0..self.n_sites).map(|j| self.graph_distance(i, j).unwrap()).collect())
            .collect()
    }
}

/// Checks symmetry, zero diagonal, positivity off the diagonal and the
/// triangle inequality (exhaustive up to 64 sites, sampled above).
pub fn validate_metric(metric: &[Vec<f64>]) -> Result<()> {
    let n = metric.len();
    if n == 0 {
        return Err(Error::InvalidMetric("empty metric table".into()));
    }
    for (i, row) in metric.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMetric(format!("row {i} has {} entries, expected {n}", row.len())));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidMetric(format!("entry ({i},{j}) is not finite")));
            }
            if i == j && v != 0.0 {
                return Err(Error::InvalidMetric(format!("diagonal entry ({i},{i}) is {v}, expected 0")));
            }
            if i != j && v <= 0.0 {
                return Err(Error::InvalidMetric(format!("off-diagonal entry ({i},{j}) = {v} is not positive")));
            }
            if (v - metric[j][i]).abs() > METRIC_TOL * v.abs().max(1.0) {
                return Err(Error::InvalidMetric(format!("asymmetric at ({i},{j})")));
            }
        }
    }
    let violates = |i: usize, s: usize, j: usize| {
        metric[i][j] > metric[i][s] + metric[s][j] + METRIC_TOL * metric[i][j].max(1.0)
    };
    if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
        for i in 0..n {
            for j in 0..n {
                for s in 0..n {
                    if violates(i, s, j) {
                        return Err(triangle_error(i, s, j));
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961_6e67_6c65);
        for _ in 0..SAMPLED_TRIPLES {
            let (i, s, j) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            if violates(i, s, j) {
                return Err(triangle_error(i, s, j));
            }
        }
    }
    Ok(())
}

fn triangle_error(i: usize, s: usize, j: usize) -> Error {
    Error::InvalidMetric(format!("triangle inequality fails for δ({i},{j}) > δ({i},{s}) + δ({s},{j})"))
}
