//! Certified covariance and correlation-decay bounds for lattice Gibbs
//! measures with continuous spins.
//!
//! The central object is the interaction matrix `A` built from single-site
//! Poincaré constants `ρ_i` and uniform bounds `κ_ij` on the mixed second
//! derivatives of the Hamiltonian. For smooth `f`, `g`
//!
//! ```text
//! |cov(f, g)| ≤ Σ_ij (A⁻¹)_ij ‖∇_i f‖ ‖∇_j g‖
//! ```
//!
//! whenever `A` is positive definite. The crate builds `A`, checks its
//! hypotheses, evaluates the bound and its exponential and algebraic decay
//! consequences, and validates everything against independent oracles: exact
//! Gaussian covariances, a grid solver for the elliptic potential behind the
//! covariance representation, and Metropolis sampling.
//!
//! See the `examples/` directory for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance_bounds;
pub mod decay_certificates;
pub mod error;
pub mod experiment;
pub mod gibbs_model;
pub mod interaction_matrix;
pub mod lattice;
pub mod linalg;
pub mod oracles;

pub use error::{Error, Result};
pub use gibbs_model::{Coupling, GibbsModel, Perturbation, SingleSitePotential};
pub use interaction_matrix::InteractionMatrix;
pub use lattice::LatticeGeometry;
