//! The covariance bound is an equality for ferromagnetic Gaussian chains:
//! `(A⁻¹)_ij` is exactly `cov(x_i, x_j)`.

use covcert::covariance_bounds::{covariance_bound, ObservableSpec};
use covcert::oracles::{gaussian_exact_covariance, GaussianModel};
use covcert::{Coupling, GibbsModel, InteractionMatrix, LatticeGeometry, SingleSitePotential};

fn main() -> covcert::Result<()> {
    let model = GibbsModel::shared(
        LatticeGeometry::ring(8)?,
        SingleSitePotential::gaussian(1.0)?,
        Coupling::NearestNeighbor { epsilon: 0.2 },
    )?;
    let im = InteractionMatrix::from_model(&model)?;
    let exact = gaussian_exact_covariance(&GaussianModel::from_model(&model)?)?;

    println!("{:>3} {:>3} {:>22} {:>22} {:>10}", "i", "j", "bound", "exact", "rel gap");
    let mut worst = 0.0_f64;
    for j in 0..model.n_sites() {
        let f = ObservableSpec::coordinate(8, 0)?;
        let g = ObservableSpec::coordinate(8, j)?;
        let bound = covariance_bound(&im, &f, &g)?.bound;
        let gap = (bound - exact[(0, j)]).abs() / exact[(0, j)];
        worst = worst.max(gap);
        println!("{:>3} {:>3} {:>22.15e} {:>22.15e} {:>10.2e}", 0, j, bound, exact[(0, j)], gap);
    }
    println!("max relative gap: {worst:.2e}");
    Ok(())
}
