//! The inverse of a strictly diagonally dominant Z-matrix as a sum of
//! nonnegative random-walk terms, with the geometric tail bound.

use covcert::interaction_matrix::{neumann_contraction_constant, neumann_partial_sums};
use covcert::InteractionMatrix;
use nalgebra::DMatrix;

fn main() -> covcert::Result<()> {
    let n = 12;
    let kappa = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.3 / ((i as f64 - j as f64).powi(2) + 1.0) });
    let rho = vec![1.0; n];
    let im = InteractionMatrix::build(&rho, &kappa)?;
    let c = neumann_contraction_constant(&im)?;
    let inv = im.inverse()?;
    let expansion = neumann_partial_sums(&im, 64)?;
    println!("contraction c = {c:.4}, min entry of A^-1 = {:.3e}", inv.min());
    println!("{:>3} {:>14} {:>14}", "K", "max |S_K - A^-1|", "c^K/(1-c)");
    for k in [1, 2, 4, 8, 16, 32, 64] {
        let err = (&inv - &expansion.partial_sums[k - 1]).abs().max();
        println!("{k:>3} {err:>14.3e} {:>14.3e}", c.powi(k as i32) / (1.0 - c));
    }
    Ok(())
}
