//! Scans the coupling strength across the acceptance threshold `Δ e⁻¹/4` of
//! the nearest-neighbor certificate on the 4×4 torus, then checks the
//! certified bound against Metropolis estimates just below the threshold.

use covcert::covariance_bounds::nearest_neighbor_certificate;
use covcert::oracles::{mcmc_covariance_matrix, SamplerConfig};
use covcert::{Coupling, GibbsModel, LatticeGeometry, SingleSitePotential};

fn main() -> covcert::Result<()> {
    let geom = LatticeGeometry::periodic(&[4, 4])?;
    let pot = SingleSitePotential::gaussian(1.0)?;
    println!("{:>6} {:>9} {:>10} {:>10}", "eps", "accepted", "threshold", "prefactor");
    for k in 1..=12 {
        let eps = 0.01 * k as f64;
        let model = GibbsModel::shared(geom.clone(), pot.clone(), Coupling::NearestNeighbor { epsilon: eps })?;
        let cert = nearest_neighbor_certificate(&model)?;
        let pre = cert.prefactor.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into());
        println!("{eps:>6.2} {:>9} {:>10.6} {pre:>10}", cert.accepted, cert.threshold);
    }

    let model = GibbsModel::shared(geom, pot, Coupling::NearestNeighbor { epsilon: 0.09 })?;
    let cert = nearest_neighbor_certificate(&model)?;
    let cfg = SamplerConfig { chains: 8, steps: 100_000, burn_in: 10_000, proposal_std: 1.5, seed: 11 };
    let est = mcmc_covariance_matrix(&model, &cfg)?;
    println!("eps = 0.09, acceptance rate {:.3}", est.acceptance_rate);
    println!("{:>3} {:>3} {:>10} {:>10} {:>10}", "i", "j", "bound", "estimate", "stderr");
    for b in cert.pairs.iter().filter(|b| b.pair.is_some_and(|(i, _)| i == 0)) {
        let (i, j) = b.pair.expect("filtered");
        println!("{i:>3} {j:>3} {:>10.5} {:>10.5} {:>10.5}", b.bound, est.estimate[(i, j)], est.stderr[(i, j)]);
    }
    Ok(())
}
