use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Observable;
use crate::error::{Error, Result};
use crate::gibbs_model::GibbsModel;

const ACCEPTANCE_LOW: f64 = 0.05;
const ACCEPTANCE_HIGH: f64 = 0.95;

/// Random-scan single-site Metropolis settings. `steps` and `burn_in` count
/// single-site updates; observables are recorded once per sweep of `N` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub chains: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub proposal_std: f64,
    pub seed: u64,
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::InvalidArgument("at least 2 chains are needed for a standard error".into()));
        }
        if self.steps <= self.burn_in {
            return Err(Error::InvalidArgument("steps must exceed burn_in".into()));
        }
        if !(self.proposal_std > 0.0) {
            return Err(Error::InvalidArgument("proposal_std must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainEstimate {
    pub estimate: f64,
    /// Standard deviation of the per-chain estimates over `√chains`.
    pub stderr: f64,
    pub chains: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub per_chain: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrixEstimate {
    pub estimate: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    pub chains: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub warnings: Vec<String>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `i`: `splitmix64(master ⊕ i)`.
pub fn chain_seed(master: u64, i: usize) -> u64 {
    splitmix64(master ^ i as u64)
}

struct Sampler<'a> {
    model: &'a GibbsModel,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl<'a> Sampler<'a> {
    fn new(model: &'a GibbsModel) -> Self {
        let j = model.couplings();
        let n = model.n_sites();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&k| k != i && j[(i, k)] != 0.0).map(|k| (k, j[(i, k)])).collect())
            .collect();
        Self { model, neighbors }
    }

    /// Runs one chain, calling `record` once per sweep after burn-in.
    /// Returns the acceptance rate over all updates.
    fn run(&self, cfg: &SamplerConfig, seed: u64, mut record: impl FnMut(&[f64])) -> f64 {
        let n = self.model.n_sites();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; n];
        let mut accepted = 0usize;
        for step in 0..cfg.steps {
            let i = rng.random_range(0..n);
            let z: f64 = rng.sample(StandardNormal);
            let old = x[i];
            let new = old + cfg.proposal_std * z;
            let field: f64 = self.neighbors[i].iter().map(|&(k, jik)| jik * x[k]).sum();
            let psi = self.model.potential(i);
            let delta = psi.value(new) - psi.value(old) - (new - old) * field;
            if delta <= 0.0 || rng.random::<f64>() < (-delta).exp() {
                x[i] = new;
                accepted += 1;
            }
            if step >= cfg.burn_in && (step + 1 - cfg.burn_in).is_multiple_of(n) {
                record(&x);
            }
        }
        accepted as f64 / cfg.steps as f64
    }
}

fn acceptance_warning(rate: f64) -> Option<String> {
    if (ACCEPTANCE_LOW..=ACCEPTANCE_HIGH).contains(&rate) {
        None
    } else {
        Some(format!("acceptance rate {rate:.4} outside [{ACCEPTANCE_LOW}, {ACCEPTANCE_HIGH}]"))
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Estimates `cov_μ(f, g)` from independent chains.
pub fn mcmc_estimate_covariance(
    model: &GibbsModel,
    f: &dyn Observable,
    g: &dyn Observable,
    cfg: &SamplerConfig,
) -> Result<ChainEstimate> {
    cfg.validate()?;
    let sampler = Sampler::new(model);
    let mut per_chain = Vec::with_capacity(cfg.chains);
    let mut acceptance = 0.0;
    for c in 0..cfg.chains {
        let (mut count, mut sf, mut sg, mut sfg, mut sff, mut sgg) = (0usize, 0.0, 0.0, 0.0, 0.0, 0.0);
        acceptance += sampler.run(cfg, chain_seed(cfg.seed, c), |x| {
            let (a, b) = (f.value(x), g.value(x));
            count += 1;
            sf += a;
            sg += b;
            sfg += a * b;
            sff += a * a;
            sgg += b * b;
        });
        if count < 2 {
            return Err(Error::Sampler("fewer than 2 recorded sweeps per chain".into()));
        }
        let k = count as f64;
        let (mf, mg) = (sf / k, sg / k);
        if sff / k - mf * mf <= 0.0 || sgg / k - mg * mg <= 0.0 {
            return Err(Error::Sampler(format!("zero variance in chain {c}")));
        }
        per_chain.push(sfg / k - mf * mg);
    }
    let acceptance_rate = acceptance / cfg.chains as f64;
    let (estimate, stderr) = mean_and_stderr(&per_chain);
    if !(stderr > 0.0) {
        return Err(Error::Sampler("zero variance across chains".into()));
    }
    Ok(ChainEstimate {
        estimate,
        stderr,
        chains: cfg.chains,
        steps: cfg.steps,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        acceptance_rate,
        per_chain,
        warnings: acceptance_warning(acceptance_rate).into_iter().collect(),
    })
}

/// Estimates the full coordinate covariance matrix `cov(x_i, x_j)` from the
/// same chains.
pub fn mcmc_covariance_matrix(model: &GibbsModel, cfg: &SamplerConfig) -> Result<CovarianceMatrixEstimate> {
    cfg.validate()?;
    let n = model.n_sites();
    let sampler = Sampler::new(model);
    let mut chains = Vec::with_capacity(cfg.chains);
    let mut acceptance = 0.0;
    for c in 0..cfg.chains {
        let mut count = 0usize;
        let mut sum = vec![0.0; n];
        let mut outer = DMatrix::<f64>::zeros(n, n);
        acceptance += sampler.run(cfg, chain_seed(cfg.seed, c), |x| {
            count += 1;
            for i in 0..n {
                sum[i] += x[i];
                for j in i..n {
                    outer[(i, j)] += x[i] * x[j];
                }
            }
        });
        if count < 2 {
            return Err(Error::Sampler("fewer than 2 recorded sweeps per chain".into()));
        }
        let k = count as f64;
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = outer[(i, j)] / k - (sum[i] / k) * (sum[j] / k);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
            if cov[(i, i)] <= 0.0 {
                return Err(Error::Sampler(format!("zero variance at site {i} in chain {c}")));
            }
        }
        chains.push(cov);
    }
    let mut estimate = DMatrix::<f64>::zeros(n, n);
    let mut stderr = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let vals: Vec<f64> = chains.iter().map(|m| m[(i, j)]).collect();
            let (m, s) = mean_and_stderr(&vals);
            if !(s > 0.0) {
                return Err(Error::Sampler(format!("zero variance across chains for pair ({i}, {j})")));
            }
            estimate[(i, j)] = m;
            stderr[(i, j)] = s;
        }
    }
    let acceptance_rate = acceptance / cfg.chains as f64;
    Ok(CovarianceMatrixEstimate {
        estimate,
        stderr,
        chains: cfg.chains,
        steps: cfg.steps,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        acceptance_rate,
        warnings: acceptance_warning(acceptance_rate).into_iter().collect(),
    })
}
