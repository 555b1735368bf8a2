//! MCMC over the GP hyperparameter posterior.
//!
//! The target is `log p(θ|y) ∝ log p(y|X, θ) + log p(θ)` with independent
//! Normal priors on every log-space hyperparameter (default N(0, 3²)).
//! Sampling uses the dynamic Hamiltonian Monte Carlo transition in
//! [`hmc`], with dual-averaging step-size adaptation and a diagonal mass
//! matrix estimated during warm-up. Chains are independent: each derives its
//! own RNG stream from `(seed, chain_id)`, so results are identical whether
//! chains run serially or in parallel.

mod hmc;

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, Dataset, Hyperparameters};
use crate::seeding;

const TAG_CHAIN: u64 = 0x636861_696e; // "chain"
const TAG_INIT: u64 = 0x696e_6974; // "init"

/// Independent Normal prior applied to every log-space hyperparameter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mean: f64,
    pub std: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec { mean: 0.0, std: 3.0 }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.std > 0.0) || !self.std.is_finite() || !self.mean.is_finite() {
            return Err(Error::invalid("prior std must be positive and finite"));
        }
        Ok(())
    }

    /// Σ log N(xᵢ; mean, std²) over the components of `flat`.
    pub fn log_density(&self, flat: ArrayView1<f64>) -> f64 {
        let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - self.std.ln();
        flat.iter()
            .map(|&x| {
                let z = (x - self.mean) / self.std;
                ln_norm - 0.5 * z * z
            })
            .sum()
    }

    /// Gradient of [`log_density`](Self::log_density): `−(x − mean)/std²`.
    pub fn log_density_grad(&self, flat: ArrayView1<f64>) -> Array1<f64> {
        let inv_var = 1.0 / (self.std * self.std);
        flat.mapv(|x| -(x - self.mean) * inv_var)
    }
}

/// Sampler configuration. `samples_per_chain` counts warm-up transitions,
/// so the retained draw count is `chains × (samples_per_chain − warmup)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub samples_per_chain: usize,
    pub warmup: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 5,
            samples_per_chain: 500,
            warmup: 200,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.samples_per_chain == 0 {
            return Err(Error::invalid("chains and samples_per_chain must be ≥ 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("target_accept must lie in (0, 1)"));
        }
        if self.max_tree_depth == 0 {
            return Err(Error::invalid("max_tree_depth must be ≥ 1"));
        }
        Ok(())
    }

    /// Retained draws per chain after discarding warm-up.
    pub fn retained_per_chain(&self) -> usize {
        self.samples_per_chain.saturating_sub(self.warmup)
    }
}

/// Per-chain sampler diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub acceptance_rate: f64,
    pub divergences: usize,
    pub step_size: f64,
}

/// Retained post-warm-up draws from all chains, concatenated in chain order.
#[derive(Debug, Clone)]
pub struct PosteriorSamples {
    /// M × (d+1) log-space draws, layout `[log ℓ₁.., log σ_ε]` per row.
    pub draws: Array2<f64>,
    /// Chain of origin per draw.
    pub chain_ids: Vec<usize>,
    /// Mean trajectory acceptance statistic per draw.
    pub accept_stats: Vec<f64>,
    pub diagnostics: Vec<ChainDiagnostics>,
}

impl PosteriorSamples {
    pub fn num_draws(&self) -> usize {
        self.draws.nrows()
    }

    pub fn dim(&self) -> usize {
        self.draws.ncols()
    }

    pub fn hyperparameters(&self, index: usize) -> Hyperparameters {
        Hyperparameters::from_flat(self.draws.row(index))
    }

    /// Line-delimited diagnostics dump: one JSON record per draw with the
    /// chain, within-chain index, θ values, and acceptance statistic.
    pub fn write_draws_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut within: Vec<usize> = Vec::with_capacity(self.num_draws());
        let mut counters = std::collections::BTreeMap::new();
        for &chain in &self.chain_ids {
            let c = counters.entry(chain).or_insert(0usize);
            within.push(*c);
            *c += 1;
        }
        for m in 0..self.num_draws() {
            let record = serde_json::json!({
                "chain": self.chain_ids[m],
                "index": within[m],
                "theta": self.draws.row(m).to_vec(),
                "accept_stat": self.accept_stats[m],
            });
            writeln!(out, "{record}")?;
        }
        Ok(())
    }
}

/// A differentiable unnormalized log density. Implementations return
/// `−∞` (or NaN, treated the same) at invalid positions; the gradient is
/// ignored there.
pub trait LogDensityTarget: Sync {
    fn dim(&self) -> usize;
    fn log_density_grad(&self, position: &ArrayView1<f64>) -> (f64, Array1<f64>);
}

/// The GP hyperparameter posterior as a sampler target. Numerical failures
/// in the marginal likelihood reject the position via `−∞`.
pub struct GpPosterior<'a> {
    data: &'a Dataset,
    prior: PriorSpec,
}

impl<'a> GpPosterior<'a> {
    pub fn new(data: &'a Dataset, prior: PriorSpec) -> Self {
        GpPosterior { data, prior }
    }
}

impl LogDensityTarget for GpPosterior<'_> {
    fn dim(&self) -> usize {
        self.data.input_dim() + 1
    }

    fn log_density_grad(&self, position: &ArrayView1<f64>) -> (f64, Array1<f64>) {
        if !position.iter().all(|v| v.is_finite()) {
            return (f64::NEG_INFINITY, Array1::zeros(position.len()));
        }
        let theta = Hyperparameters::from_flat(*position);
        match (
            gp::log_marginal_likelihood(self.data, &theta),
            gp::lml_gradient(self.data, &theta),
        ) {
            (Ok(lml), Ok(lml_grad)) => {
                let logp = lml + self.prior.log_density(*position);
                let grad = &lml_grad + &self.prior.log_density_grad(*position);
                (logp, grad)
            }
            _ => (f64::NEG_INFINITY, Array1::zeros(position.len())),
        }
    }
}

/// `log p(y|X, θ) + log p(θ)` in log space.
pub fn log_posterior(data: &Dataset, theta: &Hyperparameters, prior: &PriorSpec) -> Result<f64> {
    prior.validate()?;
    let lml = gp::log_marginal_likelihood(data, theta)?;
    Ok(lml + prior.log_density(theta.to_flat().view()))
}

/// Gradient of [`log_posterior`] with respect to the log-space parameters.
pub fn log_posterior_gradient(
    data: &Dataset,
    theta: &Hyperparameters,
    prior: &PriorSpec,
) -> Result<Array1<f64>> {
    prior.validate()?;
    let lml_grad = gp::lml_gradient(data, theta)?;
    Ok(&lml_grad + &prior.log_density_grad(theta.to_flat().view()))
}

/// One prior draw per chain.
pub fn initialize_chains(
    config: &SamplerConfig,
    prior: &PriorSpec,
    input_dim: usize,
    rng: &mut impl Rng,
) -> Vec<Hyperparameters> {
    (0..config.chains)
        .map(|_| {
            let flat = Array1::from_iter((0..input_dim + 1).map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                prior.mean + prior.std * z
            }));
            Hyperparameters::from_flat(flat.view())
        })
        .collect()
}

/// Sample the GP hyperparameter posterior. Deterministic given
/// `config.seed`; chains initialize from the prior and may run in parallel.
pub fn sample_posterior(
    data: &Dataset,
    prior: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorSamples> {
    prior.validate()?;
    config.validate()?;
    let target = GpPosterior::new(data, *prior);

    // Per-chain init streams: redraw from the prior until the posterior is
    // finite at the start point.
    let mut inits = Vec::with_capacity(config.chains);
    for chain in 0..config.chains {
        let mut rng = seeding::stream(config.seed, &[TAG_INIT, chain as u64]);
        let mut found = None;
        for _ in 0..100 {
            let theta = initialize_chains(
                &SamplerConfig {
                    chains: 1,
                    ..config.clone()
                },
                prior,
                data.input_dim(),
                &mut rng,
            )
            .pop()
            .expect("one chain requested");
            let flat = theta.to_flat();
            let (logp, _) = target.log_density_grad(&flat.view());
            if logp.is_finite() {
                found = Some(flat);
                break;
            }
        }
        inits.push(found.ok_or_else(|| {
            Error::invalid("could not find a finite-posterior chain start in 100 prior draws")
        })?);
    }

    sample_target(&target, config, &inits)
}

/// Generic entry point: sample any [`LogDensityTarget`] from the provided
/// per-chain start points. Used directly by the calibration tests.
pub fn sample_target<T: LogDensityTarget>(
    target: &T,
    config: &SamplerConfig,
    inits: &[Array1<f64>],
) -> Result<PosteriorSamples> {
    config.validate()?;
    if inits.len() != config.chains {
        return Err(Error::DimensionMismatch {
            what: "chain inits",
            expected: config.chains,
            got: inits.len(),
        });
    }
    for init in inits {
        if init.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                what: "init dimension",
                expected: target.dim(),
                got: init.len(),
            });
        }
        let (logp, _) = target.log_density_grad(&init.view());
        if !logp.is_finite() {
            return Err(Error::invalid(
                "initial position has non-finite log density",
            ));
        }
    }

    let runs: Vec<hmc::ChainRun> = (0..config.chains)
        .into_par_iter()
        .map(|chain| {
            let rng = seeding::stream(config.seed, &[TAG_CHAIN, chain as u64]);
            hmc::run_chain(target, inits[chain].clone(), config, rng)
        })
        .collect();

    let retained = config.retained_per_chain();
    let dim = target.dim();
    let total = retained * config.chains;
    let mut draws = Array2::<f64>::zeros((total, dim));
    let mut chain_ids = Vec::with_capacity(total);
    let mut accept_stats = Vec::with_capacity(total);
    let mut diagnostics = Vec::with_capacity(config.chains);
    let mut all_diverged = retained > 0;

    for (chain, run) in runs.iter().enumerate() {
        debug_assert_eq!(run.draws.len(), retained);
        for (i, draw) in run.draws.iter().enumerate() {
            let row = chain * retained + i;
            draws.row_mut(row).assign(draw);
            chain_ids.push(chain);
        }
        accept_stats.extend_from_slice(&run.accept_stats);
        diagnostics.push(ChainDiagnostics {
            chain,
            acceptance_rate: run.acceptance_rate,
            divergences: run.divergences,
            step_size: run.step_size,
        });
        if retained > 0 && (run.divergences as f64) <= 0.5 * retained as f64 {
            all_diverged = false;
        }
    }

    if all_diverged {
        return Err(Error::SamplerFailure { diagnostics });
    }
    Ok(PosteriorSamples {
        draws,
        chain_ids,
        accept_stats,
        diagnostics,
    })
}
