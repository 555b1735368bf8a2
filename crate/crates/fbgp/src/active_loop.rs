//! The sequential active-learning experiment.
//!
//! One run: label a 3-point maximin Latin-hypercube design, then per
//! iteration (1) rescale inputs to the unit cube and standardize targets,
//! (2) sample the hyperparameter posterior, (3) pick the KDE-densest draw as
//! the working mode θ*, (4) record the training NLML at θ* and the RMSE of
//! the θ* predictive mean against the noise-free simulator mean on a fixed
//! held-out LHS set, (5) rebuild the pool grid, drop already-queried points,
//! score it with the configured strategy, and label the argmax.
//!
//! Every random decision draws from a stream derived from the run seed and a
//! purpose tag, so a run is bit-reproducible regardless of scheduling.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, Criterion};
use crate::error::{Error, Result};
use crate::gp::{self, Dataset, Hyperparameters};
use crate::mcmc::{self, PosteriorSamples, PriorSpec, SamplerConfig};
use crate::seeding;
use crate::simulators::{self, SimulatorSpec};

const TAG_INIT_DESIGN: u64 = 1;
const TAG_TEST_SET: u64 = 2;
const TAG_LABELS: u64 = 3;
const TAG_SAMPLER: u64 = 4;
const TAG_POOL: u64 = 5;
const TAG_TIE: u64 = 6;
const TAG_RANDOM: u64 = 7;

/// Pool points this close (unit-cube Euclidean) to a training point are
/// treated as already queried.
const DEDUP_TOLERANCE: f64 = 1e-12;

/// How the next query is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Criterion(Criterion),
    Random,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Criterion(c) => c.name(),
            Strategy::Random => "random",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("random") {
            Ok(Strategy::Random)
        } else {
            s.parse::<Criterion>().map(Strategy::Criterion)
        }
    }
}

/// Configuration of one active-learning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub simulator: String,
    pub strategy: Strategy,
    pub initial_points: usize,
    pub iterations: usize,
    pub sampler: SamplerConfig,
    pub prior: PriorSpec,
    pub pool_per_axis: usize,
    pub pool_cap: usize,
    pub lhs_candidates: usize,
    pub test_points: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(simulator: impl Into<String>, strategy: Strategy) -> Self {
        ExperimentConfig {
            simulator: simulator.into(),
            strategy,
            initial_points: 3,
            iterations: 1,
            sampler: SamplerConfig::default(),
            prior: PriorSpec::default(),
            pool_per_axis: 100,
            pool_cap: 10_000,
            lhs_candidates: 100,
            test_points: 1000,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.initial_points == 0 {
            return Err(Error::invalid("iterations and initial_points must be ≥ 1"));
        }
        if self.test_points == 0 {
            return Err(Error::invalid("test_points must be ≥ 1"));
        }
        self.sampler.validate()?;
        self.prior.validate()
    }
}

/// One iteration of the learning curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Training-set size the model was fit on this iteration.
    pub train_size: usize,
    /// Negative log marginal likelihood of the training data at θ*.
    pub nlml: f64,
    /// RMSE of the θ* predictive mean vs the noise-free simulator mean on
    /// the held-out set, natural output units.
    pub rmse: f64,
    /// θ* in flat log-space layout.
    pub theta: Vec<f64>,
    /// Queried point, natural units.
    pub queried: Vec<f64>,
    /// Wall time of the iteration. Not part of persisted payloads.
    pub wall_time_secs: f64,
}

/// Per-iteration records of one run; `incomplete` marks a run aborted by a
/// repeated sampler failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningCurve {
    pub records: Vec<IterationRecord>,
    pub incomplete: bool,
}

impl LearningCurve {
    /// The deterministic portion of the curve — everything except wall
    /// times. Persisted records store exactly this value, so reruns with the
    /// same seed are byte-identical.
    pub fn payload(&self) -> serde_json::Value {
        serde_json::json!({
            "incomplete": self.incomplete,
            "records": self.records.iter().map(|r| serde_json::json!({
                "train_size": r.train_size,
                "nlml": r.nlml,
                "rmse": r.rmse,
                "theta": r.theta,
                "queried": r.queried,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Input rescaling (domain → unit cube) and output standardization for the
/// current training targets.
#[derive(Debug, Clone)]
pub struct StandardizationState {
    input_lo: Vec<f64>,
    input_span: Vec<f64>,
    output_mean: f64,
    output_std: f64,
}

impl StandardizationState {
    /// Fit to the simulator domain and current targets; population std with
    /// a 1e-12 floor.
    pub fn fit(domain: &[(f64, f64)], targets: &Array1<f64>) -> Self {
        let n = targets.len() as f64;
        let mean = targets.sum() / n;
        let var = targets.iter().map(|&y| (y - mean).powi(2)).sum::<f64>() / n;
        StandardizationState {
            input_lo: domain.iter().map(|&(lo, _)| lo).collect(),
            input_span: domain.iter().map(|&(lo, hi)| hi - lo).collect(),
            output_mean: mean,
            output_std: var.sqrt().max(1e-12),
        }
    }

    pub fn output_std(&self) -> f64 {
        self.output_std
    }

    /// Natural-units point → unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.input_lo.iter().zip(self.input_span.iter()))
            .map(|(&v, (&lo, &span))| (v - lo) / span)
            .collect()
    }

    /// Unit-cube point → natural units.
    pub fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.input_lo.iter().zip(self.input_span.iter()))
            .map(|(&v, (&lo, &span))| lo + v * span)
            .collect()
    }

    pub fn standardize_targets(&self, y: &Array1<f64>) -> Array1<f64> {
        y.mapv(|v| (v - self.output_mean) / self.output_std)
    }

    pub fn unstandardize_mean(&self, y_std: &Array1<f64>) -> Array1<f64> {
        y_std.mapv(|v| self.output_mean + self.output_std * v)
    }

    fn matrix_to_unit(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.input_lo[j]) / self.input_span[j];
            }
        }
        out
    }
}

/// KDE-densest posterior draw: Gaussian kernel, per-dimension Scott
/// bandwidth `std_k · M^(−1/(D+4))` floored at 1e-6.
pub fn best_mode(samples: &PosteriorSamples) -> Result<Hyperparameters> {
    let m = samples.num_draws();
    if m < 2 {
        return Err(Error::invalid("best_mode needs at least two draws"));
    }
    let d = samples.dim();
    let mf = m as f64;
    let scott = mf.powf(-1.0 / (d as f64 + 4.0));
    let mut bandwidth = vec![0.0; d];
    for k in 0..d {
        let col = samples.draws.column(k);
        let mean = col.sum() / mf;
        let var = col.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / mf;
        bandwidth[k] = (var.sqrt() * scott).max(1e-6);
    }

    let mut best_index = 0;
    let mut best_density = f64::NEG_INFINITY;
    for i in 0..m {
        let mut density = 0.0;
        for j in 0..m {
            let mut sq = 0.0;
            for k in 0..d {
                let z = (samples.draws[[i, k]] - samples.draws[[j, k]]) / bandwidth[k];
                sq += z * z;
            }
            density += (-0.5 * sq).exp();
        }
        if density > best_density {
            best_density = density;
            best_index = i;
        }
    }
    Ok(samples.hyperparameters(best_index))
}

/// I.i.d. uniform scores: argmax is a uniform pool draw.
pub fn random_baseline_scores(pool: &Array2<f64>, rng: &mut impl Rng) -> Array1<f64> {
    Array1::from_iter((0..pool.nrows()).map(|_| rng.random::<f64>()))
}

/// Run one experiment against a registry simulator name.
pub fn run_experiment(config: &ExperimentConfig) -> Result<LearningCurve> {
    let sim = simulators::by_name(&config.simulator)?;
    run_experiment_on(&sim, config)
}

/// Run one experiment against an explicit simulator (e.g. a table file).
pub fn run_experiment_on(sim: &SimulatorSpec, config: &ExperimentConfig) -> Result<LearningCurve> {
    config.validate()?;
    let d = sim.dim();
    let domain = sim.domain();

    let mut label_rng = seeding::stream(config.seed, &[TAG_LABELS]);

    // Initial design in the unit cube, mapped to natural units for labeling.
    let unit_to_nat = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(domain.iter())
            .map(|(&v, &(lo, hi))| lo + v * (hi - lo))
            .collect()
    };
    let mut init_rng = seeding::stream(config.seed, &[TAG_INIT_DESIGN]);
    let init_design = simulators::maximin_lhs(config.initial_points, d, &mut init_rng, config.lhs_candidates);
    let mut train_nat: Vec<Vec<f64>> = Vec::new();
    let mut targets_nat: Vec<f64> = Vec::new();
    for row in 0..init_design.nrows() {
        let x = unit_to_nat(&init_design.row(row).to_vec());
        let y = sim.evaluate(&x, &mut label_rng)?;
        train_nat.push(x);
        targets_nat.push(y);
    }

    // Fixed held-out test set: plain seeded LHS, noise-free targets.
    let mut test_rng = seeding::stream(config.seed, &[TAG_TEST_SET]);
    let test_design = simulators::maximin_lhs(config.test_points, d, &mut test_rng, 1);
    let mut test_truth = Array1::zeros(config.test_points);
    let mut test_nat = Array2::zeros((config.test_points, d));
    for row in 0..config.test_points {
        let x = unit_to_nat(&test_design.row(row).to_vec());
        test_truth[row] = sim.mean_oracle(&x)?;
        for j in 0..d {
            test_nat[[row, j]] = x[j];
        }
    }

    let mut records = Vec::with_capacity(config.iterations);
    let mut incomplete = false;

    for iter in 0..config.iterations as u64 {
        let started = std::time::Instant::now();
        let n = train_nat.len();

        let targets = Array1::from_vec(targets_nat.clone());
        let state = StandardizationState::fit(domain, &targets);
        let mut inputs_unit = Array2::zeros((n, d));
        for (i, x) in train_nat.iter().enumerate() {
            let u = state.to_unit(x);
            for j in 0..d {
                inputs_unit[[i, j]] = u[j];
            }
        }
        let data = Dataset::new(inputs_unit.clone(), state.standardize_targets(&targets))?;

        // Posterior sampling; one retry with a fresh derived seed.
        let mut samples: Option<PosteriorSamples> = None;
        for attempt in 0..2u64 {
            let sampler = SamplerConfig {
                seed: seeding::derive_seed(config.seed, &[TAG_SAMPLER, iter, attempt]),
                ..config.sampler.clone()
            };
            match mcmc::sample_posterior(&data, &config.prior, &sampler) {
                Ok(s) => {
                    samples = Some(s);
                    break;
                }
                Err(_) if attempt == 0 => continue,
                Err(_) => {}
            }
        }
        let Some(samples) = samples else {
            incomplete = true;
            break;
        };

        let theta_star = best_mode(&samples)?;
        let nlml = gp::nlml_of(&data, &theta_star)?;

        // RMSE in natural units on the fixed test set.
        let test_unit = state.matrix_to_unit(&test_nat);
        let pred = gp::posterior_predict(&data, &theta_star, &test_unit)?;
        let pred_nat = state.unstandardize_mean(&pred.latent_mean);
        let rmse = (pred_nat
            .iter()
            .zip(test_truth.iter())
            .map(|(&p, &t)| (p - t).powi(2))
            .sum::<f64>()
            / config.test_points as f64)
            .sqrt();

        // Pool: fresh grid, minus already-queried points (unit-cube distance).
        let mut pool_rng = seeding::stream(config.seed, &[TAG_POOL, iter]);
        let pool_nat_full = sim.grid_pool(config.pool_per_axis, config.pool_cap, &mut pool_rng)?;
        let pool_unit_full = state.matrix_to_unit(&pool_nat_full);
        let mut keep = Vec::with_capacity(pool_unit_full.nrows());
        for row in 0..pool_unit_full.nrows() {
            let mut queried = false;
            for i in 0..n {
                let mut d2 = 0.0;
                for j in 0..d {
                    let diff = pool_unit_full[[row, j]] - inputs_unit[[i, j]];
                    d2 += diff * diff;
                }
                if d2.sqrt() <= DEDUP_TOLERANCE {
                    queried = true;
                    break;
                }
            }
            if !queried {
                keep.push(row);
            }
        }
        if keep.is_empty() {
            return Err(Error::invalid("pool exhausted: every point already queried"));
        }
        let mut pool_unit = Array2::zeros((keep.len(), d));
        let mut pool_nat = Array2::zeros((keep.len(), d));
        for (new_row, &old_row) in keep.iter().enumerate() {
            pool_unit.row_mut(new_row).assign(&pool_unit_full.row(old_row));
            pool_nat.row_mut(new_row).assign(&pool_nat_full.row(old_row));
        }

        let scores = match config.strategy {
            Strategy::Criterion(Criterion::Alm) => {
                let pred = gp::posterior_predict(&data, &theta_star, &pool_unit)?;
                acquisition::score_alm(&pred)?.scores
            }
            Strategy::Criterion(criterion) => {
                let ens = acquisition::predict_ensemble(&data, &samples, &pool_unit)?;
                match criterion {
                    Criterion::BAlm => acquisition::score_b_alm(&ens)?.scores,
                    Criterion::Bald => acquisition::score_bald(&ens)?.scores,
                    Criterion::BQbc => acquisition::score_b_qbc(&ens)?.scores,
                    Criterion::QbMgp => acquisition::score_qb_mgp(&ens)?.scores,
                    Criterion::Alm => unreachable!("handled above"),
                }
            }
            Strategy::Random => {
                let mut rng = seeding::stream(config.seed, &[TAG_RANDOM, iter]);
                random_baseline_scores(&pool_unit, &mut rng)
            }
        };

        let mut tie_rng = seeding::stream(config.seed, &[TAG_TIE, iter]);
        let chosen = acquisition::select_query(&scores, &pool_unit, &mut tie_rng)?;
        let x_next = pool_nat.row(chosen).to_vec();
        let y_next = sim.evaluate(&x_next, &mut label_rng)?;

        records.push(IterationRecord {
            train_size: n,
            nlml,
            rmse,
            theta: theta_star.to_flat().to_vec(),
            queried: x_next.clone(),
            wall_time_secs: started.elapsed().as_secs_f64(),
        });
        train_nat.push(x_next);
        targets_nat.push(y_next);
    }

    Ok(LearningCurve {
        records,
        incomplete,
    })
}
