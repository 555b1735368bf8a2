//! Acquisition criteria over an ensemble of posterior-sampled GPs.
//!
//! Each retained posterior draw θ_j defines a GP predictive `N(μ_j(x), σ_j²(x))`
//! at every pool point x; averaging over draws gives a mixture of M Gaussians
//! with moments
//!
//! ```text
//! μ_mix(x)  = (1/M) Σ_j μ_j(x)
//! σ²_mix(x) = (1/M) Σ_j σ_j²(x) + (1/M) Σ_j (μ_j(x) − μ_mix(x))²
//! ```
//!
//! The five criteria all reduce to functions of these quantities:
//!
//! - ALM: observation variance of a single GP (argmax-equivalent to entropy).
//! - B-ALM: mean observation variance over draws.
//! - B-QBC: variance of the mean predictions over draws.
//! - QB-MGP: σ²_mix = B-ALM + B-QBC exactly.
//! - BALD: entropy of the moment-matched mixture minus the mean component
//!   entropy, `½ln σ²_mix − (1/M) Σ_j ½ln σ_j²`.
//!
//! Component variances are observation variances (noise included), so all
//! entropies are over y rather than the latent f.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, Dataset, PredictiveDistribution};
use crate::mcmc::PosteriorSamples;

/// Floor applied to variances before logarithms.
const VARIANCE_FLOOR: f64 = 1e-12;

/// The five acquisition criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Alm,
    BAlm,
    Bald,
    BQbc,
    QbMgp,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Alm,
        Criterion::BAlm,
        Criterion::Bald,
        Criterion::BQbc,
        Criterion::QbMgp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Alm => "alm",
            Criterion::BAlm => "b-alm",
            Criterion::Bald => "bald",
            Criterion::BQbc => "b-qbc",
            Criterion::QbMgp => "qb-mgp",
        }
    }

    /// True for the criteria that need the full posterior ensemble rather
    /// than a single hyperparameter setting.
    pub fn needs_ensemble(&self) -> bool {
        !matches!(self, Criterion::Alm)
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alm" => Ok(Criterion::Alm),
            "b-alm" | "balm" => Ok(Criterion::BAlm),
            "bald" => Ok(Criterion::Bald),
            "b-qbc" | "bqbc" => Ok(Criterion::BQbc),
            "qb-mgp" | "qbmgp" => Ok(Criterion::QbMgp),
            other => Err(Error::invalid(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Per-draw predictive moments at every pool point (rows = draws).
#[derive(Debug, Clone)]
pub struct EnsemblePrediction {
    pub means: Array2<f64>,
    pub latent_variances: Array2<f64>,
    pub observation_variances: Array2<f64>,
    /// Draws dropped for numerical failure (≤ 10% tolerated).
    pub dropped_draws: usize,
}

impl EnsemblePrediction {
    pub fn num_draws(&self) -> usize {
        self.means.nrows()
    }

    pub fn pool_size(&self) -> usize {
        self.means.ncols()
    }
}

/// Moments of the mixture-of-Gaussians predictive.
#[derive(Debug, Clone)]
pub struct MixtureMoments {
    pub mixture_mean: Array1<f64>,
    pub mixture_variance: Array1<f64>,
}

/// Scores for one criterion over a pool.
#[derive(Debug, Clone)]
pub struct AcquisitionScores {
    pub criterion: Criterion,
    pub scores: Array1<f64>,
}

impl AcquisitionScores {
    pub fn new(criterion: Criterion, scores: Array1<f64>) -> Result<Self> {
        if !scores.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("acquisition scores"));
        }
        Ok(AcquisitionScores { criterion, scores })
    }
}

/// Predict with every retained draw at every pool point. Draws whose
/// Cholesky fails are dropped and counted; more than 10% dropped is an error.
pub fn predict_ensemble(
    data: &Dataset,
    samples: &PosteriorSamples,
    pool: &Array2<f64>,
) -> Result<EnsemblePrediction> {
    if pool.nrows() == 0 {
        return Err(Error::invalid("pool must be non-empty"));
    }
    let m = samples.num_draws();
    if m == 0 {
        return Err(Error::invalid("posterior sample set is empty"));
    }
    let rows: Vec<Option<PredictiveDistribution>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let theta = samples.hyperparameters(j);
            gp::posterior_predict(data, &theta, pool).ok()
        })
        .collect();

    let kept: Vec<&PredictiveDistribution> = rows.iter().flatten().collect();
    let dropped = m - kept.len();
    if 10 * dropped > m {
        return Err(Error::Numerical {
            what: format!("{dropped} of {m} ensemble draws failed prediction"),
            attempted_jitter: f64::NAN,
        });
    }
    let p = pool.nrows();
    let mut means = Array2::zeros((kept.len(), p));
    let mut latent = Array2::zeros((kept.len(), p));
    let mut obs = Array2::zeros((kept.len(), p));
    for (row, pred) in kept.iter().enumerate() {
        means.row_mut(row).assign(&pred.latent_mean);
        latent.row_mut(row).assign(&pred.latent_variance);
        obs.row_mut(row).assign(&pred.observation_variance);
    }
    Ok(EnsemblePrediction {
        means,
        latent_variances: latent,
        observation_variances: obs,
        dropped_draws: dropped,
    })
}

/// Mixture mean and total variance per pool point.
pub fn mixture_moments(ens: &EnsemblePrediction) -> MixtureMoments {
    let m = ens.num_draws() as f64;
    let p = ens.pool_size();
    let mut mixture_mean = Array1::zeros(p);
    let mut mixture_variance = Array1::zeros(p);
    for i in 0..p {
        let mean = ens.means.column(i).sum() / m;
        let within = ens.observation_variances.column(i).sum() / m;
        let between = ens
            .means
            .column(i)
            .iter()
            .map(|&mu| (mu - mean).powi(2))
            .sum::<f64>()
            / m;
        mixture_mean[i] = mean;
        mixture_variance[i] = within + between;
    }
    MixtureMoments {
        mixture_mean,
        mixture_variance,
    }
}

/// Predictive-entropy criterion for a single GP: the observation variance.
pub fn score_alm(pred: &PredictiveDistribution) -> Result<AcquisitionScores> {
    AcquisitionScores::new(Criterion::Alm, pred.observation_variance.clone())
}

/// Posterior-averaged predictive variance.
pub fn score_b_alm(ens: &EnsemblePrediction) -> Result<AcquisitionScores> {
    let m = ens.num_draws() as f64;
    let scores = ens
        .observation_variances
        .sum_axis(ndarray::Axis(0))
        .mapv(|s| s / m);
    AcquisitionScores::new(Criterion::BAlm, scores)
}

/// Committee disagreement: variance of the per-draw means per pool point.
pub fn score_b_qbc(ens: &EnsemblePrediction) -> Result<AcquisitionScores> {
    let m = ens.num_draws() as f64;
    let p = ens.pool_size();
    let mut scores = Array1::zeros(p);
    for i in 0..p {
        let mean = ens.means.column(i).sum() / m;
        scores[i] = ens
            .means
            .column(i)
            .iter()
            .map(|&mu| (mu - mean).powi(2))
            .sum::<f64>()
            / m;
    }
    AcquisitionScores::new(Criterion::BQbc, scores)
}

/// Mixture total variance: exactly B-ALM + B-QBC.
pub fn score_qb_mgp(ens: &EnsemblePrediction) -> Result<AcquisitionScores> {
    let b_alm = score_b_alm(ens)?;
    let b_qbc = score_b_qbc(ens)?;
    AcquisitionScores::new(Criterion::QbMgp, &b_alm.scores + &b_qbc.scores)
}

/// Mutual information between hyperparameters and the next observation,
/// with the mixture entropy moment-matched to a Gaussian.
pub fn score_bald(ens: &EnsemblePrediction) -> Result<AcquisitionScores> {
    let m = ens.num_draws() as f64;
    let moments = mixture_moments(ens);
    let p = ens.pool_size();
    let mut scores = Array1::zeros(p);
    for i in 0..p {
        let term1 = 0.5 * moments.mixture_variance[i].max(VARIANCE_FLOOR).ln();
        let term2 = ens
            .observation_variances
            .column(i)
            .iter()
            .map(|&v| 0.5 * v.max(VARIANCE_FLOOR).ln())
            .sum::<f64>()
            / m;
        scores[i] = term1 - term2;
    }
    AcquisitionScores::new(Criterion::Bald, scores)
}

/// Argmax over pool scores; exact ties are broken uniformly with `rng`.
pub fn select_query(scores: &Array1<f64>, pool: &Array2<f64>, rng: &mut impl Rng) -> Result<usize> {
    if scores.len() != pool.nrows() {
        return Err(Error::DimensionMismatch {
            what: "scores vs pool",
            expected: pool.nrows(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::invalid("cannot select from an empty pool"));
    }
    if !scores.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("acquisition scores"));
    }
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .map(|(i, _)| i)
        .collect();
    Ok(tied[rng.random_range(0..tied.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Hyperparameters;
    use crate::mcmc::{sample_posterior, PriorSpec, SamplerConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_component_ensemble() -> EnsemblePrediction {
        // N(−1, 1) and N(1, 1) at a single pool point.
        EnsemblePrediction {
            means: array![[-1.0], [1.0]],
            latent_variances: array![[0.9], [0.9]],
            observation_variances: array![[1.0], [1.0]],
            dropped_draws: 0,
        }
    }

    #[test]
    fn mixture_two_components_hand_case() {
        let moments = mixture_moments(&two_component_ensemble());
        assert_abs_diff_eq!(moments.mixture_mean[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(moments.mixture_variance[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn mixture_single_component_is_the_component() {
        let ens = EnsemblePrediction {
            means: array![[0.3, -0.2]],
            latent_variances: array![[0.5, 0.6]],
            observation_variances: array![[0.7, 0.8]],
            dropped_draws: 0,
        };
        let moments = mixture_moments(&ens);
        assert_eq!(moments.mixture_mean, array![0.3, -0.2]);
        assert_eq!(moments.mixture_variance, array![0.7, 0.8]);
    }

    #[test]
    fn bald_two_components_is_half_ln_two() {
        let scores = score_bald(&two_component_ensemble()).unwrap();
        assert_abs_diff_eq!(scores.scores[0], 0.5 * (2.0_f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn bald_identical_rows_scores_zero() {
        let ens = EnsemblePrediction {
            means: array![[0.4, 1.0], [0.4, 1.0], [0.4, 1.0]],
            latent_variances: array![[0.2, 0.3], [0.2, 0.3], [0.2, 0.3]],
            observation_variances: array![[0.3, 0.4], [0.3, 0.4], [0.3, 0.4]],
            dropped_draws: 0,
        };
        let scores = score_bald(&ens).unwrap();
        for &s in scores.scores.iter() {
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qb_mgp_is_sum_and_mixture_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        let m = 7;
        let p = 11;
        let means = Array2::from_shape_fn((m, p), |_| rng.random_range(-2.0..2.0));
        let obs = Array2::from_shape_fn((m, p), |_| rng.random_range(0.1..3.0));
        let ens = EnsemblePrediction {
            means,
            latent_variances: obs.clone(),
            observation_variances: obs,
            dropped_draws: 0,
        };
        let qb_mgp = score_qb_mgp(&ens).unwrap();
        let b_alm = score_b_alm(&ens).unwrap();
        let b_qbc = score_b_qbc(&ens).unwrap();
        let moments = mixture_moments(&ens);
        for i in 0..p {
            assert_abs_diff_eq!(
                qb_mgp.scores[i],
                b_alm.scores[i] + b_qbc.scores[i],
                epsilon = 0.0
            );
            assert_abs_diff_eq!(
                qb_mgp.scores[i],
                moments.mixture_variance[i],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn b_qbc_two_draw_spread() {
        let ens = EnsemblePrediction {
            means: array![[-3.0], [3.0]],
            latent_variances: array![[0.1], [0.1]],
            observation_variances: array![[0.2], [0.2]],
            dropped_draws: 0,
        };
        let scores = score_b_qbc(&ens).unwrap();
        assert_abs_diff_eq!(scores.scores[0], 9.0, epsilon = 1e-15);
    }

    #[test]
    fn b_qbc_identical_rows_is_zero() {
        let ens = EnsemblePrediction {
            means: array![[0.5, 0.7], [0.5, 0.7]],
            latent_variances: array![[0.1, 0.1], [0.1, 0.1]],
            observation_variances: array![[0.2, 0.2], [0.2, 0.2]],
            dropped_draws: 0,
        };
        let scores = score_b_qbc(&ens).unwrap();
        assert_eq!(scores.scores, array![0.0, 0.0]);
    }

    #[test]
    fn b_alm_matches_brute_force_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        let m = 5;
        let p = 6;
        let obs = Array2::from_shape_fn((m, p), |_| rng.random_range(0.05..4.0));
        let ens = EnsemblePrediction {
            means: Array2::zeros((m, p)),
            latent_variances: obs.clone(),
            observation_variances: obs.clone(),
            dropped_draws: 0,
        };
        let scores = score_b_alm(&ens).unwrap();
        for i in 0..p {
            let mut acc = 0.0;
            for j in 0..m {
                acc += obs[[j, i]];
            }
            assert_abs_diff_eq!(scores.scores[i], acc / m as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn alm_scores_are_observation_variances() {
        let pred = PredictiveDistribution {
            latent_mean: array![0.0, 1.0],
            latent_variance: array![0.4, 0.9],
            observation_variance: array![0.5, 1.0],
        };
        let scores = score_alm(&pred).unwrap();
        assert_eq!(scores.scores, array![0.5, 1.0]);
        // entropy ordering equals variance ordering
        let entropy: Vec<f64> = scores
            .scores
            .iter()
            .map(|&v| 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * v).ln())
            .collect();
        assert!(entropy[1] > entropy[0] && scores.scores[1] > scores.scores[0]);
    }

    #[test]
    fn ensemble_m1_reductions() {
        let data = Dataset::new(array![[0.2], [0.8]], array![0.5, -0.5]).unwrap();
        let pool = array![[0.1], [0.5], [0.9]];
        let config = SamplerConfig {
            chains: 1,
            samples_per_chain: 6,
            warmup: 5,
            seed: 2,
            ..Default::default()
        };
        let samples = sample_posterior(&data, &PriorSpec::default(), &config).unwrap();
        assert_eq!(samples.num_draws(), 1);
        let ens = predict_ensemble(&data, &samples, &pool).unwrap();

        let theta = samples.hyperparameters(0);
        let direct = gp::posterior_predict(&data, &theta, &pool).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(ens.means[[0, i]], direct.latent_mean[i], epsilon = 0.0);
            assert_abs_diff_eq!(
                ens.observation_variances[[0, i]],
                direct.observation_variance[i],
                epsilon = 0.0
            );
        }
        // M=1: B-ALM == ALM of the single draw, BALD == 0, QB-MGP == ALM.
        let alm = score_alm(&direct).unwrap();
        let b_alm = score_b_alm(&ens).unwrap();
        let bald = score_bald(&ens).unwrap();
        let qb_mgp = score_qb_mgp(&ens).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(b_alm.scores[i], alm.scores[i], epsilon = 0.0);
            assert_abs_diff_eq!(bald.scores[i], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(qb_mgp.scores[i], alm.scores[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn select_query_argmax_and_ties() {
        let pool = Array2::zeros((4, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let increasing = array![0.1, 0.2, 0.3, 0.4];
        assert_eq!(select_query(&increasing, &pool, &mut rng).unwrap(), 3);

        let single_pool = Array2::zeros((1, 1));
        assert_eq!(
            select_query(&array![0.7], &single_pool, &mut rng).unwrap(),
            0
        );

        // all-equal scores: every index shows up with roughly equal frequency
        let equal = array![1.0, 1.0, 1.0, 1.0];
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            counts[select_query(&equal, &pool, &mut rng).unwrap()] += 1;
        }
        for &c in &counts {
            assert!((800..1200).contains(&c), "counts {counts:?}");
        }
    }

    #[test]
    fn ensemble_identical_draws_rows_match() {
        let data = Dataset::new(array![[0.3], [0.7]], array![1.0, -1.0]).unwrap();
        let pool = array![[0.0], [0.5]];
        let theta = Hyperparameters::isotropic(1, -0.4, -0.9);
        let flat = theta.to_flat();
        let draws = ndarray::stack![ndarray::Axis(0), flat, flat, flat];
        let samples = PosteriorSamples {
            draws,
            chain_ids: vec![0, 0, 0],
            accept_stats: vec![1.0; 3],
            diagnostics: vec![],
        };
        let ens = predict_ensemble(&data, &samples, &pool).unwrap();
        for j in 1..3 {
            for i in 0..2 {
                assert_eq!(ens.means[[j, i]], ens.means[[0, i]]);
                assert_eq!(
                    ens.observation_variances[[j, i]],
                    ens.observation_variances[[0, i]]
                );
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn criteria_invariances(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::Rng;
            let m = rng.random_range(2..8usize);
            let p = rng.random_range(1..6usize);
            let means = Array2::from_shape_fn((m, p), |_| rng.random_range(-3.0..3.0));
            let obs = Array2::from_shape_fn((m, p), |_| rng.random_range(0.01..2.0));
            let ens = EnsemblePrediction {
                means: means.clone(),
                latent_variances: obs.clone(),
                observation_variances: obs.clone(),
                dropped_draws: 0,
            };

            // decomposition identity to 1e-12
            let qb = score_qb_mgp(&ens).unwrap();
            let mix = mixture_moments(&ens);
            for i in 0..p {
                proptest::prop_assert!((qb.scores[i] - mix.mixture_variance[i]).abs() < 1e-12);
            }

            // BALD is non-negative (Jensen) and zero only without disagreement
            let bald = score_bald(&ens).unwrap();
            for &s in bald.scores.iter() {
                proptest::prop_assert!(s >= -1e-10);
            }

            // row permutation leaves every criterion unchanged
            let perm: Vec<usize> = (0..m).rev().collect();
            let permute = |a: &Array2<f64>| {
                let mut out = Array2::zeros((m, p));
                for (new_row, &old_row) in perm.iter().enumerate() {
                    out.row_mut(new_row).assign(&a.row(old_row));
                }
                out
            };
            let shuffled = EnsemblePrediction {
                means: permute(&means),
                latent_variances: permute(&obs),
                observation_variances: permute(&obs),
                dropped_draws: 0,
            };
            for (a, b) in [
                (score_b_alm(&ens).unwrap(), score_b_alm(&shuffled).unwrap()),
                (score_b_qbc(&ens).unwrap(), score_b_qbc(&shuffled).unwrap()),
                (score_bald(&ens).unwrap(), score_bald(&shuffled).unwrap()),
                (score_qb_mgp(&ens).unwrap(), score_qb_mgp(&shuffled).unwrap()),
            ] {
                for i in 0..p {
                    proptest::prop_assert!((a.scores[i] - b.scores[i]).abs() < 1e-12);
                }
            }

            // B-QBC: invariant to a constant shift per column; B-ALM ignores means
            let mut shifted_means = means.clone();
            for i in 0..p {
                let c = rng.random_range(-5.0..5.0);
                shifted_means.column_mut(i).mapv_inplace(|v| v + c);
            }
            let shifted = EnsemblePrediction {
                means: shifted_means,
                latent_variances: obs.clone(),
                observation_variances: obs.clone(),
                dropped_draws: 0,
            };
            let a = score_b_qbc(&ens).unwrap();
            let b = score_b_qbc(&shifted).unwrap();
            let ba_a = score_b_alm(&ens).unwrap();
            let ba_b = score_b_alm(&shifted).unwrap();
            for i in 0..p {
                proptest::prop_assert!((a.scores[i] - b.scores[i]).abs() < 1e-9);
                proptest::prop_assert!((ba_a.scores[i] - ba_b.scores[i]).abs() == 0.0);
            }
        }
    }
}
