//! Fully Bayesian Gaussian-process (FBGP) active learning.
//!
//! A zero-mean GP with an ARD RBF kernel (unit output variance, noise folded
//! into the kernel) is made fully Bayesian by sampling the joint posterior of
//! its log hyperparameters with a gradient-based MCMC sampler. The posterior
//! draws feed five pool-based acquisition criteria — predictive-entropy (ALM)
//! and its Bayesian average (B-ALM), BALD, Bayesian query-by-committee
//! (B-QBC), and the mixture-of-GPs total variance (QB-MGP) — which drive a
//! sequential active-learning loop over stochastic benchmark simulators.
//! Learning curves are compared with relative-decrease-in-AUC ratio
//! statistics.
//!
//! Modules map one-to-one onto the pipeline:
//!
//! - [`gp`]: exact GP regression (kernel, marginal likelihood + gradient,
//!   predictive posterior).
//! - [`mcmc`]: dynamic Hamiltonian Monte Carlo over the hyperparameter
//!   posterior with warm-up adaptation and multiple seeded chains.
//! - [`acquisition`]: the five acquisition criteria over an ensemble of
//!   posterior-sampled GPs.
//! - [`simulators`]: stochastic ground-truth functions and design utilities
//!   (maximin Latin hypercube, grid pools).
//! - [`active_loop`]: the sequential experiment protocol (rescaling,
//!   standardization, KDE mode selection, NLML/RMSE traces).
//! - [`evaluation`]: learning-curve AUC and relative-decrease statistics.

pub mod acquisition;
pub mod active_loop;
pub mod error;
pub mod evaluation;
pub mod gp;
pub mod mcmc;
pub mod seeding;
pub mod simulators;

mod linalg;

pub use error::{Error, Result};
pub use gp::{Dataset, Hyperparameters, PredictiveDistribution};
