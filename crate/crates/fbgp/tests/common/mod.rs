//! Shared test oracles, kept independent of the library's solve path.
//!
//! Everything here goes through explicit Gauss-Jordan inversion and
//! LU-pivot determinants rather than the crate's Cholesky, so agreement is
//! evidence rather than tautology.

#![allow(dead_code)]

use fbgp::gp::{Dataset, Hyperparameters};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert_dense(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| work[[i, col]].abs().total_cmp(&work[[j, col]].abs()))
            .unwrap();
        if pivot_row != col {
            for k in 0..n {
                work.swap([col, k], [pivot_row, k]);
                inv.swap([col, k], [pivot_row, k]);
            }
        }
        let pivot = work[[col, col]];
        for k in 0..n {
            work[[col, k]] /= pivot;
            inv[[col, k]] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[[row, col]];
            for k in 0..n {
                let w = work[[col, k]];
                let v = inv[[col, k]];
                work[[row, k]] -= factor * w;
                inv[[row, k]] -= factor * v;
            }
        }
    }
    inv
}

/// log|A| for a positive-definite matrix via LU with partial pivoting.
pub fn log_det_dense(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut work = a.clone();
    let mut log_det = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| work[[i, col]].abs().total_cmp(&work[[j, col]].abs()))
            .unwrap();
        if pivot_row != col {
            sign = -sign;
            for k in 0..n {
                work.swap([col, k], [pivot_row, k]);
            }
        }
        let pivot = work[[col, col]];
        log_det += pivot.abs().ln();
        if pivot < 0.0 {
            sign = -sign;
        }
        for row in (col + 1)..n {
            let factor = work[[row, col]] / pivot;
            for k in col..n {
                let w = work[[col, k]];
                work[[row, k]] -= factor * w;
            }
        }
    }
    assert!(sign > 0.0, "oracle log-det on a non-PD matrix");
    log_det
}

/// Direct transcription of the ARD RBF formula (no noise).
pub fn rbf_oracle(a: &Array2<f64>, b: &Array2<f64>, theta: &Hyperparameters) -> Array2<f64> {
    let ls: Vec<f64> = theta.log_length_scales.iter().map(|&l| l.exp()).collect();
    let mut k = Array2::zeros((a.nrows(), b.nrows()));
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            let mut sum = 0.0;
            for (dim, &l) in ls.iter().enumerate() {
                let diff = a[[i, dim]] - b[[j, dim]];
                sum += diff * diff / (2.0 * l * l);
            }
            k[[i, j]] = (-sum).exp();
        }
    }
    k
}

/// Dense-inverse predictive posterior: mean, latent variance, observation
/// variance per query.
pub fn predict_oracle(
    data: &Dataset,
    theta: &Hyperparameters,
    queries: &Array2<f64>,
) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let n = data.len();
    let noise = theta.noise_variance();
    let mut k = rbf_oracle(data.inputs(), data.inputs(), theta);
    for i in 0..n {
        k[[i, i]] += noise;
    }
    let k_inv = invert_dense(&k);
    let k_star = rbf_oracle(data.inputs(), queries, theta);

    let m = queries.nrows();
    let mut mean = Array1::zeros(m);
    let mut latent = Array1::zeros(m);
    let mut obs = Array1::zeros(m);
    for q in 0..m {
        let col = k_star.column(q);
        let mut mu = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            let mut kinv_col = 0.0;
            for j in 0..n {
                kinv_col += k_inv[[i, j]] * col[j];
            }
            // K⁻¹ is symmetric, so Σᵢ (K⁻¹k*)ᵢ yᵢ = k*ᵀ K⁻¹ y.
            mu += kinv_col * data.targets()[i];
            quad += col[i] * kinv_col;
        }
        mean[q] = mu;
        latent[q] = 1.0 - quad;
        obs[q] = latent[q] + noise;
    }
    (mean, latent, obs)
}

/// Dense-inverse log marginal likelihood.
pub fn lml_oracle(data: &Dataset, theta: &Hyperparameters) -> f64 {
    let n = data.len();
    let noise = theta.noise_variance();
    let mut k = rbf_oracle(data.inputs(), data.inputs(), theta);
    for i in 0..n {
        k[[i, i]] += noise;
    }
    let k_inv = invert_dense(&k);
    let y = data.targets();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += y[i] * k_inv[[i, j]] * y[j];
        }
    }
    -0.5 * quad - 0.5 * log_det_dense(&k) - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// A random well-conditioned GP instance for oracle comparisons.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_d: usize) -> (Dataset, Hyperparameters) {
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(1..=max_d);
    let inputs = Array2::from_shape_fn((n, d), |_| rng.random::<f64>());
    let targets = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
    let log_ls = Array1::from_shape_fn(d, |_| rng.random_range(-1.5..1.0));
    let log_noise = rng.random_range(-2.5..0.0);
    (
        Dataset::new(inputs, targets).unwrap(),
        Hyperparameters::new(log_ls, log_noise).unwrap(),
    )
}

/// Mixed relative/absolute agreement: |a − b| ≤ tol · max(1, |a|, |b|).
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
