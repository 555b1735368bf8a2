//! GP regression against independent dense-inverse and finite-difference
//! oracles.

mod common;

use fbgp::gp::{
    kernel_matrix, lml_gradient, log_marginal_likelihood, posterior_predict, Dataset,
    Hyperparameters,
};
use fbgp::mcmc::{log_posterior, log_posterior_gradient, PriorSpec};
use ndarray::{concatenate, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn predictive_matches_dense_inverse_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..50 {
        let (data, theta) = common::random_instance(&mut rng, 20, 6);
        let m = rng.random_range(1..8usize);
        let queries = Array2::from_shape_fn((m, data.input_dim()), |_| rng.random::<f64>());
        let pred = posterior_predict(&data, &theta, &queries).unwrap();
        let (mean_o, latent_o, obs_o) = common::predict_oracle(&data, &theta, &queries);
        for q in 0..m {
            assert!((pred.latent_mean[q] - mean_o[q]).abs() < 1e-8);
            assert!((pred.latent_variance[q] - latent_o[q].max(0.0)).abs() < 1e-8);
            assert!((pred.observation_variance[q] - obs_o[q].max(theta.noise_variance())).abs() < 1e-8);
        }
    }
}

#[test]
fn lml_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..50 {
        let (data, theta) = common::random_instance(&mut rng, 20, 6);
        let lml = log_marginal_likelihood(&data, &theta).unwrap();
        let oracle = common::lml_oracle(&data, &theta);
        assert!(
            (lml - oracle).abs() < 1e-10,
            "lml {lml} vs oracle {oracle}"
        );
    }
}

fn fd_gradient(f: &dyn Fn(&Hyperparameters) -> f64, theta: &Hyperparameters) -> Array1<f64> {
    let step = 1e-5;
    let flat = theta.to_flat();
    Array1::from_shape_fn(flat.len(), |k| {
        let mut plus = flat.clone();
        let mut minus = flat.clone();
        plus[k] += step;
        minus[k] -= step;
        let fp = f(&Hyperparameters::from_flat(plus.view()));
        let fm = f(&Hyperparameters::from_flat(minus.view()));
        (fp - fm) / (2.0 * step)
    })
}

#[test]
fn lml_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..50 {
        let (data, theta) = common::random_instance(&mut rng, 20, 6);
        let grad = lml_gradient(&data, &theta).unwrap();
        let fd = fd_gradient(&|t| log_marginal_likelihood(&data, t).unwrap(), &theta);
        for k in 0..grad.len() {
            assert!(
                common::close_rel(grad[k], fd[k], 1e-5),
                "component {k}: analytic {} vs fd {}",
                grad[k],
                fd[k]
            );
        }
    }
}

#[test]
fn log_posterior_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let prior = PriorSpec::default();
    for _ in 0..50 {
        let (data, theta) = common::random_instance(&mut rng, 15, 4);
        let grad = log_posterior_gradient(&data, &theta, &prior).unwrap();
        let fd = fd_gradient(&|t| log_posterior(&data, t, &prior).unwrap(), &theta);
        for k in 0..grad.len() {
            assert!(
                common::close_rel(grad[k], fd[k], 1e-5),
                "component {k}: analytic {} vs fd {}",
                grad[k],
                fd[k]
            );
        }
    }
}

#[test]
fn kernel_self_matrix_is_symmetric_and_factorizable() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..50 {
        let (data, theta) = common::random_instance(&mut rng, 20, 6);
        let k = kernel_matrix(data.inputs(), data.inputs(), &theta, true).unwrap();
        for i in 0..k.nrows() {
            for j in 0..i {
                assert_eq!(k[[i, j]], k[[j, i]]);
            }
        }
        // factorization succeeds (jitter ladder included)
        log_marginal_likelihood(&data, &theta).unwrap();
    }
}

#[test]
fn duplicating_a_training_point_never_increases_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..30 {
        let (data, theta) = common::random_instance(&mut rng, 12, 3);
        let queries = Array2::from_shape_fn((6, data.input_dim()), |_| rng.random::<f64>());
        let before = posterior_predict(&data, &theta, &queries).unwrap();

        let dup_row = rng.random_range(0..data.len());
        let dup_input = data.inputs().row(dup_row).insert_axis(Axis(0)).to_owned();
        let inputs = concatenate![Axis(0), data.inputs().clone(), dup_input];
        let mut targets = data.targets().to_vec();
        targets.push(data.targets()[dup_row]);
        let bigger = Dataset::new(inputs, Array1::from_vec(targets)).unwrap();
        let after = posterior_predict(&bigger, &theta, &queries).unwrap();

        for q in 0..queries.nrows() {
            assert!(
                after.latent_variance[q] <= before.latent_variance[q] + 1e-10,
                "variance rose from {} to {}",
                before.latent_variance[q],
                after.latent_variance[q]
            );
        }
    }
}

#[test]
fn kernel_cross_matrix_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..20 {
        let d = rng.random_range(1..4usize);
        let a = Array2::from_shape_fn((4, d), |_| rng.random::<f64>());
        let b = Array2::from_shape_fn((3, d), |_| rng.random::<f64>());
        let theta = Hyperparameters::new(
            Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0)),
            rng.random_range(-2.0..0.0),
        )
        .unwrap();
        let k = kernel_matrix(&a, &b, &theta, false).unwrap();
        let oracle = common::rbf_oracle(&a, &b, &theta);
        for i in 0..4 {
            for j in 0..3 {
                assert!((k[[i, j]] - oracle[[i, j]]).abs() < 1e-14);
            }
        }
    }
}
