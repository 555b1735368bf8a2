use fbgp::acquisition::{mixture_moments, EnsemblePrediction};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_ensemble(rng: &mut ChaCha8Rng, max_m: usize, max_p: usize) -> EnsemblePrediction {
    let m = rng.random_range(2..=max_m);
    let p = rng.random_range(1..=max_p);
    let noise = rng.random_range(0.01..0.5);
    let means = Array2::from_shape_fn((m, p), |_| rng.random_range(-3.0..3.0));
    let latent = Array2::from_shape_fn((m, p), |_| rng.random_range(0.0..2.0));
    let obs = latent.mapv(|v| v + noise);
    EnsemblePrediction { means, latent_variances: latent, observation_variances: obs, dropped_draws: 0 }
}

#[test]
fn probe() {
    let n_draws = 1_000_000usize;
    'seed: for seed in [0xACC3u64, 0xACC3_0001, 0xACC3_0002, 0xACC3_0003, 0xACC3_0004, 0xACC3_0005] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_z: f64 = 0.0;
        for _ in 0..20 {
            let ens = random_ensemble(&mut rng, 6, 2);
            let moments = mixture_moments(&ens);
            for point in 0..ens.pool_size() {
                let m = ens.num_draws();
                let (mut sum, mut sum_sq, mut sum_q4) = (0.0, 0.0, 0.0);
                for _ in 0..n_draws {
                    let j = rng.random_range(0..m);
                    let z: f64 = rng.sample(StandardNormal);
                    let y = ens.means[[j, point]] + ens.observation_variances[[j, point]].sqrt() * z;
                    sum += y;
                    let c = y - moments.mixture_mean[point];
                    sum_sq += c * c;
                    sum_q4 += c.powi(4);
                }
                let n = n_draws as f64;
                let mc_mean = sum / n;
                let mc_var = sum_sq / n;
                let se_mean = (moments.mixture_variance[point] / n).sqrt();
                let se_var = ((sum_q4 / n - mc_var * mc_var).max(0.0) / n).sqrt();
                let z_mean = (mc_mean - moments.mixture_mean[point]).abs() / se_mean;
                let z_var = (mc_var - moments.mixture_variance[point]).abs() / se_var;
                worst_z = worst_z.max(z_mean).max(z_var);
                if worst_z >= 3.0 {
                    println!("seed {seed:#x}: FAIL worst z {worst_z:.2}");
                    continue 'seed;
                }
            }
        }
        println!("seed {seed:#x}: ok, worst z {worst_z:.2}");
    }
}
