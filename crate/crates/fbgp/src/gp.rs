//! Exact Gaussian-process regression with an ARD RBF kernel.
//!
//! The model is fixed by design: zero mean, unit kernel output variance, and
//! Gaussian observation noise folded into the kernel as `σ_ε² I` on the
//! training diagonal. The only free quantities are the log length scales
//! (one per input dimension) and the log noise standard deviation.
//!
//! For training inputs X, targets y, and K = K_rbf(X, X) + σ_ε² I:
//!
//! ```text
//! log p(y|X) = −½ yᵀ K⁻¹ y − ½ log|K| − (n/2) log 2π
//! μ*(q)      = k(X, q)ᵀ K⁻¹ y
//! σ*²(q)     = 1 − k(X, q)ᵀ K⁻¹ k(X, q)          (latent)
//! ```
//!
//! Everything goes through one Cholesky factorization of K with an escalating
//! jitter ladder (0, then 1e-8·mean(diag) up to 1e-2·mean(diag) in decades).

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

const LOG_2PI: f64 = 1.8378770664093453;

/// Kernel hyperparameters in log space.
///
/// Positivity of length scales and noise is structural: the fields store
/// logarithms, so there is nothing to validate beyond finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// log ℓ₁..ℓ_d, in unit-cube input units.
    pub log_length_scales: Array1<f64>,
    /// log σ_ε, in standardized-output units.
    pub log_noise_std: f64,
}

impl Hyperparameters {
    pub fn new(log_length_scales: Array1<f64>, log_noise_std: f64) -> Result<Self> {
        if !log_length_scales.iter().all(|v| v.is_finite()) || !log_noise_std.is_finite() {
            return Err(Error::NonFinite("hyperparameters"));
        }
        Ok(Self {
            log_length_scales,
            log_noise_std,
        })
    }

    /// Isotropic constructor used all over the tests.
    pub fn isotropic(dim: usize, log_length_scale: f64, log_noise_std: f64) -> Self {
        Self {
            log_length_scales: Array1::from_elem(dim, log_length_scale),
            log_noise_std,
        }
    }

    /// Active input dimension d.
    pub fn input_dim(&self) -> usize {
        self.log_length_scales.len()
    }

    /// σ_ε² = exp(2·log σ_ε).
    pub fn noise_variance(&self) -> f64 {
        (2.0 * self.log_noise_std).exp()
    }

    /// Flatten to the sampler layout `[log ℓ₁..log ℓ_d, log σ_ε]`.
    pub fn to_flat(&self) -> Array1<f64> {
        let mut flat = Array1::zeros(self.input_dim() + 1);
        flat.slice_mut(ndarray::s![..self.input_dim()])
            .assign(&self.log_length_scales);
        flat[self.input_dim()] = self.log_noise_std;
        flat
    }

    /// Inverse of [`to_flat`](Self::to_flat); `flat` has length d+1.
    pub fn from_flat(flat: ArrayView1<f64>) -> Self {
        let d = flat.len() - 1;
        Self {
            log_length_scales: flat.slice(ndarray::s![..d]).to_owned(),
            log_noise_std: flat[d],
        }
    }
}

/// Training data: inputs on the unit cube, standardized targets.
///
/// The unit-cube convention is enforced upstream by the active-learning
/// loop's rescaling; the type itself only requires finite values.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Array2<f64>,
    targets: Array1<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array1<f64>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::invalid("dataset must contain at least one point"));
        }
        if inputs.nrows() != targets.len() {
            return Err(Error::DimensionMismatch {
                what: "dataset rows vs targets",
                expected: inputs.nrows(),
                got: targets.len(),
            });
        }
        if !inputs.iter().all(|v| v.is_finite()) || !targets.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // n ≥ 1 by construction
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.targets
    }
}

/// Diagonal predictive posterior at a batch of query points.
#[derive(Debug, Clone)]
pub struct PredictiveDistribution {
    /// E[f*] per query.
    pub latent_mean: Array1<f64>,
    /// Var[f*] per query, clamped at 0.
    pub latent_variance: Array1<f64>,
    /// Var[y*] = Var[f*] + σ_ε² per query.
    pub observation_variance: Array1<f64>,
}

/// ARD RBF kernel matrix between the rows of `a` and `b`:
/// `k(x, x') = exp(−Σ_k (x_k − x'_k)² / (2 ℓ_k²))`.
///
/// With `include_noise`, σ_ε² is added on the diagonal; that is only
/// meaningful when `a` and `b` are the same point set, so matching row
/// counts are required.
pub fn kernel_matrix(
    a: &Array2<f64>,
    b: &Array2<f64>,
    theta: &Hyperparameters,
    include_noise: bool,
) -> Result<Array2<f64>> {
    let d = theta.input_dim();
    for (name, m) in [("first kernel argument", a), ("second kernel argument", b)] {
        if m.ncols() != d {
            return Err(Error::DimensionMismatch {
                what: match name {
                    "first kernel argument" => "kernel matrix A columns",
                    _ => "kernel matrix B columns",
                },
                expected: d,
                got: m.ncols(),
            });
        }
    }
    if include_noise && a.nrows() != b.nrows() {
        return Err(Error::invalid(
            "include_noise requires A and B to be the same point set",
        ));
    }
    let inv_two_ls2: Vec<f64> = theta
        .log_length_scales
        .iter()
        .map(|&l| 0.5 * (-2.0 * l).exp())
        .collect();
    let mut k = Array2::<f64>::zeros((a.nrows(), b.nrows()));
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            let mut exponent = 0.0;
            for (dim, w) in inv_two_ls2.iter().enumerate() {
                let diff = a[[i, dim]] - b[[j, dim]];
                exponent += diff * diff * w;
            }
            k[[i, j]] = (-exponent).exp();
        }
    }
    if include_noise {
        let noise = theta.noise_variance();
        for i in 0..a.nrows() {
            k[[i, i]] += noise;
        }
    }
    Ok(k)
}

fn training_factor(data: &Dataset, theta: &Hyperparameters) -> Result<CholeskyFactor> {
    let k = kernel_matrix(data.inputs(), data.inputs(), theta, true)?;
    CholeskyFactor::with_jitter(&k)
}

/// log p(y|X, θ) for the noise-inclusive kernel.
pub fn log_marginal_likelihood(data: &Dataset, theta: &Hyperparameters) -> Result<f64> {
    let factor = training_factor(data, theta)?;
    let alpha = factor.solve(data.targets());
    let quad = data.targets().dot(&alpha);
    let n = data.len() as f64;
    Ok(-0.5 * quad - 0.5 * factor.log_det() - 0.5 * n * LOG_2PI)
}

/// Negative log marginal likelihood; the quantity traced on learning curves.
pub fn nlml_of(data: &Dataset, theta: &Hyperparameters) -> Result<f64> {
    log_marginal_likelihood(data, theta).map(|lml| -lml)
}

/// Gradient of [`log_marginal_likelihood`] with respect to the log-space
/// hyperparameters, layout `[∂/∂log ℓ₁.., ∂/∂log σ_ε]`.
///
/// Uses `∂LML/∂θ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ)` with the chain rule through the
/// exponentials applied, so the result is directly usable by the sampler.
pub fn lml_gradient(data: &Dataset, theta: &Hyperparameters) -> Result<Array1<f64>> {
    let d = theta.input_dim();
    if data.input_dim() != d {
        return Err(Error::DimensionMismatch {
            what: "dataset input dim vs hyperparameters",
            expected: d,
            got: data.input_dim(),
        });
    }
    let n = data.len();
    let factor = training_factor(data, theta)?;
    let alpha = factor.solve(data.targets());
    let k_inv = factor.inverse();

    // W = ααᵀ − K⁻¹ (symmetric).
    let mut w = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            w[[i, j]] = alpha[i] * alpha[j] - k_inv[[i, j]];
        }
    }

    let k_rbf = kernel_matrix(data.inputs(), data.inputs(), theta, false)?;
    let inv_ls2: Vec<f64> = theta
        .log_length_scales
        .iter()
        .map(|&l| (-2.0 * l).exp())
        .collect();

    let mut grad = Array1::<f64>::zeros(d + 1);
    let x = data.inputs();
    // ∂K/∂log ℓ_k = K_rbf ⊙ (x_k − x'_k)² / ℓ_k²; off-diagonal only matters
    // since the squared distance vanishes on the diagonal.
    for i in 0..n {
        for j in 0..n {
            let wk = 0.5 * w[[i, j]] * k_rbf[[i, j]];
            for (dim, inv) in inv_ls2.iter().enumerate() {
                let diff = x[[i, dim]] - x[[j, dim]];
                grad[dim] += wk * diff * diff * inv;
            }
        }
    }
    // ∂K/∂log σ_ε = 2σ_ε² I.
    let noise = theta.noise_variance();
    let trace_w: f64 = (0..n).map(|i| w[[i, i]]).sum();
    grad[d] = noise * trace_w;
    Ok(grad)
}

/// Predictive posterior (diagonal) at `queries`, one Cholesky of the
/// noise-inclusive training kernel.
pub fn posterior_predict(
    data: &Dataset,
    theta: &Hyperparameters,
    queries: &Array2<f64>,
) -> Result<PredictiveDistribution> {
    if queries.ncols() != theta.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "query columns",
            expected: theta.input_dim(),
            got: queries.ncols(),
        });
    }
    let factor = training_factor(data, theta)?;
    let alpha = factor.solve(data.targets());
    let k_star = kernel_matrix(data.inputs(), queries, theta, false)?;

    let m = queries.nrows();
    let mut latent_mean = Array1::<f64>::zeros(m);
    let mut latent_variance = Array1::<f64>::zeros(m);
    for j in 0..m {
        let col = k_star.column(j).to_owned();
        latent_mean[j] = col.dot(&alpha);
        let v = factor.solve_lower(&col);
        // k(q,q) = 1 for the unit-variance RBF kernel.
        latent_variance[j] = (1.0 - v.dot(&v)).max(0.0);
    }
    let noise = theta.noise_variance();
    let observation_variance = latent_variance.mapv(|v| v + noise);
    Ok(PredictiveDistribution {
        latent_mean,
        latent_variance,
        observation_variance,
    })
}
