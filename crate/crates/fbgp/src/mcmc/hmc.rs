//! Dynamic Hamiltonian Monte Carlo with multinomial trajectory sampling.
//!
//! One chain = one call to [`run_chain`]. Each transition resamples momentum
//! from a diagonal metric, doubles a trajectory until a U-turn, divergence,
//! or the depth cap, and draws the next state multinomially among the
//! trajectory states weighted by exp(−energy error). Warm-up adapts the step
//! size by dual averaging toward the target acceptance statistic and, when
//! the warm-up is long enough, sets the diagonal inverse mass from the
//! variance of a mid-warm-up window of draws.

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{LogDensityTarget, SamplerConfig};

/// Energy error beyond which a leapfrog step counts as divergent.
const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[derive(Clone)]
struct State {
    q: Array1<f64>,
    p: Array1<f64>,
    grad: Array1<f64>,
    logp: f64,
}

struct Metric {
    /// Diagonal of M⁻¹ (≈ posterior variances).
    inv_mass: Array1<f64>,
}

impl Metric {
    fn identity(dim: usize) -> Self {
        Metric {
            inv_mass: Array1::ones(dim),
        }
    }

    fn kinetic(&self, p: &Array1<f64>) -> f64 {
        0.5 * p
            .iter()
            .zip(self.inv_mass.iter())
            .map(|(&pi, &im)| pi * pi * im)
            .sum::<f64>()
    }

    fn sample_momentum(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        Array1::from_iter(self.inv_mass.iter().map(|&im| {
            let z: f64 = rng.sample(StandardNormal);
            z / im.sqrt()
        }))
    }
}

fn hamiltonian(state: &State, metric: &Metric) -> f64 {
    if !state.logp.is_finite() {
        return f64::INFINITY;
    }
    -state.logp + metric.kinetic(&state.p)
}

fn leapfrog<T: LogDensityTarget + ?Sized>(
    target: &T,
    state: &State,
    step: f64,
    metric: &Metric,
) -> State {
    let mut p = &state.p + &(&state.grad * (0.5 * step));
    let q = &state.q + &(&p * &metric.inv_mass * step);
    let (logp, grad) = target.log_density_grad(&q.view());
    let logp = if logp.is_nan() { f64::NEG_INFINITY } else { logp };
    if logp.is_finite() {
        p = &p + &(&grad * (0.5 * step));
    }
    State { q, p, grad, logp }
}

fn is_uturn(minus: &State, plus: &State, metric: &Metric) -> bool {
    let rho = &plus.q - &minus.q;
    let dot = |s: &State| {
        rho.iter()
            .zip(s.p.iter())
            .zip(metric.inv_mass.iter())
            .map(|((&r, &p), &im)| r * p * im)
            .sum::<f64>()
    };
    dot(minus) < 0.0 || dot(plus) < 0.0
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Subtree {
    minus: State,
    plus: State,
    proposal: State,
    log_sum_weight: f64,
    sum_accept: f64,
    n_leapfrog: usize,
    divergent: bool,
    turning: bool,
}

#[allow(clippy::too_many_arguments)]
fn build_tree<T: LogDensityTarget + ?Sized>(
    target: &T,
    from: &State,
    direction: f64,
    depth: usize,
    step: f64,
    h0: f64,
    metric: &Metric,
    rng: &mut ChaCha8Rng,
) -> Subtree {
    if depth == 0 {
        let next = leapfrog(target, from, direction * step, metric);
        let h = hamiltonian(&next, metric);
        let energy_error = h - h0;
        let divergent = !energy_error.is_finite() || energy_error > DIVERGENCE_THRESHOLD;
        let log_weight = if energy_error.is_finite() {
            -energy_error
        } else {
            f64::NEG_INFINITY
        };
        let accept = (-energy_error).exp().min(1.0);
        let accept = if accept.is_nan() { 0.0 } else { accept };
        return Subtree {
            minus: next.clone(),
            plus: next.clone(),
            proposal: next,
            log_sum_weight: log_weight,
            sum_accept: accept,
            n_leapfrog: 1,
            divergent,
            turning: false,
        };
    }

    let mut left = build_tree(target, from, direction, depth - 1, step, h0, metric, rng);
    if left.divergent || left.turning {
        return left;
    }
    let edge = if direction > 0.0 { &left.plus } else { &left.minus };
    let right = build_tree(target, edge, direction, depth - 1, step, h0, metric, rng);

    left.sum_accept += right.sum_accept;
    left.n_leapfrog += right.n_leapfrog;
    if right.divergent || right.turning {
        left.divergent |= right.divergent;
        left.turning |= right.turning;
        return left;
    }

    let total = log_add_exp(left.log_sum_weight, right.log_sum_weight);
    // Uniform multinomial choice between the two halves.
    let take_right = (rng.random::<f64>()).ln() < right.log_sum_weight - total;
    if take_right {
        left.proposal = right.proposal;
    }
    left.log_sum_weight = total;
    if direction > 0.0 {
        left.plus = right.plus;
    } else {
        left.minus = right.minus;
    }
    left.turning = is_uturn(&left.minus, &left.plus, metric);
    left
}

struct TransitionStats {
    accept_stat: f64,
    divergent: bool,
}

fn transition<T: LogDensityTarget + ?Sized>(
    target: &T,
    current: &mut State,
    step: f64,
    max_depth: usize,
    metric: &Metric,
    rng: &mut ChaCha8Rng,
) -> TransitionStats {
    current.p = metric.sample_momentum(rng);
    let h0 = hamiltonian(current, metric);

    let mut minus = current.clone();
    let mut plus = current.clone();
    let mut sample = current.clone();
    let mut log_sum_weight = 0.0; // the initial state carries weight exp(0)
    let mut sum_accept = 0.0;
    let mut n_leapfrog = 0usize;
    let mut divergent = false;

    for depth in 0..max_depth {
        let direction = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let from = if direction > 0.0 { &plus } else { &minus };
        let sub = build_tree(target, from, direction, depth, step, h0, metric, rng);
        sum_accept += sub.sum_accept;
        n_leapfrog += sub.n_leapfrog;
        if sub.divergent {
            divergent = true;
            break;
        }
        if sub.turning {
            break;
        }
        // Biased progressive sampling: favor the fresh subtree.
        let accept_prob = (sub.log_sum_weight - log_sum_weight).exp().min(1.0);
        if rng.random::<f64>() < accept_prob {
            sample = sub.proposal.clone();
        }
        log_sum_weight = log_add_exp(log_sum_weight, sub.log_sum_weight);
        if direction > 0.0 {
            plus = sub.plus;
        } else {
            minus = sub.minus;
        }
        if is_uturn(&minus, &plus, metric) {
            break;
        }
    }

    *current = sample;
    let accept_stat = if n_leapfrog > 0 {
        sum_accept / n_leapfrog as f64
    } else {
        0.0
    };
    TransitionStats {
        accept_stat,
        divergent,
    }
}

/// Step-size search: double or halve until the one-step acceptance ratio
/// crosses 1/2.
fn find_reasonable_step<T: LogDensityTarget + ?Sized>(
    target: &T,
    state: &State,
    metric: &Metric,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut step = 1.0;
    let mut probe = state.clone();
    probe.p = metric.sample_momentum(rng);
    let h0 = hamiltonian(&probe, metric);
    let log_ratio_at = |eps: f64, probe: &State| {
        let next = leapfrog(target, probe, eps, metric);
        let h1 = hamiltonian(&next, metric);
        if h1.is_finite() {
            h0 - h1
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut log_ratio = log_ratio_at(step, &probe);
    let dir: f64 = if log_ratio > (0.5_f64).ln() { 1.0 } else { -1.0 };
    for _ in 0..100 {
        if dir * log_ratio <= -dir * (2.0_f64).ln() {
            break;
        }
        step *= (2.0_f64).powf(dir);
        if !(1e-10..=1e10).contains(&step) {
            break;
        }
        log_ratio = log_ratio_at(step, &probe);
    }
    step.clamp(1e-10, 1e10)
}

/// Dual averaging of the log step size (γ=0.05, t₀=10, κ=0.75).
struct DualAveraging {
    mu: f64,
    log_step: f64,
    log_step_avg: f64,
    h_bar: f64,
    m: f64,
    delta: f64,
}

impl DualAveraging {
    fn new(step0: f64, delta: f64) -> Self {
        DualAveraging {
            mu: (10.0 * step0).ln(),
            log_step: step0.ln(),
            log_step_avg: 0.0,
            h_bar: 0.0,
            m: 1.0,
            delta,
        }
    }

    fn update(&mut self, accept_stat: f64) {
        const GAMMA: f64 = 0.05;
        const T0: f64 = 10.0;
        const KAPPA: f64 = 0.75;
        let m = self.m;
        self.h_bar = (1.0 - 1.0 / (m + T0)) * self.h_bar + (self.delta - accept_stat) / (m + T0);
        self.log_step = self.mu - m.sqrt() / GAMMA * self.h_bar;
        let eta = m.powf(-KAPPA);
        self.log_step_avg = eta * self.log_step + (1.0 - eta) * self.log_step_avg;
        self.m += 1.0;
    }

    fn current(&self) -> f64 {
        self.log_step.exp()
    }

    fn averaged(&self) -> f64 {
        self.log_step_avg.exp()
    }
}

pub(crate) struct ChainRun {
    pub draws: Vec<Array1<f64>>,
    pub accept_stats: Vec<f64>,
    pub divergences: usize,
    pub acceptance_rate: f64,
    pub step_size: f64,
}

pub(crate) fn run_chain<T: LogDensityTarget + ?Sized>(
    target: &T,
    init: Array1<f64>,
    config: &SamplerConfig,
    mut rng: ChaCha8Rng,
) -> ChainRun {
    let dim = init.len();
    let (logp, grad) = target.log_density_grad(&init.view());
    let mut current = State {
        q: init,
        p: Array1::zeros(dim),
        grad,
        logp,
    };

    let total = config.samples_per_chain;
    let warmup = config.warmup.min(total);
    let retained = total - warmup;

    let mut metric = Metric::identity(dim);
    let step0 = find_reasonable_step(target, &current, &metric, &mut rng);
    let mut adapter = DualAveraging::new(step0, config.target_accept);
    let mut step = step0;

    // Mass-matrix window: variance of draws in [W/4, 3W/4), applied at 3W/4.
    let (window_start, window_end) = if warmup >= 40 {
        (warmup / 4, 3 * warmup / 4)
    } else {
        (0, 0)
    };
    let mut window: Vec<Array1<f64>> = Vec::new();

    let mut draws = Vec::with_capacity(retained);
    let mut accept_stats = Vec::with_capacity(retained);
    let mut divergences = 0usize;

    for m in 0..total {
        if m < warmup {
            let stats = transition(
                target,
                &mut current,
                adapter.current(),
                config.max_tree_depth,
                &metric,
                &mut rng,
            );
            adapter.update(stats.accept_stat);
            if m >= window_start && m < window_end {
                window.push(current.q.clone());
            }
            if window_end > 0 && m + 1 == window_end {
                metric = metric_from_window(&window, dim);
                let fresh = find_reasonable_step(target, &current, &metric, &mut rng);
                adapter = DualAveraging::new(fresh, config.target_accept);
            }
            if m + 1 == warmup {
                step = adapter.averaged();
            }
        } else {
            let stats = transition(
                target,
                &mut current,
                step,
                config.max_tree_depth,
                &metric,
                &mut rng,
            );
            if stats.divergent {
                divergences += 1;
            }
            draws.push(current.q.clone());
            accept_stats.push(stats.accept_stat);
        }
    }

    let acceptance_rate = if accept_stats.is_empty() {
        0.0
    } else {
        accept_stats.iter().sum::<f64>() / accept_stats.len() as f64
    };
    ChainRun {
        draws,
        accept_stats,
        divergences,
        acceptance_rate,
        step_size: step,
    }
}

/// Regularized per-dimension variance of the window draws, shrunk toward
/// 1e-3 the way Stan does, so a slow-moving dimension cannot zero the metric.
fn metric_from_window(window: &[Array1<f64>], dim: usize) -> Metric {
    let n = window.len();
    if n < 2 {
        return Metric::identity(dim);
    }
    let nf = n as f64;
    let mut inv_mass = Array1::zeros(dim);
    for k in 0..dim {
        let mean = window.iter().map(|q| q[k]).sum::<f64>() / nf;
        let var = window.iter().map(|q| (q[k] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        inv_mass[k] = (nf / (nf + 5.0)) * var + 1e-3 * (5.0 / (nf + 5.0));
    }
    Metric { inv_mass }
}
