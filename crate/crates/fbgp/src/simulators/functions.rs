//! Closed forms of the analytic benchmark functions.
//!
//! Formulas follow the Virtual Library of Simulation Experiments
//! (<https://www.sfu.ca/~ssurjano/>); each function notes its entry there.

use std::f64::consts::PI;

/// Gramacy & Lee (2012): `sin(10πx)/(2x) + (x−1)⁴` on [0.5, 2.5].
pub fn gramacy_lee_2012(x: f64) -> f64 {
    (10.0 * PI * x).sin() / (2.0 * x) + (x - 1.0).powi(4)
}

/// Gramacy & Lee (2009) piecewise variant of Higdon (2002) on [0, 20]:
/// `sin(πx/5) + cos(4πx/5)/5` for x ≤ 9.6, then the line `x/10 − 1`.
pub fn gramacy_lee_2009(x: f64) -> f64 {
    if x <= 9.6 {
        (PI * x / 5.0).sin() + 0.2 * (4.0 * PI * x / 5.0).cos()
    } else {
        x / 10.0 - 1.0
    }
}

/// Gramacy & Lee (2008): `x₁·exp(−x₁² − x₂²)` on [−2, 6]².
pub fn gramacy_lee_2008(x: &[f64]) -> f64 {
    x[0] * (-x[0] * x[0] - x[1] * x[1]).exp()
}

/// Branin on [−5, 10] × [0, 15] with the canonical constants
/// a=1, b=5.1/4π², c=5/π, r=6, s=10, t=1/8π.
pub fn branin(x: &[f64]) -> f64 {
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    let term = x[1] - b * x[0] * x[0] + c * x[0] - r;
    a * term * term + s * (1.0 - t) * x[0].cos() + s
}

/// Ishigami on [−π, π]³: `sin x₁ + a·sin²x₂ + b·x₃⁴·sin x₁` with a=7, b=0.1.
pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

/// Hartmann 6-dimensional function on [0, 1]⁶ with the canonical
/// α, A, and P matrices.
pub fn hartmann6(x: &[f64]) -> f64 {
    const ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
    const A: [[f64; 6]; 4] = [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ];
    const P: [[f64; 6]; 4] = [
        [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
        [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
        [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
        [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
    ];
    let mut sum = 0.0;
    for i in 0..4 {
        let mut inner = 0.0;
        for j in 0..6 {
            let diff = x[j] - P[i][j];
            inner += A[i][j] * diff * diff;
        }
        sum += ALPHA[i] * (-inner).exp();
    }
    -sum
}
