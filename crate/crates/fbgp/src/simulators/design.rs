//! Experimental-design utilities: Latin hypercube sampling and grid pools.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// One Latin hypercube draw on [0,1]^d: per axis, one uniform sample in each
/// of the n strata, stratum order permuted.
fn lhs_single(n: usize, d: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut design = Array2::zeros((n, d));
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(rng);
        for i in 0..n {
            let u: f64 = rng.random();
            design[[i, j]] = (strata[i] as f64 + u) / n as f64;
        }
    }
    design
}

fn min_pairwise_sq_dist(design: &Array2<f64>) -> f64 {
    let n = design.nrows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for k in 0..design.ncols() {
                let diff = design[[i, k]] - design[[j, k]];
                d2 += diff * diff;
            }
            best = best.min(d2);
        }
    }
    best
}

/// Maximin Latin hypercube on [0,1]^d: of `candidates` independent LHS
/// draws, keep the one maximizing the minimum pairwise distance. With fewer
/// than two points there is no pairwise distance and the first draw is
/// returned as-is.
pub fn maximin_lhs(n: usize, d: usize, rng: &mut impl Rng, candidates: usize) -> Array2<f64> {
    let first = lhs_single(n, d, rng);
    if n < 2 || candidates <= 1 {
        return first;
    }
    let mut best = first;
    let mut best_score = min_pairwise_sq_dist(&best);
    for _ in 1..candidates {
        let cand = lhs_single(n, d, rng);
        let score = min_pairwise_sq_dist(&cand);
        if score > best_score {
            best = cand;
            best_score = score;
        }
    }
    best
}

/// Grid pool over an axis-aligned box, `per_axis` equidistant points per
/// dimension including both endpoints. If the full Cartesian grid exceeds
/// `cap` points, a uniformly random subset of `cap` distinct grid points is
/// drawn instead (re-drawn on every call).
pub fn grid_pool(
    domain: &[(f64, f64)],
    per_axis: usize,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    let d = domain.len();
    if d == 0 || per_axis < 2 || cap == 0 {
        return Err(Error::invalid(
            "grid pool needs d ≥ 1, per_axis ≥ 2, and cap ≥ 1",
        ));
    }
    let axis_value = |dim: usize, idx: usize| {
        let (lo, hi) = domain[dim];
        lo + (hi - lo) * idx as f64 / (per_axis - 1) as f64
    };

    let mut total: u128 = 1;
    for _ in 0..d {
        total = total.saturating_mul(per_axis as u128);
    }

    if total <= cap as u128 {
        let rows = total as usize;
        let mut pool = Array2::zeros((rows, d));
        let mut index = vec![0usize; d];
        for row in 0..rows {
            for dim in 0..d {
                pool[[row, dim]] = axis_value(dim, index[dim]);
            }
            // odometer increment
            for dim in (0..d).rev() {
                index[dim] += 1;
                if index[dim] < per_axis {
                    break;
                }
                index[dim] = 0;
            }
        }
        return Ok(pool);
    }

    // Sample distinct index tuples; collisions are rare since cap ≪ total.
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(cap);
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(cap);
    while rows.len() < cap {
        let tuple: Vec<u32> = (0..d)
            .map(|_| rng.random_range(0..per_axis) as u32)
            .collect();
        if seen.insert(tuple.clone()) {
            rows.push(tuple);
        }
    }
    let mut pool = Array2::zeros((cap, d));
    for (row, tuple) in rows.iter().enumerate() {
        for dim in 0..d {
            pool[[row, dim]] = axis_value(dim, tuple[dim] as usize);
        }
    }
    Ok(pool)
}
