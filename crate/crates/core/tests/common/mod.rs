//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sinai_lab::environment::Environment;
use sinai_lab::landscape::{FunctionKind, SampledFunction};

/// Stable points by the literal definition, scanning out from every index.
/// Returns `(stable, undecided)` as indices.
pub fn literal_stable_points(values: &[f64], log_t: f64) -> (Vec<usize>, Vec<usize>) {
    let n = values.len();
    let mut stable = Vec::new();
    let mut undecided = Vec::new();
    for m in 0..n {
        let target = values[m] + log_t;
        let l = (0..m).rev().find(|&i| values[i] >= target);
        let r = (m + 1..n).find(|&i| values[i] >= target);
        let lo = l.unwrap_or(0);
        let hi = r.unwrap_or(n - 1);
        // leftmost argmin on [lo, hi]
        let mut best = lo;
        for i in lo..=hi {
            if values[i] < values[best] {
                best = i;
            }
        }
        if best != m {
            continue;
        }
        if l.is_some() && r.is_some() {
            stable.push(m);
        } else {
            undecided.push(m);
        }
    }
    (stable, undecided)
}

/// Leftmost argmax of each gap between consecutive stable indices.
pub fn literal_peaks(values: &[f64], stable: &[usize]) -> Vec<usize> {
    stable
        .windows(2)
        .map(|w| {
            let mut best = w[0];
            for i in w[0]..=w[1] {
                if values[i] > values[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Random walk path with `n` steps on the integers, values rounded to
/// multiples of 1/8 so ties occur.
pub fn random_path(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0];
    for _ in 1..n {
        let step: f64 = rng.random_range(-1.0..1.0);
        let last = *v.last().unwrap();
        v.push(last + (step * 16.0).round() / 8.0);
    }
    v
}

pub fn sampled(values: Vec<f64>, first: i64) -> SampledFunction {
    SampledFunction::on_integers(first, values, FunctionKind::Generic).unwrap()
}

/// `P_z(τ_a < τ_b)` for all `a < z < b` by a dense solve of the harmonic equations.
pub fn dense_ruin(env: &Environment, a: i64, b: i64) -> Vec<f64> {
    let n = (b - a - 1) as usize;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for k in 0..n {
        let r = env.rates(a + 1 + k as i64).unwrap();
        m[(k, k)] = r.minus + r.plus;
        if k > 0 {
            m[(k, k - 1)] = -r.minus;
        } else {
            rhs[k] = r.minus;
        }
        if k + 1 < n {
            m[(k, k + 1)] = -r.plus;
        }
    }
    m.lu().solve(&rhs).unwrap().iter().copied().collect()
}

/// Potential by direct summation of `log(ω⁻/ω⁺)`.
pub fn summed_potential(env: &Environment, x: i64) -> f64 {
    let term = |i: i64| {
        let r = env.rates(i).unwrap();
        (r.minus / r.plus).ln()
    };
    if x >= 0 {
        (1..=x).map(term).sum()
    } else {
        -(x + 1..=0).map(term).sum::<f64>()
    }
}
