//! Time-`t` law of the walk on an interval, by uniformization.
//!
//! The chain on `[a, b]` is run at the constant rate `Λ = max (ω⁻ₓ + ω⁺ₓ)`;
//! the law at time `t` is the Poisson(`Λt`) mixture of the embedded
//! discrete-time chain. All arithmetic adds nonnegative terms, so small
//! escape or survival probabilities keep their relative accuracy.

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, Rates};
use crate::error::{Error, Result};

/// What the walk does at `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// The walk stops on reaching `a` or `b`.
    Absorbing,
    /// Outward rates at `a` and `b` are zeroed.
    Reflecting,
}

/// Law at each requested time; `law[k][x − a]` is `P_start(ξ_{times[k]} = x)`.
/// For absorbing boundaries the endpoint entries hold the absorbed mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientLaw {
    pub a: i64,
    pub b: i64,
    pub start: i64,
    pub boundary: Boundary,
    pub times: Vec<f64>,
    pub law: Vec<Vec<f64>>,
}

impl TransientLaw {
    /// Mass strictly inside `(a, b)` at `times[k]`.
    pub fn interior_mass(&self, k: usize) -> f64 {
        let row = &self.law[k];
        row[1..row.len() - 1].iter().sum()
    }

    /// Mass at `a` and `b` at `times[k]`.
    pub fn endpoint_mass(&self, k: usize) -> f64 {
        let row = &self.law[k];
        row[0] + row[row.len() - 1]
    }

    pub fn probability(&self, k: usize, x: i64) -> Option<f64> {
        self.law.get(k)?.get(usize::try_from(x - self.a).ok()?).copied()
    }
}

/// Poisson(`mean`) weights above `e^{-700}`, as `(first index, weights)`.
fn poisson_weights(mean: f64) -> (usize, Vec<f64>) {
    if mean == 0.0 {
        return (0, vec![1.0]);
    }
    let hi = (mean + 14.0 * mean.sqrt() + 40.0).ceil() as usize;
    let lm = mean.ln();
    let mut logw = -mean;
    let mut first = None;
    let mut w = Vec::new();
    for k in 0..=hi {
        if k > 0 {
            logw += lm - (k as f64).ln();
        }
        if logw > -700.0 {
            first.get_or_insert(k);
            w.push(logw.exp());
        } else if first.is_some() && (k as f64) > mean {
            break;
        } else if first.is_some() {
            w.push(0.0);
        }
    }
    // the running log loses ~1e-11 over long recursions; the truncated tail is far smaller
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    (first.unwrap_or(0), w)
}

/// Law of the walk started at `start` on `[a, b]` at each of `times`.
pub fn transient_law(
    env: &Environment,
    a: i64,
    b: i64,
    boundary: Boundary,
    start: i64,
    times: &[f64],
) -> Result<TransientLaw> {
    if b <= a {
        return Err(Error::InvalidArgument(format!("need a < b, got [{a}, {b}]")));
    }
    if !(a <= start && start <= b) {
        return Err(Error::InvalidArgument(format!("start {start} outside [{a}, {b}]")));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidArgument(format!("times must be finite and non-negative, got {t}")));
    }
    let w = env.window();
    if !(w.contains(a) && w.contains(b)) {
        return Err(Error::WindowExhausted(format!("[{a}, {b}] outside [{}, {}]", w.lo, w.hi)));
    }
    let n = (b - a + 1) as usize;
    let mut rates: Vec<Rates> = (a..=b).map(|x| env.rates(x).expect("checked")).collect();
    match boundary {
        Boundary::Absorbing => {
            rates[0] = Rates::new(0.0, 0.0);
            rates[n - 1] = Rates::new(0.0, 0.0);
        }
        Boundary::Reflecting => {
            rates[0].minus = 0.0;
            rates[n - 1].plus = 0.0;
        }
    }
    let lambda = rates.iter().map(Rates::total).fold(0.0, f64::max);
    let stay: Vec<f64> = rates.iter().map(|r| 1.0 - r.total() / lambda).collect();
    let right: Vec<f64> = rates.iter().map(|r| r.plus / lambda).collect();
    let left: Vec<f64> = rates.iter().map(|r| r.minus / lambda).collect();

    let weights: Vec<(usize, Vec<f64>)> = times.iter().map(|&t| poisson_weights(lambda * t)).collect();
    let last = weights.iter().map(|(f, w)| f + w.len()).max().unwrap_or(0);
    let mut law = vec![vec![0.0; n]; times.len()];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    p[(start - a) as usize] = 1.0;
    for k in 0..last {
        for (j, (first, w)) in weights.iter().enumerate() {
            if k >= *first && k - first < w.len() {
                let wk = w[k - first];
                if wk > 0.0 {
                    law[j].iter_mut().zip(&p).for_each(|(l, v)| *l += wk * v);
                }
            }
        }
        for x in 0..n {
            let mut v = p[x] * stay[x];
            if x > 0 {
                v += p[x - 1] * right[x - 1];
            }
            if x + 1 < n {
                v += p[x + 1] * left[x + 1];
            }
            q[x] = v;
        }
        std::mem::swap(&mut p, &mut q);
    }
    Ok(TransientLaw { a, b, start, boundary, times: times.to_vec(), law })
}
