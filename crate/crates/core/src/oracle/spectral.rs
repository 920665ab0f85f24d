//! Spectral gap of a reflected chain.
//!
//! The chain's negative generator, symmetrized by `diag(μ)^{1/2}`, factors as
//! `S = GᵀG` with `G` the `(n−1)×n` bidiagonal edge matrix
//! `G[e, e] = −√ω⁺_e`, `G[e, e+1] = √ω⁻_{e+1}`. The nonzero spectrum of `S`
//! is the spectrum of the positive definite `T = GGᵀ`, and the gap is its
//! smallest eigenvalue. Eigenvalues are counted with the stationary qds
//! recurrence, which has no cancellation, so the gap is found to full
//! relative accuracy by bisection even when it is far below machine epsilon
//! relative to the rates.

use serde::{Deserialize, Serialize};

use super::stationary_distribution;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::landscape::{elevation, FunctionKind, SampledFunction, TimeScale};
use crate::walker::{reflect, ReflectedChain};

/// Spectral gap of a reflected chain and its comparison with the elevation
/// of the potential on the same interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub interval: (i64, i64),
    pub lambda: f64,
    pub elevation_value: f64,
    /// `|log λ + elevation|`.
    pub residual: f64,
    /// Dirichlet form of the computed eigenfunction at `μ`-mean 0 and `μ`-variance 1.
    pub variational_lambda: f64,
    /// `|variational_lambda / λ − 1|`.
    pub variational_error: f64,
}

struct Edges {
    /// `a_e² = ω⁺_e`
    a2: Vec<f64>,
    /// `b_e² = ω⁻_{e+1}`
    b2: Vec<f64>,
}

impl Edges {
    fn new(chain: &ReflectedChain) -> Self {
        let r = chain.rates_slice();
        let m = r.len() - 1;
        Self { a2: (0..m).map(|e| r[e].plus).collect(), b2: (0..m).map(|e| r[e + 1].minus).collect() }
    }

    fn len(&self) -> usize {
        self.a2.len()
    }

    /// Pivots of `T − sI = LDLᵀ`.
    fn pivots(&self, s: f64, out: &mut Vec<f64>) {
        out.clear();
        let mut t = self.a2[0] - s;
        for e in 0..self.len() {
            let mut d = self.b2[e] + t;
            if d == 0.0 {
                d = -f64::MIN_POSITIVE;
            }
            out.push(d);
            if e + 1 < self.len() {
                t = self.a2[e + 1] * (t / d) - s;
            }
        }
    }

    /// Number of eigenvalues of `T` below `s`.
    fn count_below(&self, s: f64, buf: &mut Vec<f64>) -> usize {
        self.pivots(s, buf);
        buf.iter().filter(|&&d| d < 0.0).count()
    }

    /// Solve `(T − sI) y = x` in place for `s` below the spectrum.
    fn solve_shifted(&self, s: f64, x: &mut [f64], d: &mut Vec<f64>) {
        self.pivots(s, d);
        let m = self.len();
        // L[e+1, e] = −√(b_e² a_{e+1}²) / d_e
        let off: Vec<f64> = (0..m.saturating_sub(1)).map(|e| (self.b2[e] * self.a2[e + 1]).sqrt()).collect();
        for e in 1..m {
            x[e] += off[e - 1] / d[e - 1] * x[e - 1];
        }
        x[m - 1] /= d[m - 1];
        for e in (0..m - 1).rev() {
            x[e] = x[e] / d[e] + off[e] / d[e] * x[e + 1];
        }
    }
}

fn smallest_eigenvalue(edges: &Edges) -> f64 {
    let m = edges.len();
    if m == 1 {
        return edges.a2[0] + edges.b2[0];
    }
    let mut buf = Vec::with_capacity(m);
    // Rayleigh quotients at unit vectors bound it from above
    let mut hi = (0..m).map(|e| edges.a2[e] + edges.b2[e]).fold(f64::INFINITY, f64::min);
    let mut lo = hi;
    while edges.count_below(lo, &mut buf) > 0 {
        lo *= 1e-8;
        if lo < 1e-300 {
            return lo;
        }
    }
    // geometric bisection: relative precision is what matters
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        if edges.count_below(mid, &mut buf) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of `T` for `lambda` by shifted inverse iteration; all entries
/// stay positive, so every operation is an addition.
fn edge_eigenvector(edges: &Edges, lambda: f64) -> Vec<f64> {
    let m = edges.len();
    let mut y = vec![1.0; m];
    let mut d = Vec::with_capacity(m);
    let shift = lambda * (1.0 - 1e-6);
    for _ in 0..100 {
        let prev = y.clone();
        edges.solve_shifted(shift, &mut y, &mut d);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let change = y.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < 1e-15 {
            break;
        }
    }
    y
}

/// Eigenfunction `g` of `−ℒ` for the gap, `μ`-centered with `μ`-variance 1.
fn eigenfunction(chain: &ReflectedChain, edges: &Edges, lambda: f64, mu: &[f64]) -> Vec<f64> {
    let y = edge_eigenvector(edges, lambda);
    let r = chain.rates_slice();
    // G diag(√μ) g = √λ y, and both entries in row e reduce to √(μ_e ω⁺_e)
    let mut g = vec![0.0; r.len()];
    for e in 0..edges.len() {
        let conductance = mu[e] * r[e].plus;
        g[e + 1] = g[e] + lambda.sqrt() * y[e] / conductance.sqrt();
    }
    let mean: f64 = g.iter().zip(mu).map(|(g, m)| g * m).sum();
    g.iter_mut().for_each(|v| *v -= mean);
    let var: f64 = g.iter().zip(mu).map(|(g, m)| g * g * m).sum();
    let sd = var.sqrt();
    g.iter_mut().for_each(|v| *v /= sd);
    g
}

/// Spectral gap of `chain`, with the elevation of its potential and a
/// variational self-check.
pub fn spectral_gap(chain: &ReflectedChain) -> Result<SpectralReport> {
    if chain.len() < 2 {
        return Err(Error::InvalidArgument("spectral gap needs at least two sites".into()));
    }
    let edges = Edges::new(chain);
    let lambda = smallest_eigenvalue(&edges);
    let mu = stationary_distribution(chain);
    let g = eigenfunction(chain, &edges, lambda, &mu);
    let r = chain.rates_slice();
    let variational: f64 = (0..edges.len()).map(|e| (g[e + 1] - g[e]).powi(2) * r[e].plus * mu[e]).sum();

    let v = SampledFunction::on_integers(chain.a, chain.potential().to_vec(), FunctionKind::PotentialV)?;
    let elev = elevation(&v, (chain.a as f64, chain.b as f64))?;
    Ok(SpectralReport {
        interval: (chain.a, chain.b),
        lambda,
        elevation_value: elev,
        residual: (lambda.ln() + elev).abs(),
        variational_lambda: variational,
        variational_error: (variational / lambda - 1.0).abs(),
    })
}

/// `|log λ + elevation| / log t` for the walk reflected on `interval`.
pub fn gap_elevation_residual(env: &Environment, interval: (i64, i64), t: TimeScale) -> Result<f64> {
    let chain = reflect(env, interval.0, interval.1)?;
    Ok(spectral_gap(&chain)?.residual / t.log_t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{DistributionSpec, Rates, Window};
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense_gap(chain: &ReflectedChain) -> f64 {
        let n = chain.len();
        let r = chain.rates_slice();
        let mut s = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            s[(i, i)] = r[i].minus + r[i].plus;
            if i + 1 < n {
                let off = -(r[i].plus * r[i + 1].minus).sqrt();
                s[(i, i + 1)] = off;
                s[(i + 1, i)] = off;
            }
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev[1]
    }

    #[test]
    fn two_state_gap_is_exact() {
        let chain = ReflectedChain::from_rates(0, vec![Rates::new(0.3, 1.7), Rates::new(0.6, 2.2)]).unwrap();
        let rep = spectral_gap(&chain).unwrap();
        assert_eq!(rep.lambda, 1.7 + 0.6);
        let unit = ReflectedChain::from_rates(0, vec![Rates::new(1.0, 1.0); 2]).unwrap();
        assert_eq!(spectral_gap(&unit).unwrap().lambda, 2.0);
    }

    #[test]
    fn flat_chain_gap() {
        for n in [3usize, 8, 50, 400] {
            let chain = ReflectedChain::from_rates(0, vec![Rates::new(1.0, 1.0); n]).unwrap();
            let lambda = spectral_gap(&chain).unwrap().lambda;
            let exact = 2.0 * (1.0 - (std::f64::consts::PI / n as f64).cos());
            assert!((lambda - exact).abs() < 1e-8 * exact.max(1e-3), "n = {n}");
        }
    }

    #[test]
    fn matches_dense_solver_on_small_chains() {
        let spec = DistributionSpec::log_uniform(1.0).unwrap();
        for seed in 0..10 {
            let env = Environment::sample(&spec, seed, Window::symmetric(20));
            let chain = reflect(&env, -12, 12).unwrap();
            let rep = spectral_gap(&chain).unwrap();
            let dense = dense_gap(&chain);
            assert!((rep.lambda - dense).abs() < 1e-9 * dense.max(1e-6), "seed {seed}");
            assert!(rep.variational_error < 1e-8);
        }
    }

    #[test]
    fn tiny_gaps_keep_relative_accuracy() {
        // deep double well: V rises by 40 then falls back
        let spec = DistributionSpec::default_two_point();
        let mut inc = vec![1.0; 81];
        inc[0] = 0.0;
        for d in inc.iter_mut().skip(41) {
            *d = -1.0;
        }
        let mut rates: Vec<f64> = vec![-1.0; 20];
        rates.extend(inc.iter().copied());
        rates.extend(std::iter::repeat_n(1.0, 20));
        let env = Environment::from_log_ratios(&spec, 0, &rates).unwrap();
        let chain = reflect(&env, 0, env.window().hi).unwrap();
        let rep = spectral_gap(&chain).unwrap();
        assert!(rep.lambda > 0.0 && rep.lambda < 1e-15);
        assert!(rep.variational_error < 1e-8, "{rep:?}");
        assert!(rep.residual / (rep.elevation_value) < 0.2, "{rep:?}");
    }
}
