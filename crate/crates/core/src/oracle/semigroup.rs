//! Transition probabilities `P_t(x, y)` of a reflected chain.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::stationary_distribution;
use crate::error::{Error, Result};
use crate::walker::ReflectedChain;

/// Intervals up to this many sites use the dense matrix exponential.
pub const DENSE_EXPONENTIAL_MAX_SITES: usize = 30;

/// Row-stochastic table `P_t(x, y)` over the chain's sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub a: i64,
    pub t: f64,
    pub probabilities: Vec<Vec<f64>>,
}

impl TransitionTable {
    pub fn get(&self, x: i64, y: i64) -> Option<f64> {
        let row = self.probabilities.get(usize::try_from(x - self.a).ok()?)?;
        row.get(usize::try_from(y - self.a).ok()?).copied()
    }

    /// `max_x |Σ_y P_t(x, y) − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.probabilities.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max_{x,y} |θₓ P_t(x, y) − θ_y P_t(y, x)|` for the normalized weights `mu`.
    pub fn detailed_balance_residual(&self, mu: &[f64]) -> f64 {
        let p = &self.probabilities;
        let mut worst: f64 = 0.0;
        for x in 0..p.len() {
            for y in 0..x {
                worst = worst.max((mu[x] * p[x][y] - mu[y] * p[y][x]).abs());
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,p\n");
        for (i, row) in self.probabilities.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", self.a + i as i64, self.a + j as i64, p));
            }
        }
        s
    }
}

fn generator_matrix(chain: &ReflectedChain) -> DMatrix<f64> {
    let r = chain.rates_slice();
    let n = r.len();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        q[(i, i)] = -(r[i].minus + r[i].plus);
        if i > 0 {
            q[(i, i - 1)] = r[i].minus;
        }
        if i + 1 < n {
            q[(i, i + 1)] = r[i].plus;
        }
    }
    q
}

fn spectral_exponential(chain: &ReflectedChain, t: f64) -> DMatrix<f64> {
    let n = chain.len();
    let mu = stationary_distribution(chain);
    let r = chain.rates_slice();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = -(r[i].minus + r[i].plus);
        if i + 1 < n {
            let off = (r[i].plus * r[i + 1].minus).sqrt();
            s[(i, i + 1)] = off;
            s[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(s);
    let u = &eig.eigenvectors;
    let decay = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (l.min(0.0) * t).exp()));
    let sym = u * decay * u.transpose();
    DMatrix::from_fn(n, n, |i, j| sym[(i, j)] * (mu[j] / mu[i]).sqrt())
}

/// `e^{tℒ}` for the reflected chain.
///
/// Up to [`DENSE_EXPONENTIAL_MAX_SITES`] sites this is the dense matrix
/// exponential; larger chains go through the eigendecomposition of the
/// `μ`-symmetrized generator.
pub fn semigroup(chain: &ReflectedChain, t: f64) -> Result<TransitionTable> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be finite and non-negative, got {t}")));
    }
    let n = chain.len();
    let p = if n <= DENSE_EXPONENTIAL_MAX_SITES {
        (generator_matrix(chain) * t).exp()
    } else {
        spectral_exponential(chain, t)
    };
    let probabilities = (0..n).map(|i| (0..n).map(|j| p[(i, j)].max(0.0)).collect()).collect();
    Ok(TransitionTable { a: chain.a, t, probabilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{DistributionSpec, Environment, Window};
    use crate::walker::reflect;

    #[test]
    fn zero_time_is_identity() {
        let env = Environment::sample(&DistributionSpec::default_two_point(), 1, Window::symmetric(10));
        let table = semigroup(&reflect(&env, -5, 5).unwrap(), 0.0).unwrap();
        for x in -5..=5 {
            for y in -5..=5 {
                assert_eq!(table.get(x, y).unwrap(), if x == y { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn reversible_and_stochastic() {
        let spec = DistributionSpec::log_uniform(1.0).unwrap();
        for seed in 0..5 {
            let env = Environment::sample(&spec, seed, Window::symmetric(20));
            for (a, b) in [(-10, 10), (-20, 20)] {
                let chain = reflect(&env, a, b).unwrap();
                let mu = stationary_distribution(&chain);
                let table = semigroup(&chain, 3.5).unwrap();
                assert!(table.row_sum_error() < 1e-10);
                assert!(table.detailed_balance_residual(&mu) < 1e-8);
            }
        }
    }

    #[test]
    fn long_time_rows_approach_mu() {
        let env = Environment::sample(&DistributionSpec::default_two_point(), 4, Window::symmetric(10));
        let chain = reflect(&env, -4, 4).unwrap();
        let mu = stationary_distribution(&chain);
        let table = semigroup(&chain, 1e4).unwrap();
        for row in &table.probabilities {
            for (p, m) in row.iter().zip(&mu) {
                assert!((p - m).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn dense_and_spectral_paths_agree() {
        let env = Environment::sample(&DistributionSpec::default_two_point(), 9, Window::symmetric(20));
        let chain = reflect(&env, -12, 12).unwrap();
        for t in [0.1, 2.0, 50.0] {
            let dense = (generator_matrix(&chain) * t).exp();
            let spectral = spectral_exponential(&chain, t);
            assert!((dense - spectral).amax() < 1e-10);
        }
        let wide = reflect(&env, -16, 16).unwrap();
        assert!(wide.len() > DENSE_EXPONENTIAL_MAX_SITES);
        let table = semigroup(&wide, 2.0).unwrap();
        assert!(table.row_sum_error() < 1e-10);
    }
}
