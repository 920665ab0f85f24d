//! Exact computations the simulations are checked against.
//!
//! Sums of `e^V` are evaluated in log space; linear systems are solved with
//! recurrences that never subtract, so results keep full relative accuracy
//! even when probabilities are astronomically small.

mod semigroup;
mod spectral;
mod transient;

pub use semigroup::{semigroup, TransitionTable, DENSE_EXPONENTIAL_MAX_SITES};
pub use spectral::{gap_elevation_residual, spectral_gap, SpectralReport};
pub use transient::{transient_law, Boundary, TransientLaw};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::landscape::potential;
use crate::stats::log_sum_exp;
use crate::walker::ReflectedChain;

fn check_in_window(env: &Environment, xs: &[i64]) -> Result<()> {
    let w = env.window();
    match xs.iter().find(|&&x| !w.contains(x)) {
        Some(x) => Err(Error::WindowExhausted(format!("site {x} outside [{}, {}]", w.lo, w.hi))),
        None => Ok(()),
    }
}

/// `P_z(τ_a < τ_b)` as `Σ_{i=z}^{b−1} e^{V(i)} / Σ_{j=a}^{b−1} e^{V(j)}`.
pub fn ruin_probability(env: &Environment, a: i64, z: i64, b: i64) -> Result<f64> {
    if !(a < z && z < b) {
        return Err(Error::InvalidArgument(format!("need a < z < b, got {a}, {z}, {b}")));
    }
    check_in_window(env, &[a, b])?;
    let v = potential(env);
    let lo = env.window().lo;
    let vals = v.values();
    let at = |x: i64| vals[(x - lo) as usize];
    let num = log_sum_exp((z..b).map(at));
    let den = log_sum_exp((a..b).map(at));
    Ok((num - den).exp())
}

/// `P_z(τ_a < τ_b)` for every `a < z < b`, from the harmonic equations
/// `(ω⁻_z + ω⁺_z) p(z) = ω⁻_z p(z−1) + ω⁺_z p(z+1)` with `p(a) = 1`, `p(b) = 0`.
pub fn absorption_solve(env: &Environment, a: i64, b: i64) -> Result<Vec<f64>> {
    if b - a < 2 {
        return Err(Error::InvalidArgument(format!("need b − a ≥ 2, got [{a}, {b}]")));
    }
    check_in_window(env, &[a, b])?;
    let n = (b - a - 1) as usize;
    let rates: Vec<_> = (a + 1..b).map(|z| env.rates(z).expect("checked")).collect();
    // eliminate p(z−1) going right; pivots are d = ω⁺ + s with s ≥ 0
    let mut d = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut s = rates[0].minus;
    d[0] = rates[0].plus + s;
    r[0] = rates[0].minus;
    for k in 1..n {
        let w = rates[k];
        s = w.minus * s / d[k - 1];
        d[k] = w.plus + s;
        r[k] = w.minus * r[k - 1] / d[k - 1];
    }
    let mut p = vec![0.0; n];
    p[n - 1] = r[n - 1] / d[n - 1];
    for k in (0..n - 1).rev() {
        p[k] = (r[k] + rates[k].plus * p[k + 1]) / d[k];
    }
    Ok(p)
}

/// `f(x) = Σ_{i=a}^{x−1} e^{V(i)−V(a)}`; `f(a) = 0`.
pub fn lyapunov(env: &Environment, a: i64, x: i64) -> Result<f64> {
    if x < a {
        return Err(Error::InvalidArgument(format!("need x ≥ a, got x = {x}, a = {a}")));
    }
    check_in_window(env, &[a, x])?;
    let v = potential(env);
    let lo = env.window().lo;
    let va = v.value((a - lo) as usize);
    Ok((a..x).map(|i| (v.value((i - lo) as usize) - va).exp()).sum())
}

/// `μ(x) = θₓ / Σ θ` on the chain's interval.
pub fn stationary_distribution(chain: &ReflectedChain) -> Vec<f64> {
    let r = chain.rates_slice();
    let mut log_theta = vec![0.0; r.len()];
    for i in 1..r.len() {
        log_theta[i] = log_theta[i - 1] + (r[i - 1].plus / r[i].minus).ln();
    }
    let z = log_sum_exp(log_theta.iter().copied());
    log_theta.iter().map(|l| (l - z).exp()).collect()
}

/// `(ℒg)(x) = (g(x+1) − g(x)) ω̂⁺ₓ + (g(x−1) − g(x)) ω̂⁻ₓ`.
pub fn generator_apply(chain: &ReflectedChain, g: &[f64]) -> Result<Vec<f64>> {
    let r = chain.rates_slice();
    if g.len() != r.len() {
        return Err(Error::InvalidArgument(format!("function has {} values for {} sites", g.len(), r.len())));
    }
    let n = g.len();
    Ok((0..n)
        .map(|i| {
            let mut out = 0.0;
            if i + 1 < n {
                out += (g[i + 1] - g[i]) * r[i].plus;
            }
            if i > 0 {
                out += (g[i - 1] - g[i]) * r[i].minus;
            }
            out
        })
        .collect())
}

/// `Σ_{x∈[a,b)} (g(x+1) − g(x))² ω̂⁺ₓ μ(x)`.
pub fn dirichlet_form(chain: &ReflectedChain, g: &[f64]) -> Result<f64> {
    let r = chain.rates_slice();
    if g.len() != r.len() {
        return Err(Error::InvalidArgument(format!("function has {} values for {} sites", g.len(), r.len())));
    }
    let mu = stationary_distribution(chain);
    Ok((0..g.len().saturating_sub(1)).map(|i| (g[i + 1] - g[i]).powi(2) * r[i].plus * mu[i]).sum())
}

/// `max_y |(μℒ)(y)|`, the global-balance residual of `μ`.
pub fn balance_residual(chain: &ReflectedChain, mu: &[f64]) -> f64 {
    let r = chain.rates_slice();
    let n = r.len();
    (0..n)
        .map(|y| {
            let mut inflow = 0.0;
            if y > 0 {
                inflow += mu[y - 1] * r[y - 1].plus;
            }
            if y + 1 < n {
                inflow += mu[y + 1] * r[y + 1].minus;
            }
            (inflow - mu[y] * (r[y].minus + r[y].plus)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{DistributionSpec, Rates, Window};
    use crate::walker::reflect;

    fn flat(r: i64) -> Environment {
        let spec = DistributionSpec::default_two_point();
        Environment::from_rates(&spec, 0, -r, vec![Rates::new(1.0, 1.0); (2 * r + 1) as usize]).unwrap()
    }

    #[test]
    fn flat_ruin() {
        let env = flat(10);
        assert!((ruin_probability(&env, 0, 1, 4).unwrap() - 0.75).abs() < 1e-15);
        let p = absorption_solve(&env, 0, 10).unwrap();
        for (k, pk) in p.iter().enumerate() {
            let z = k as f64 + 1.0;
            assert!((pk - (10.0 - z) / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_step_ruin() {
        let env = Environment::sample(&DistributionSpec::log_uniform(1.5).unwrap(), 3, Window::symmetric(5));
        let r = env.rates(1).unwrap();
        let p = ruin_probability(&env, 0, 1, 2).unwrap();
        assert!((p - r.minus / r.total()).abs() < 1e-15);
        assert!((absorption_solve(&env, 0, 2).unwrap()[0] - p).abs() < 1e-15);
    }

    #[test]
    fn three_site_example() {
        // V = [0, 1, -1] on {0, 1, 2}
        let spec = DistributionSpec::default_two_point();
        let env = Environment::from_log_ratios(&spec, 0, &[0.0, 1.0, -2.0, 0.0]).unwrap();
        let e = 1.0f64.exp();
        let expect = (e + 1.0 / e) / (1.0 + e + 1.0 / e);
        let p = ruin_probability(&env, 0, 1, 3).unwrap();
        assert!((p - expect).abs() < 1e-12);
        assert!((p - 0.75527).abs() < 1e-5);
        let q = absorption_solve(&env, 0, 3).unwrap();
        assert!(((q[0] - p) / p).abs() < 1e-10);
    }

    #[test]
    fn high_barrier_next_to_a() {
        let spec = DistributionSpec::default_two_point();
        let mut inc = vec![-1.0; 40];
        inc[0] = 0.0;
        inc[1] = 60.0;
        let env = Environment::from_log_ratios(&spec, 0, &inc).unwrap();
        let p = absorption_solve(&env, 0, 39).unwrap();
        assert!(p[0] > 0.999);
    }

    #[test]
    fn lyapunov_basics() {
        let env = flat(10);
        assert_eq!(lyapunov(&env, -3, -3).unwrap(), 0.0);
        assert!((lyapunov(&env, -3, 4).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_two_sites() {
        let env = Environment::sample(&DistributionSpec::log_uniform(1.0).unwrap(), 1, Window::symmetric(3));
        let chain = reflect(&env, 0, 1).unwrap();
        let mu = stationary_distribution(&chain);
        let t1 = env.rates(0).unwrap().plus / env.rates(1).unwrap().minus;
        assert!((mu[0] - 1.0 / (1.0 + t1)).abs() < 1e-15);
        assert!((mu[1] - t1 / (1.0 + t1)).abs() < 1e-15);
        let flat_mu = stationary_distribution(&reflect(&flat(5), -2, 2).unwrap());
        assert!(flat_mu.iter().all(|m| (m - 0.2).abs() < 1e-15));
    }

    #[test]
    fn generator_kills_constants_and_identity() {
        let chain = reflect(&flat(6), -4, 4).unwrap();
        assert!(generator_apply(&chain, &[3.0; 9]).unwrap().iter().all(|&v| v == 0.0));
        let id: Vec<f64> = (-4..=4).map(|x| x as f64).collect();
        let lg = generator_apply(&chain, &id).unwrap();
        assert!(lg[1..8].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_form_matches_generator() {
        let env = Environment::sample(&DistributionSpec::default_two_point(), 12, Window::symmetric(20));
        let chain = reflect(&env, -10, 15).unwrap();
        let mu = stationary_distribution(&chain);
        let g: Vec<f64> = (0..chain.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let lg = generator_apply(&chain, &g).unwrap();
        let inner: f64 = -(0..g.len()).map(|i| lg[i] * g[i] * mu[i]).sum::<f64>();
        let d = dirichlet_form(&chain, &g).unwrap();
        assert!((d - inner).abs() < 1e-10 * d.abs().max(1.0));
        assert!(balance_residual(&chain, &mu) < 1e-12);
    }
}
