//! Small statistics toolkit: stable log-sum-exp, binomial intervals and
//! Kolmogorov–Smirnov tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

/// `log(Σ exp(xᵢ))` without overflow. Empty input gives `-inf`.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Binomial proportion with a Wilson score interval at `z` standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub z: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, z: f64) -> Self {
        if trials == 0 {
            return Self {
                successes,
                trials,
                estimate: f64::NAN,
                lower: 0.0,
                upper: 1.0,
                z,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            estimate: p,
            lower: if successes == 0 { 0.0 } else { (center - half).max(0.0) },
            upper: if successes == trials { 1.0 } else { (center + half).min(1.0) },
            z,
        }
    }

    /// Plain binomial standard error at the point estimate.
    pub fn standard_error(&self) -> f64 {
        let n = self.trials as f64;
        (self.estimate * (1.0 - self.estimate) / n).sqrt()
    }

    /// Whether `p` lies within `z` binomial standard errors of the estimate,
    /// with the standard error evaluated at `p` itself. For rare events the
    /// exact binomial tail beyond the observed count is used as well: it must
    /// not be smaller than the normal tail at `z`.
    pub fn consistent_with(&self, p: f64, z: f64) -> bool {
        let n = self.trials as f64;
        let se = (p * (1.0 - p) / n).sqrt();
        if (self.estimate - p).abs() <= z * se + 0.5 / n {
            return true;
        }
        let Ok(law) = Binomial::new(p.clamp(0.0, 1.0), self.trials) else {
            return false;
        };
        let k = self.successes;
        let tail = if k as f64 > p * n { law.sf(k - 1) } else { law.cdf(k) };
        tail >= Normal::standard().cdf(-z)
    }
}

/// Kolmogorov distribution survival function `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if (k as u64) % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sq = n.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d),
    }
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_and_survives_large_inputs() {
        let xs = [0.1, -2.0, 3.5];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs) - naive).abs() < 1e-14);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let p = Proportion::new(30, 100, 2.0);
        assert!(p.lower < 0.3 && 0.3 < p.upper);
        let zero = Proportion::new(0, 100, 3.0);
        assert_eq!(zero.lower, 0.0);
        assert!((zero.upper - 9.0 / 109.0).abs() < 1e-12);
    }

    #[test]
    fn rare_events_use_the_exact_tail() {
        let one = Proportion::new(1, 100, 3.0);
        assert!(one.consistent_with(1.4e-4, 3.0));
        assert!(!one.consistent_with(1e-6, 3.0));
        assert!(!Proportion::new(6, 100, 3.0).consistent_with(2.7e-5, 3.0));
        assert!(Proportion::new(500, 1000, 3.0).consistent_with(0.5, 3.0));
    }

    #[test]
    fn kolmogorov_tail_known_points() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.010
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 1e-3);
    }

    #[test]
    fn ks_two_sample_identical_is_one() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn ks_two_sample_detects_shift() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| i as f64 + 100.0).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }
}
