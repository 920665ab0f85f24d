//! Potential landscape and valley analytics.
//!
//! Everything here operates on a [`SampledFunction`], a finite sample of a
//! real function on a strictly increasing grid. That covers the potential `V`
//! of an environment (integer grid) as well as discretized Brownian paths.
//! Extrema are always taken over grid points, and ties in argmin/argmax are
//! broken toward the leftmost index.

mod coupling;
mod export;
mod stable;
mod valley;

pub use coupling::{brownian_path, skorokhod_couple, CoupledPair, DEFAULT_BROWNIAN_STEP};
pub use export::{landscape_svg, potential_csv, SvgOptions};
pub use stable::{
    find_peaks, find_stable_points, stable_landscape, Landmarks, StableLandscape, StablePoints, WellSide,
};
pub use valley::{
    depth, elevation, elevation_pairwise, elevation_unchecked, neighborhood, Neighborhood, WellRecord,
    ELEVATION_CROSS_CHECK_MAX_SITES,
};

use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    PotentialV,
    BrownianW,
    Generic,
}

/// Ordered finite sample of a real function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    positions: Vec<f64>,
    values: Vec<f64>,
    kind: FunctionKind,
}

impl SampledFunction {
    pub fn new(positions: Vec<f64>, values: Vec<f64>, kind: FunctionKind) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions but {} values",
                positions.len(),
                values.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        if positions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("positions must be strictly increasing".into()));
        }
        if values.iter().chain(&positions).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self { positions, values, kind })
    }

    /// Values at consecutive integer positions starting from `first`.
    pub fn on_integers(first: i64, values: Vec<f64>, kind: FunctionKind) -> Result<Self> {
        let positions = (0..values.len()).map(|i| (first + i as i64) as f64).collect();
        Self::new(positions, values, kind)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, i: usize) -> f64 {
        self.positions[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Index of an exact grid position.
    pub fn index_of(&self, pos: f64) -> Option<usize> {
        self.positions.binary_search_by(|p| p.total_cmp(&pos)).ok()
    }

    /// Value at an exact grid position.
    pub fn at(&self, pos: f64) -> Option<f64> {
        self.index_of(pos).map(|i| self.values[i])
    }

    /// Index range covering the closed position interval `[a, b]`.
    pub fn index_range(&self, a: f64, b: f64) -> Option<(usize, usize)> {
        let lo = self.positions.partition_point(|&p| p < a);
        let hi = self.positions.partition_point(|&p| p <= b);
        (lo < hi).then(|| (lo, hi - 1))
    }

    /// `x ↦ a·f(x/a²)` on the sample: positions times `a²`, values times `a`.
    pub fn rescale(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("rescale factor must be positive, got {a}")));
        }
        let a2 = a * a;
        Ok(Self {
            positions: self.positions.iter().map(|p| p * a2).collect(),
            values: self.values.iter().map(|v| v * a).collect(),
            kind: self.kind,
        })
    }
}

/// See [`SampledFunction::rescale`].
pub fn rescale(f: &SampledFunction, a: f64) -> Result<SampledFunction> {
    f.rescale(a)
}

/// Time scale `t`, stored through `log t` so that `t^a` is exact to represent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeScale {
    log_t: f64,
}

impl TimeScale {
    /// From `log t`; requires `t > 1`.
    pub fn from_log(log_t: f64) -> Result<Self> {
        if !(log_t > 0.0 && log_t.is_finite()) {
            return Err(Error::InvalidArgument(format!("time scale needs t > 1, got log t = {log_t}")));
        }
        Ok(Self { log_t })
    }

    pub fn from_t(t: f64) -> Result<Self> {
        Self::from_log(t.ln())
    }

    pub fn log_t(&self) -> f64 {
        self.log_t
    }

    pub fn t(&self) -> f64 {
        self.log_t.exp()
    }

    /// `t^a`.
    pub fn pow(&self, a: f64) -> Result<Self> {
        Self::from_log(self.log_t * a)
    }

    /// `log² t`, the natural spatial scale at time `t`.
    pub fn spatial_scale(&self) -> f64 {
        self.log_t * self.log_t
    }

    /// Experiments need `t > e`.
    pub fn require_above_e(&self) -> Result<()> {
        if self.log_t > 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("t must exceed e, got log t = {}", self.log_t)))
        }
    }
}

/// Potential `V` on the environment window, with `V(0) = 0` and
/// `V(x) − V(x−1) = log(ω⁻ₓ/ω⁺ₓ)` for every `x`.
pub fn potential(env: &Environment) -> SampledFunction {
    let w = env.window();
    let rates = env.all_rates();
    let origin = (-w.lo) as usize;
    let mut values = vec![0.0; rates.len()];
    for i in origin + 1..rates.len() {
        values[i] = values[i - 1] + rates[i].log_ratio();
    }
    for i in (0..origin).rev() {
        values[i] = values[i + 1] - rates[i + 1].log_ratio();
    }
    SampledFunction::on_integers(w.lo, values, FunctionKind::PotentialV).expect("window is non-empty")
}

/// Reversible measure `θ` kept as `log θ` to avoid overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibleMeasure {
    pub lo: i64,
    pub log_theta: Vec<f64>,
}

impl ReversibleMeasure {
    pub fn log_theta(&self, x: i64) -> Option<f64> {
        let i = x - self.lo;
        (i >= 0).then(|| self.log_theta.get(i as usize).copied()).flatten()
    }

    pub fn theta(&self, x: i64) -> Option<f64> {
        self.log_theta(x).map(f64::exp)
    }
}

/// Solution of `θₓω⁺ₓ = θₓ₊₁ω⁻ₓ₊₁` normalized by `θ₀ = 1`.
pub fn reversible_measure(env: &Environment) -> ReversibleMeasure {
    let w = env.window();
    let rates = env.all_rates();
    let origin = (-w.lo) as usize;
    let mut log_theta = vec![0.0; rates.len()];
    for i in origin + 1..rates.len() {
        log_theta[i] = log_theta[i - 1] + (rates[i - 1].plus / rates[i].minus).ln();
    }
    for i in (0..origin).rev() {
        log_theta[i] = log_theta[i + 1] + (rates[i + 1].minus / rates[i].plus).ln();
    }
    ReversibleMeasure { lo: w.lo, log_theta }
}

/// Nearest integer, ties toward 0.
pub fn snap_to_site(x: f64) -> i64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        x.trunc() as i64
    } else {
        r as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{DistributionSpec, Rates, Window};

    fn two_point_env(seed: u64, r: i64) -> Environment {
        Environment::sample(&DistributionSpec::default_two_point(), seed, Window::symmetric(r))
    }

    #[test]
    fn potential_vanishes_at_origin() {
        for seed in 0..5 {
            let v = potential(&two_point_env(seed, 30));
            assert_eq!(v.at(0.0), Some(0.0));
        }
    }

    #[test]
    fn single_increment() {
        let spec = DistributionSpec::default_two_point();
        let env = Environment::from_rates(&spec, 0, 0, vec![Rates::new(1.0, 1.0), Rates::new(1.0f64.exp(), 1.0)])
            .unwrap();
        assert!((potential(&env).at(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn potential_matches_termwise_sums() {
        let env = two_point_env(17, 40);
        let v = potential(&env);
        for x in 1..=40i64 {
            let s: f64 = (1..=x).map(|i| { let r = env.rates(i).unwrap(); (r.minus / r.plus).ln() }).sum();
            assert!((v.at(x as f64).unwrap() - s).abs() < 1e-12);
        }
        for x in -40..0i64 {
            let s: f64 = (x + 1..=0).map(|i| { let r = env.rates(i).unwrap(); (r.plus / r.minus).ln() }).sum();
            assert!((v.at(x as f64).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_base_cases() {
        let env = two_point_env(5, 10);
        let th = reversible_measure(&env);
        assert_eq!(th.theta(0), Some(1.0));
        let expect = env.rates(0).unwrap().plus / env.rates(1).unwrap().minus;
        assert!((th.theta(1).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn theta_potential_identity() {
        let spec = DistributionSpec::log_uniform(1.0).unwrap();
        let env = Environment::sample(&spec, 8, Window::symmetric(200));
        let v = potential(&env);
        let th = reversible_measure(&env);
        let w0 = env.rates(0).unwrap().plus;
        for x in -200..=200i64 {
            let lhs = (th.log_theta(x).unwrap() + v.at(x as f64).unwrap()).exp();
            let rhs = w0 / env.rates(x).unwrap().plus;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "x = {x}");
        }
    }

    #[test]
    fn detailed_balance_holds() {
        let env = two_point_env(2, 25);
        let th = reversible_measure(&env);
        for x in -25..25 {
            let l = th.theta(x).unwrap() * env.rates(x).unwrap().plus;
            let r = th.theta(x + 1).unwrap() * env.rates(x + 1).unwrap().minus;
            assert!((l - r).abs() <= 1e-12 * l.max(r));
        }
    }

    #[test]
    fn snapping_ties_toward_zero() {
        assert_eq!(snap_to_site(2.5), 2);
        assert_eq!(snap_to_site(-2.5), -2);
        assert_eq!(snap_to_site(2.6), 3);
        assert_eq!(snap_to_site(-2.4), -2);
        assert_eq!(snap_to_site(0.5), 0);
    }

    #[test]
    fn rescale_group_property() {
        let f = SampledFunction::on_integers(-2, vec![0.5, -1.25, 0.0, 2.0, 1.0], FunctionKind::Generic).unwrap();
        assert_eq!(f.rescale(1.0).unwrap(), f);
        assert_eq!(f.rescale(2.0).unwrap().rescale(2.0).unwrap(), f.rescale(4.0).unwrap());
        assert!(f.rescale(0.0).is_err());
    }

    #[test]
    fn sample_validation() {
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 2.0], FunctionKind::Generic).is_err());
        assert!(SampledFunction::new(vec![0.0], vec![1.0, 2.0], FunctionKind::Generic).is_err());
        let f = SampledFunction::new(vec![-1.0, 0.5, 2.0], vec![1.0, 2.0, 3.0], FunctionKind::Generic).unwrap();
        assert_eq!(f.index_range(0.0, 2.0), Some((1, 2)));
        assert_eq!(f.index_range(0.6, 1.9), None);
    }
}
