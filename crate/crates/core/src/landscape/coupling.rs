//! Discretized Brownian paths and the Skorokhod coupling of a two-point
//! environment with a Brownian motion.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FunctionKind, SampledFunction};
use crate::environment::{DistributionSpec, Environment, Family, Rates, Window};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Default Brownian time step for the coupling.
pub const DEFAULT_BROWNIAN_STEP: f64 = 1e-2;

/// Two-sided Brownian path with diffusion `sigma` sampled at `k·step`,
/// `k ∈ [-n_left, n_right]`, pinned at `W(0) = 0`.
///
/// Each side is drawn sequentially from its own stream, so a longer path
/// with the same seed extends a shorter one.
pub fn brownian_path(seed: u64, step: f64, n_left: usize, n_right: usize, sigma: f64) -> Result<SampledFunction> {
    if !(step > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidArgument("step and sigma must be positive".into()));
    }
    let scale = sigma * step.sqrt();
    let side = |id: u64, n: usize| {
        let mut rng = stream(seed, Domain::Path, id);
        let mut w = 0.0;
        (0..n)
            .map(|_| {
                w += scale * rng.sample::<f64, _>(StandardNormal);
                w
            })
            .collect::<Vec<f64>>()
    };
    let left = side(1, n_left);
    let right = side(0, n_right);
    let mut positions = Vec::with_capacity(n_left + n_right + 1);
    let mut values = Vec::with_capacity(n_left + n_right + 1);
    for k in (1..=n_left).rev() {
        positions.push(-(k as f64) * step);
        values.push(left[k - 1]);
    }
    positions.push(0.0);
    values.push(0.0);
    for k in 1..=n_right {
        positions.push(k as f64 * step);
        values.push(right[k - 1]);
    }
    SampledFunction::new(positions, values, FunctionKind::BrownianW)
}

/// An environment together with the Brownian motion it was embedded in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    #[serde(skip)]
    pub env: Option<Environment>,
    /// Potential built from the embedded `±c` increments.
    pub v: SampledFunction,
    /// Brownian path in Brownian time, including the exact level-crossing samples.
    pub w: SampledFunction,
    /// Brownian time at which each site's potential value was read off, site order.
    pub embedding_times: Vec<f64>,
    pub step: f64,
    pub c: f64,
}

struct Embedder<R: Rng> {
    rng: R,
    step: f64,
    s: f64,
    w: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl<R: Rng> Embedder<R> {
    /// Run until `W` moves `±c` away from its current value; returns the sign.
    fn next_exit(&mut self, c: f64) -> f64 {
        let anchor = self.w;
        let (up, down) = (anchor + c, anchor - c);
        let sd = self.step.sqrt();
        loop {
            let next = self.w + sd * self.rng.sample::<f64, _>(StandardNormal);
            let level = if next >= up {
                Some(up)
            } else if next <= down {
                Some(down)
            } else {
                None
            };
            match level {
                Some(level) => {
                    let frac = (level - self.w) / (next - self.w);
                    self.s += frac * self.step;
                    self.w = level;
                    self.times.push(self.s);
                    self.values.push(level);
                    return if level == up { 1.0 } else { -1.0 };
                }
                None => {
                    self.s += self.step;
                    self.w = next;
                    self.times.push(self.s);
                    self.values.push(next);
                }
            }
        }
    }
}

/// Build a two-point environment whose potential increments are the
/// successive `±c` exits of a Brownian motion, so that `V(x) = W(s_x)`
/// holds exactly at the embedding times `s_x`.
pub fn skorokhod_couple(spec: &DistributionSpec, seed: u64, window: Window, step: f64) -> Result<CoupledPair> {
    let c = match spec.family {
        Family::TwoPointSymmetric { c } => c,
        _ => {
            return Err(Error::UnsupportedCoupling(
                "an exact embedding exists only for the two-point family".into(),
            ))
        }
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("Brownian step must be positive, got {step}")));
    }
    let new = |id| Embedder {
        rng: stream(seed, Domain::Brownian, id),
        step,
        s: 0.0,
        w: 0.0,
        times: Vec::new(),
        values: Vec::new(),
    };

    // right: site x >= 1 sets V(x) - V(x-1)
    let mut right = new(0);
    let mut v_right = Vec::with_capacity(window.hi as usize);
    let mut s_right = Vec::with_capacity(window.hi as usize);
    let mut inc_right = Vec::with_capacity(window.hi as usize);
    for _ in 1..=window.hi {
        let sign = right.next_exit(c);
        inc_right.push(sign * c);
        v_right.push(right.w);
        s_right.push(right.s);
    }
    // left: step k sets V(-k), i.e. the increment of site 1 - k
    let mut left = new(1);
    let steps_left = (1 - window.lo) as usize;
    let mut v_left = Vec::with_capacity(steps_left);
    let mut s_left = Vec::with_capacity(steps_left);
    let mut inc_left = Vec::with_capacity(steps_left);
    for _ in 0..steps_left {
        let sign = left.next_exit(c);
        // V(x) - V(x-1) = -(V(-k) - V(-k+1))
        inc_left.push(-sign * c);
        v_left.push(left.w);
        s_left.push(left.s);
    }

    let mut rates = Vec::with_capacity(window.len());
    for x in window.lo..=window.hi {
        let d = if x >= 1 { inc_right[(x - 1) as usize] } else { inc_left[(-x) as usize] };
        rates.push(Rates::from_log_ratio(d));
    }
    let env = Environment::from_rates(spec, seed, window.lo, rates)?;

    // V on the window: V(-k) = v_left[k-1] for k = 1..=-lo, V(x) = v_right[x-1]
    let mut v_values = Vec::with_capacity(window.len());
    let mut times = Vec::with_capacity(window.len());
    for x in window.lo..=window.hi {
        if x < 0 {
            let k = (-x) as usize;
            v_values.push(v_left[k - 1]);
            times.push(-s_left[k - 1]);
        } else if x == 0 {
            v_values.push(0.0);
            times.push(0.0);
        } else {
            v_values.push(v_right[(x - 1) as usize]);
            times.push(s_right[(x - 1) as usize]);
        }
    }
    let v = SampledFunction::on_integers(window.lo, v_values, FunctionKind::PotentialV)?;

    let mut w_pos = Vec::with_capacity(left.times.len() + right.times.len() + 1);
    let mut w_val = Vec::with_capacity(w_pos.capacity());
    for (s, val) in left.times.iter().zip(&left.values).rev() {
        w_pos.push(-s);
        w_val.push(*val);
    }
    w_pos.push(0.0);
    w_val.push(0.0);
    w_pos.extend(right.times.iter().copied());
    w_val.extend(right.values.iter().copied());
    let w = SampledFunction::new(w_pos, w_val, FunctionKind::BrownianW)?;

    Ok(CoupledPair { env: Some(env), v, w, embedding_times: times, step, c })
}

impl CoupledPair {
    pub fn environment(&self) -> &Environment {
        self.env.as_ref().expect("pair built by skorokhod_couple")
    }

    /// Brownian path on the spatial axis: Brownian time `s` maps to site
    /// `s / c²`, since each embedded step takes `c²` time units on average.
    pub fn w_spatial(&self) -> SampledFunction {
        let c2 = self.c * self.c;
        let positions = self.w.positions().iter().map(|s| s / c2).collect();
        SampledFunction::new(positions, self.w.values().to_vec(), FunctionKind::BrownianW)
            .expect("scaling preserves order")
    }

    /// `W` on the spatial axis at site `x`, linearly interpolated.
    pub fn w_at_site(&self, x: i64) -> Option<f64> {
        let s = x as f64 * self.c * self.c;
        let pos = self.w.positions();
        let k = pos.partition_point(|&p| p < s);
        if k == pos.len() {
            return None;
        }
        if pos[k] == s || k == 0 {
            return (pos[k] == s).then(|| self.w.value(k));
        }
        let (p0, p1) = (pos[k - 1], pos[k]);
        let (w0, w1) = (self.w.value(k - 1), self.w.value(k));
        Some(w0 + (w1 - w0) * (s - p0) / (p1 - p0))
    }

    /// `sup_{|x| < radius} |V(x) − W(x)|` on the common spatial axis.
    pub fn discrepancy(&self, radius: f64) -> Option<f64> {
        let r = radius.ceil() as i64;
        let mut sup: f64 = 0.0;
        for x in -r..=r {
            if (x as f64).abs() >= radius {
                continue;
            }
            let v = self.v.at(x as f64)?;
            sup = sup.max((v - self.w_at_site(x)?).abs());
        }
        Some(sup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::potential;

    #[test]
    fn non_two_point_rejected() {
        let spec = DistributionSpec::log_uniform(1.0).unwrap();
        let r = skorokhod_couple(&spec, 0, Window::symmetric(5), DEFAULT_BROWNIAN_STEP);
        assert!(matches!(r, Err(Error::UnsupportedCoupling(_))));
    }

    #[test]
    fn embedded_values_are_bit_identical() {
        let spec = DistributionSpec::default_two_point();
        let pair = skorokhod_couple(&spec, 4, Window::symmetric(50), DEFAULT_BROWNIAN_STEP).unwrap();
        for (i, &s) in pair.embedding_times.iter().enumerate() {
            let v = pair.v.value(i);
            let w = pair.w.at(s).expect("embedding time is a sample point");
            assert_eq!(v.to_bits(), w.to_bits());
        }
        let env_v = potential(pair.environment());
        for (a, b) in env_v.values().iter().zip(pair.v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn brownian_path_extends_consistently() {
        let short = brownian_path(3, 0.25, 10, 20, 1.0).unwrap();
        let long = brownian_path(3, 0.25, 40, 50, 1.0).unwrap();
        for (p, v) in short.positions().iter().zip(short.values()) {
            assert_eq!(long.at(*p), Some(*v));
        }
    }
}
