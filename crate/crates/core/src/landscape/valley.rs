//! Wells, depth, elevation and neighborhoods of a well bottom.

use serde::{Deserialize, Serialize};

use super::stable::argmin;
use super::SampledFunction;
use crate::error::{Error, Result};

/// Above this many sites `elevation` skips the quadratic pairwise cross-check.
pub const ELEVATION_CROSS_CHECK_MAX_SITES: usize = 4096;

/// Interval `[a, b]` with its bottom and depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellRecord {
    pub interval: (f64, f64),
    pub bottom: f64,
    pub depth_value: f64,
}

pub(crate) fn depth_idx(values: &[f64], a: usize, b: usize) -> f64 {
    values[a].min(values[b]) - values[argmin(values, a, b)]
}

fn range(f: &SampledFunction, interval: (f64, f64)) -> Result<(usize, usize)> {
    let (a, b) = interval;
    let (i, j) = (f.index_of(a), f.index_of(b));
    match (i, j) {
        (Some(i), Some(j)) if i <= j => Ok((i, j)),
        _ => Err(Error::InvalidArgument(format!(
            "interval [{a}, {b}] must have both endpoints on the grid, in order"
        ))),
    }
}

/// `min{f(a), f(b)} − min_{[a,b]} f`.
pub fn depth(f: &SampledFunction, interval: (f64, f64)) -> Result<f64> {
    let (i, j) = range(f, interval)?;
    Ok(depth_idx(f.values(), i, j))
}

/// Largest climb from any non-global local minimum of `f` on `[i, j]` to the
/// global minimum.
pub(crate) fn elevation_local_minima(values: &[f64], i: usize, j: usize) -> f64 {
    let xmin = argmin(values, i, j);
    let is_local_min = |x: usize| {
        (x == i || values[x] <= values[x - 1]) && (x == j || values[x] <= values[x + 1])
    };
    let mut best: f64 = 0.0;
    let mut barrier = values[xmin];
    for x in (i..xmin).rev() {
        barrier = barrier.max(values[x]);
        if is_local_min(x) {
            best = best.max(barrier - values[x]);
        }
    }
    barrier = values[xmin];
    for x in xmin + 1..=j {
        barrier = barrier.max(values[x]);
        if is_local_min(x) {
            best = best.max(barrier - values[x]);
        }
    }
    best
}

/// `max_{x,y} max_{z between x,y} (f(z) − f(x) − f(y)) + min f` over `[i, j]`.
pub(crate) fn elevation_all_pairs(values: &[f64], i: usize, j: usize) -> f64 {
    let fmin = values[argmin(values, i, j)];
    let mut best = f64::NEG_INFINITY;
    for x in i..=j {
        let mut top = values[x];
        for y in x..=j {
            top = top.max(values[y]);
            best = best.max(top - values[x] - values[y] + fmin);
        }
    }
    best
}

/// Elevation via the local-minima formula, without cross-check.
pub fn elevation_unchecked(f: &SampledFunction, interval: (f64, f64)) -> Result<f64> {
    let (i, j) = range(f, interval)?;
    Ok(elevation_local_minima(f.values(), i, j))
}

/// Elevation via the pairwise formula; quadratic in the interval length.
pub fn elevation_pairwise(f: &SampledFunction, interval: (f64, f64)) -> Result<f64> {
    let (i, j) = range(f, interval)?;
    Ok(elevation_all_pairs(f.values(), i, j))
}

/// Elevation of `f` on `interval`.
///
/// Computed from the local minima and, for intervals of at most
/// [`ELEVATION_CROSS_CHECK_MAX_SITES`] sites, checked against the pairwise
/// formula; a disagreement beyond `1e-12` (relative to the value scale) is
/// reported as [`Error::Consistency`].
pub fn elevation(f: &SampledFunction, interval: (f64, f64)) -> Result<f64> {
    let (i, j) = range(f, interval)?;
    let values = f.values();
    let e = elevation_local_minima(values, i, j);
    if j - i < ELEVATION_CROSS_CHECK_MAX_SITES {
        let e2 = elevation_all_pairs(values, i, j);
        let scale = values[i..=j].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if (e - e2).abs() > 1e-12 * scale {
            return Err(Error::Consistency(format!(
                "elevation formulas disagree on [{}, {}]: {e} vs {e2}",
                interval.0, interval.1
            )));
        }
    }
    Ok(e)
}

/// `a`-neighborhood of a well bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: f64,
    pub radius_param: f64,
    pub interval: (f64, f64),
}

impl Neighborhood {
    /// Length `𝔯 − 𝔩` of the neighborhood.
    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval.0 <= x && x <= self.interval.1
    }
}

/// Outermost grid points of `well` on each side of `m` with `f − f(m) < a`.
pub fn neighborhood(f: &SampledFunction, m: f64, a: f64, well: (f64, f64)) -> Result<Neighborhood> {
    let (h, h2) = range(f, well)?;
    let mi = f
        .index_of(m)
        .filter(|&mi| h <= mi && mi <= h2)
        .ok_or_else(|| Error::InvalidArgument(format!("center {m} is not a grid point of the well")))?;
    let values = f.values();
    let d = depth_idx(values, h, h2);
    if !(a > 0.0 && a <= d) {
        return Err(Error::InvalidArgument(format!("radius parameter {a} outside (0, depth = {d}]")));
    }
    let fm = values[mi];
    let left = (h..=mi).find(|&x| values[x] - fm < a).unwrap_or(mi);
    let right = (mi..=h2).rev().find(|&x| values[x] - fm < a).unwrap_or(mi);
    Ok(Neighborhood { center: m, radius_param: a, interval: (f.position(left), f.position(right)) })
}
