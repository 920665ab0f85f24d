use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{
    brownian_path, find_peaks, find_stable_points, neighborhood, stable_landscape, SampledFunction, TimeScale,
    WellSide,
};
use crate::rng::derive_seed;
use crate::stats::{ks_two_sample, KsResult};

/// Outcome of comparing the landscape of `f` at `t` with that of
/// `x ↦ a f(x/a²)` at `t^a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingVerdict {
    pub a: f64,
    pub log_t: f64,
    pub stable_equal: bool,
    pub peaks_equal: bool,
    /// `None` when the landmarks do not resolve on the sample.
    pub landmarks_equal: Option<bool>,
    pub neighborhoods_equal: Option<bool>,
    pub holds: bool,
}

fn scaled(xs: &[f64], a2: f64) -> Vec<f64> {
    xs.iter().map(|x| x * a2).collect()
}

/// Check `S_{t^a}(f̂) = a² S_t(f)`, the same for peaks, `h±`, `h±±` and the
/// `(ε log t)`-neighborhoods of `m±`, by exact comparison.
pub fn scaling_check(f: &SampledFunction, t: TimeScale, a: f64, eps: f64) -> Result<ScalingVerdict> {
    let g = f.rescale(a)?;
    let ta = t.pow(a)?;
    let a2 = a * a;
    let stable_equal = find_stable_points(&g, ta).positions == scaled(&find_stable_points(f, t).positions, a2);
    let peaks_equal = find_peaks(&g, ta) == scaled(&find_peaks(f, t), a2);

    let (landmarks_equal, neighborhoods_equal) = match (stable_landscape(f, t), stable_landscape(&g, ta)) {
        (Ok(l), Ok(lg)) => {
            let x = &l.landmarks;
            let y = &lg.landmarks;
            let lm = [x.h_minus, x.h_plus, x.h_minus_minus, x.h_plus_plus, x.m_minus, x.m_plus];
            let lmg = [y.h_minus, y.h_plus, y.h_minus_minus, y.h_plus_plus, y.m_minus, y.m_plus];
            let landmarks = lmg.to_vec() == scaled(&lm, a2);
            let mut hoods = true;
            for side in WellSide::BOTH {
                let (w, wg) = (l.side_well(side), lg.side_well(side));
                let r = eps * t.log_t();
                let n = neighborhood(f, w.bottom, r.min(w.depth_value), w.interval)?;
                let ng = neighborhood(&g, wg.bottom, (r * a).min(wg.depth_value), wg.interval)?;
                hoods &= ng.interval == (n.interval.0 * a2, n.interval.1 * a2);
            }
            (Some(landmarks), Some(hoods))
        }
        (Err(Error::WindowExhausted(_)), Err(Error::WindowExhausted(_))) => (None, None),
        (Err(e), _) | (_, Err(e)) => {
            if matches!(e, Error::WindowExhausted(_)) {
                (Some(false), Some(false))
            } else {
                return Err(e);
            }
        }
    };
    let holds = stable_equal && peaks_equal && landmarks_equal != Some(false) && neighborhoods_equal != Some(false);
    Ok(ScalingVerdict { a, log_t: t.log_t(), stable_equal, peaks_equal, landmarks_equal, neighborhoods_equal, holds })
}

/// Grid points per `log² t` used for the distributional comparison.
pub const POINTS_PER_SCALE: f64 = 320.0;

/// `h⁺⁺ₜ / log² t` on `n_paths` independent Brownian paths sampled with
/// step `log² t / 320`.
pub fn well_breadth_sample(seed: u64, n_paths: usize, t: TimeScale, sigma: f64) -> Result<Vec<f64>> {
    let scale = t.spatial_scale();
    let step = scale / POINTS_PER_SCALE;
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let path_seed = derive_seed(seed, i as u64);
            let mut half = 16 * POINTS_PER_SCALE as usize;
            loop {
                let f = brownian_path(path_seed, step, half, half, sigma)?;
                match stable_landscape(&f, t) {
                    Ok(ls) => return Ok(ls.landmarks.h_plus_plus / scale),
                    Err(Error::WindowExhausted(msg)) if half >= 1 << 24 => return Err(Error::WindowExhausted(msg)),
                    Err(Error::WindowExhausted(_)) => half *= 2,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect()
}

/// Two-sample comparison of the rescaled well breadth at two time scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDistribution {
    pub log_t: [f64; 2],
    pub n_paths: usize,
    pub ks: KsResult,
    pub threshold: f64,
    pub holds: bool,
}

pub fn scaling_distribution_check(
    seed: u64,
    n_paths: usize,
    log_t: [f64; 2],
    sigma: f64,
    threshold: f64,
) -> Result<ScalingDistribution> {
    let a = well_breadth_sample(derive_seed(seed, 1), n_paths, TimeScale::from_log(log_t[0])?, sigma)?;
    let b = well_breadth_sample(derive_seed(seed, 2), n_paths, TimeScale::from_log(log_t[1])?, sigma)?;
    let ks = ks_two_sample(&a, &b);
    let holds = ks.p_value > threshold;
    Ok(ScalingDistribution { log_t, n_paths, ks, threshold, holds })
}
