use serde::{Deserialize, Serialize};

use super::{Mode, Params};
use crate::environment::{DistributionSpec, Environment, Window};
use crate::error::{Error, Result};
use crate::landscape::{
    potential, skorokhod_couple, snap_to_site, stable_landscape, CoupledPair, SampledFunction, StableLandscape,
    TimeScale, WellSide, DEFAULT_BROWNIAN_STEP,
};
use crate::walker::{advance, Stop, WalkState};

/// Windows never grow past this many sites on each side.
pub const MAX_HALF_WIDTH: i64 = 1 << 22;

/// Landmarks snapped to sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkSites {
    pub m_minus: i64,
    pub h_minus: i64,
    pub m_minus_minus: i64,
    pub h_minus_minus: i64,
    pub m_plus: i64,
    pub h_plus: i64,
    pub m_plus_plus: i64,
    pub h_plus_plus: i64,
    pub m_t: i64,
}

impl LandmarkSites {
    pub fn bottom(&self, side: WellSide) -> i64 {
        match side {
            WellSide::Minus => self.m_minus,
            WellSide::Plus => self.m_plus,
        }
    }

    /// `H⁻ = {h⁻⁻, h⁺}` and `H⁺ = {h⁻, h⁺⁺}`, left point first.
    pub fn escape_set(&self, side: WellSide) -> (i64, i64) {
        match side {
            WellSide::Minus => (self.h_minus_minus, self.h_plus),
            WellSide::Plus => (self.h_minus, self.h_plus_plus),
        }
    }
}

/// One environment analysed at one time scale.
#[derive(Debug, Clone)]
pub struct Quenched {
    pub env: Environment,
    pub coupling: Option<CoupledPair>,
    /// Function the landmarks are computed on: `V`, or `W` in coupled mode.
    pub f: SampledFunction,
    pub t: TimeScale,
    pub landscape: StableLandscape,
    pub sites: LandmarkSites,
}

impl Quenched {
    /// Snapped interval of the t-stable well around `m±`.
    pub fn well_sites(&self, side: WellSide) -> (i64, i64) {
        let w = self.landscape.side_well(side).interval;
        (snap_to_site(w.0), snap_to_site(w.1))
    }
}

fn required_half_width(t: TimeScale, params: &Params) -> i64 {
    let lm = t.log_t().powf(params.m);
    (lm.ceil() as i64).max((4.0 * t.spatial_scale()).ceil() as i64) + 2
}

fn sites_of(ls: &StableLandscape) -> LandmarkSites {
    let l = &ls.landmarks;
    LandmarkSites {
        m_minus: snap_to_site(l.m_minus),
        h_minus: snap_to_site(l.h_minus),
        m_minus_minus: snap_to_site(l.m_minus_minus),
        h_minus_minus: snap_to_site(l.h_minus_minus),
        m_plus: snap_to_site(l.m_plus),
        h_plus: snap_to_site(l.h_plus),
        m_plus_plus: snap_to_site(l.m_plus_plus),
        h_plus_plus: snap_to_site(l.h_plus_plus),
        m_t: snap_to_site(ls.m_t),
    }
}

/// Analyse `env` at time scale `t`, growing the window until it covers
/// `[−log^M t, log^M t]` and every landmark resolves.
pub fn prepare(env: &Environment, t: TimeScale, params: &Params) -> Result<Quenched> {
    params.validate()?;
    t.require_above_e()?;
    match params.mode {
        Mode::Surrogate => prepare_surrogate(env, t, params),
        Mode::Coupled => prepare_coupled(env.spec(), env.seed(), t, params),
    }
}

fn prepare_surrogate(env: &Environment, t: TimeScale, params: &Params) -> Result<Quenched> {
    let mut r = required_half_width(t, params);
    let mut env = env.clone();
    loop {
        let need = Window::symmetric(r);
        if !env.window().covers(&need) {
            env = env.extend(env.window().union(&need))?;
        }
        let f = potential(&env);
        match stable_landscape(&f, t) {
            Ok(landscape) => {
                let sites = sites_of(&landscape);
                return Ok(Quenched { env, coupling: None, f, t, landscape, sites });
            }
            Err(Error::WindowExhausted(msg)) => {
                if r >= MAX_HALF_WIDTH {
                    return Err(Error::WindowExhausted(msg));
                }
                r *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Coupled-mode analysis of the environment with `seed`; landmarks come from `W`.
pub fn prepare_coupled(spec: &DistributionSpec, seed: u64, t: TimeScale, params: &Params) -> Result<Quenched> {
    let mut r = required_half_width(t, params);
    loop {
        let pair = skorokhod_couple(spec, seed, Window::symmetric(r), DEFAULT_BROWNIAN_STEP)?;
        let f = pair.w_spatial();
        match stable_landscape(&f, t) {
            Ok(landscape) => {
                let sites = sites_of(&landscape);
                let env = pair.environment().clone();
                return Ok(Quenched { env, coupling: Some(pair), f, t, landscape, sites });
            }
            Err(Error::WindowExhausted(msg)) => {
                if r >= MAX_HALF_WIDTH {
                    return Err(Error::WindowExhausted(msg));
                }
                r *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

/// [`advance`] that doubles a private copy of the window whenever the walk
/// leaves it, so the path is exactly the one an unbounded environment gives.
pub(crate) fn advance_extending<F>(
    env: &Environment,
    grown: &mut Option<Environment>,
    state: &mut WalkState,
    horizon: f64,
    mut visit: F,
) -> Result<Stop>
where
    F: FnMut(f64, i64) -> bool,
{
    loop {
        let current = grown.as_ref().unwrap_or(env);
        match advance(current, state, horizon, &mut visit) {
            Err(Error::WindowExhausted(msg)) => {
                let w = current.window();
                let r = (w.hi - w.lo).max(16);
                if r > 2 * MAX_HALF_WIDTH {
                    return Err(Error::WindowExhausted(msg));
                }
                let next = current.extend(Window::new(w.lo - r, w.hi + r)?)?;
                *grown = Some(next);
            }
            other => return other,
        }
    }
}
