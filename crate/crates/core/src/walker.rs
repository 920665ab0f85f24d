//! Event-driven simulation of the walk.
//!
//! Each transition consumes one uniform `U` and one `Exp(1)` variable `E`
//! from the trial's stream, in that order: the walk at `x` waits
//! `E / (ω⁻ₓ + ω⁺ₓ)` and then moves left iff `U < ω⁻ₓ / (ω⁻ₓ + ω⁺ₓ)`.
//! Two chains driven by the same stream therefore make identical moves for
//! as long as they sit on sites with identical rates.

use std::collections::VecDeque;
use std::fmt::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::environment::{Environment, Rates, Window};
use crate::error::{Error, Result};
use crate::rng::trial_stream;

/// Anything that assigns jump rates to a contiguous block of sites.
pub trait JumpRates {
    /// Sites with defined rates.
    fn span(&self) -> Window;
    /// Rates of the sites in `span`, in order.
    fn rate_table(&self) -> &[Rates];

    fn rates_at(&self, x: i64) -> Option<Rates> {
        let w = self.span();
        w.contains(x).then(|| self.rate_table()[(x - w.lo) as usize])
    }
}

impl JumpRates for Environment {
    fn span(&self) -> Window {
        self.window()
    }

    fn rate_table(&self) -> &[Rates] {
        self.all_rates()
    }
}

/// Walk restricted to `[a, b]` with `ω̂⁻ₐ = 0` and `ω̂⁺_b = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectedChain {
    pub a: i64,
    pub b: i64,
    rates: Vec<Rates>,
    /// Potential of the parent environment on `[a, b]`, shifted so `V(a) = 0`.
    potential: Vec<f64>,
}

impl ReflectedChain {
    /// Chain from explicit rates; endpoint rates pointing outward are zeroed.
    pub fn from_rates(a: i64, mut rates: Vec<Rates>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidArgument("reflected chain needs at least one site".into()));
        }
        let n = rates.len();
        let mut potential = vec![0.0; n];
        for i in 1..n {
            potential[i] = potential[i - 1] + rates[i].log_ratio();
        }
        rates[0].minus = 0.0;
        rates[n - 1].plus = 0.0;
        Ok(Self { a, b: a + n as i64 - 1, rates, potential })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.a..=self.b
    }

    /// `ω̂ₓ`; `None` outside `[a, b]`.
    pub fn rates(&self, x: i64) -> Option<Rates> {
        self.rates_at(x)
    }

    pub fn rates_slice(&self) -> &[Rates] {
        &self.rates
    }

    /// Parent potential on `[a, b]` up to an additive constant.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Position of `x` within the chain.
    pub fn index(&self, x: i64) -> Option<usize> {
        (self.a <= x && x <= self.b).then(|| (x - self.a) as usize)
    }
}

impl JumpRates for ReflectedChain {
    fn span(&self) -> Window {
        Window { lo: self.a, hi: self.b }
    }

    fn rate_table(&self) -> &[Rates] {
        &self.rates
    }
}

/// Reflected version of `env` on `[a, b]`; rates inside agree with `env`.
pub fn reflect(env: &Environment, a: i64, b: i64) -> Result<ReflectedChain> {
    let w = env.window();
    if a > b || !w.contains(a) || !w.contains(b) {
        return Err(Error::InvalidArgument(format!(
            "interval [{a}, {b}] must be non-empty and inside the window [{}, {}]",
            w.lo, w.hi
        )));
    }
    let rates = env.all_rates()[(a - w.lo) as usize..=(b - w.lo) as usize].to_vec();
    ReflectedChain::from_rates(a, rates)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    left: bool,
}

/// State of one walk.
#[derive(Debug, Clone)]
pub struct WalkState {
    pub position: i64,
    /// Time of the last transition, or the horizon reached by the last run.
    pub clock: f64,
    pub jump_count: u64,
    pub rng: ChaCha8Rng,
    pending: Option<Pending>,
}

impl WalkState {
    pub fn new(position: i64, rng: ChaCha8Rng) -> Self {
        Self { position, clock: 0.0, jump_count: 0, rng, pending: None }
    }

    /// Walk started at `position` on the stream of `(seed, trial)`.
    pub fn for_trial(seed: u64, trial: u64, position: i64) -> Self {
        Self::new(position, trial_stream(seed, trial))
    }
}

/// One transition as drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub holding: f64,
    pub left: bool,
}

fn draw<W: JumpRates + ?Sized>(env: &W, state: &mut WalkState) -> Result<Pending> {
    if let Some(p) = state.pending {
        return Ok(p);
    }
    let r = env.rates_at(state.position).ok_or_else(|| {
        let w = env.span();
        Error::WindowExhausted(format!("walk reached {} outside [{}, {}]", state.position, w.lo, w.hi))
    })?;
    let total = r.minus + r.plus;
    let u: f64 = state.rng.random();
    let e: f64 = state.rng.sample(Exp1);
    let p = Pending { time: state.clock + e / total, left: u < r.minus / total };
    state.pending = Some(p);
    Ok(p)
}

fn apply(state: &mut WalkState, p: Pending) {
    state.clock = p.time;
    state.position += if p.left { -1 } else { 1 };
    state.jump_count += 1;
    state.pending = None;
}

/// Perform one transition. Fails with [`Error::WindowExhausted`] (leaving the
/// state untouched) when the current site has no rates.
pub fn step<W: JumpRates + ?Sized>(env: &W, state: &mut WalkState) -> Result<Jump> {
    let start = state.clock;
    let p = draw(env, state)?;
    apply(state, p);
    Ok(Jump { holding: p.time - start, left: p.left })
}

/// Why [`advance`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Horizon,
    Visitor,
}

/// Run until `horizon` or until `visit(time, position)`, called after every
/// transition, returns `true`. On reaching the horizon the clock is set to it
/// and the next transition is kept pending, so a later call resumes the same
/// path exactly.
pub fn advance<W, F>(env: &W, state: &mut WalkState, horizon: f64, mut visit: F) -> Result<Stop>
where
    W: JumpRates + ?Sized,
    F: FnMut(f64, i64) -> bool,
{
    let lo = env.span().lo;
    let table = env.rate_table();
    loop {
        if state.pending.is_none() {
            let i = state.position - lo;
            if i < 0 || i as usize >= table.len() {
                draw(env, state)?;
            } else {
                let r = table[i as usize];
                let total = r.minus + r.plus;
                let u: f64 = state.rng.random();
                let e: f64 = state.rng.sample(Exp1);
                state.pending = Some(Pending { time: state.clock + e / total, left: u < r.minus / total });
            }
        }
        let p = state.pending.expect("drawn above");
        if p.time > horizon {
            state.clock = state.clock.max(horizon);
            return Ok(Stop::Horizon);
        }
        apply(state, p);
        if visit(state.clock, state.position) {
            return Ok(Stop::Visitor);
        }
    }
}

/// Fixed-capacity record of the most recent `(T_n, ξ_{T_n})` events.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    capacity: usize,
    events: VecDeque<(f64, i64)>,
    dropped: u64,
}

impl Trajectory {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), events: VecDeque::new(), dropped: 0 }
    }

    pub fn push(&mut self, time: f64, position: i64) {
        if self.events.len() == self.capacity {
            self.events.pop_front();
            self.dropped += 1;
        }
        self.events.push_back((time, position));
    }

    pub fn events(&self) -> impl Iterator<Item = &(f64, i64)> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events that fell out of the buffer.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,position\n");
        for (t, x) in &self.events {
            let _ = writeln!(s, "{t},{x}");
        }
        s
    }
}

/// Position at clock time `t`.
pub fn run_until_time<W: JumpRates + ?Sized>(
    env: &W,
    state: &mut WalkState,
    t: f64,
    mut trajectory: Option<&mut Trajectory>,
) -> Result<i64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    if let Some(tr) = trajectory.as_deref_mut() {
        if tr.is_empty() {
            tr.push(state.clock, state.position);
        }
    }
    advance(env, state, t, |time, x| {
        if let Some(tr) = trajectory.as_deref_mut() {
            tr.push(time, x);
        }
        false
    })?;
    Ok(state.position)
}

/// Outcome of a hitting query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitOutcome {
    pub hit: bool,
    /// Hitting time, or the horizon when nothing was hit.
    pub time: f64,
    pub site: Option<i64>,
    pub final_position: i64,
}

/// First time after the current clock at which the walk sits in `targets`.
pub fn run_until_hit<W: JumpRates + ?Sized>(
    env: &W,
    state: &mut WalkState,
    targets: &[i64],
    horizon: f64,
) -> Result<HitOutcome> {
    let stop = advance(env, state, horizon, |_, x| targets.contains(&x))?;
    let hit = stop == Stop::Visitor;
    Ok(HitOutcome {
        hit,
        time: if hit { state.clock } else { horizon },
        site: hit.then_some(state.position),
        final_position: state.position,
    })
}

/// Fraction of `[start clock, horizon]` spent at each site of the chain.
pub fn occupation_histogram(chain: &ReflectedChain, state: &mut WalkState, horizon: f64) -> Result<Vec<f64>> {
    let t0 = state.clock;
    if !(horizon > t0) {
        return Err(Error::InvalidArgument("horizon must exceed the current clock".into()));
    }
    if chain.index(state.position).is_none() {
        return Err(Error::InvalidArgument(format!("start {} outside [{}, {}]", state.position, chain.a, chain.b)));
    }
    let mut occ = vec![0.0; chain.len()];
    let mut last = (t0, state.position);
    advance(chain, state, horizon, |time, x| {
        occ[(last.1 - chain.a) as usize] += time - last.0;
        last = (time, x);
        false
    })?;
    occ[(last.1 - chain.a) as usize] += horizon - last.0;
    let total = horizon - t0;
    occ.iter_mut().for_each(|o| *o /= total);
    Ok(occ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::DistributionSpec;

    fn flat(r: i64) -> Environment {
        let spec = DistributionSpec::default_two_point();
        Environment::from_rates(&spec, 0, -r, vec![Rates::new(1.0, 1.0); (2 * r + 1) as usize]).unwrap()
    }

    #[test]
    fn zero_time_keeps_start() {
        let env = flat(5);
        let mut s = WalkState::for_trial(1, 0, 2);
        assert_eq!(run_until_time(&env, &mut s, 0.0, None).unwrap(), 2);
        assert_eq!(s.jump_count, 0);
    }

    #[test]
    fn reflected_endpoint_pushes_right() {
        let env = flat(5);
        let chain = reflect(&env, -2, 2).unwrap();
        for trial in 0..50 {
            let mut s = WalkState::for_trial(9, trial, -2);
            assert!(!step(&chain, &mut s).unwrap().left);
            assert_eq!(s.position, -1);
        }
    }

    #[test]
    fn two_state_chain_alternates() {
        let env = flat(3);
        let chain = reflect(&env, 0, 1).unwrap();
        let mut s = WalkState::for_trial(2, 0, 0);
        let mut tr = Trajectory::new(100);
        run_until_time(&chain, &mut s, 20.0, Some(&mut tr)).unwrap();
        let xs: Vec<i64> = tr.events().map(|e| e.1).collect();
        assert!(xs.len() > 5);
        assert!(xs.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn exhaustion_is_resumable() {
        let env = flat(2);
        let mut s = WalkState::for_trial(3, 0, 0);
        let err = run_until_time(&env, &mut s, 1e6, None).unwrap_err();
        assert!(matches!(err, Error::WindowExhausted(_)));
        let pos = s.position;
        assert_eq!(pos.abs(), 3);
        let bigger = env.extend(Window::symmetric(1000)).unwrap();
        let until = s.clock + 1.0;
        assert!(run_until_time(&bigger, &mut s, until, None).is_ok());
    }

    #[test]
    fn pending_jump_survives_split_runs() {
        let env = flat(400);
        let mut a = WalkState::for_trial(5, 7, 0);
        let mut b = WalkState::for_trial(5, 7, 0);
        run_until_time(&env, &mut a, 50.0, None).unwrap();
        for t in [3.0, 17.5, 17.5, 31.0, 50.0] {
            run_until_time(&env, &mut b, t, None).unwrap();
        }
        assert_eq!(a.position, b.position);
        assert_eq!(a.jump_count, b.jump_count);
    }

    #[test]
    fn hit_requires_positive_time() {
        let env = flat(50);
        let mut s = WalkState::for_trial(1, 1, 0);
        let out = run_until_hit(&env, &mut s, &[0], f64::INFINITY).unwrap();
        assert!(out.hit && out.time > 0.0 && out.site == Some(0));
        assert!(s.jump_count >= 2);
    }

    #[test]
    fn occupation_sums_to_one() {
        let env = flat(10);
        let chain = reflect(&env, -3, 3).unwrap();
        let mut s = WalkState::for_trial(1, 0, 0);
        let occ = occupation_histogram(&chain, &mut s, 500.0).unwrap();
        assert!((occ.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ring_buffer_keeps_tail() {
        let mut tr = Trajectory::new(3);
        for i in 0..5 {
            tr.push(i as f64, i);
        }
        assert_eq!(tr.events().map(|e| e.1).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(tr.dropped(), 2);
        assert!(tr.to_csv().starts_with("time,position\n2,2\n"));
    }
}
