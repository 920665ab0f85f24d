use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::setting::{advance_extending, Quenched};
use crate::error::Result;
use crate::landscape::{neighborhood, Neighborhood, WellSide};
use crate::stats::Proportion;
use crate::walker::WalkState;

/// One walk from the origin up to time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginPath {
    /// First hitting times of `m⁻, m⁺, h⁻⁻, h⁻, h⁺, h⁺⁺` up to `t`.
    pub first_hits: [Option<f64>; 6],
    pub final_position: i64,
    /// First hitting times of `m⁻` and `m⁺`; the walk is followed past `t`
    /// until one of them is reached.
    pub choice_times: [Option<f64>; 2],
}

impl OriginPath {
    pub fn tau_m(&self) -> Option<f64> {
        match (self.first_hits[0], self.first_hits[1]) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// `m±` was reached first (both, when `m⁻ = m⁺`). `None` when unresolved.
    pub fn chose(&self, side: WellSide) -> Option<bool> {
        let [a, b] = self.choice_times;
        let first = match (a, b) {
            (None, None) => return None,
            (Some(a), Some(b)) => a.min(b),
            (a, b) => a.or(b).expect("one is set"),
        };
        let own = match side {
            WellSide::Minus => a,
            WellSide::Plus => b,
        };
        Some(own == Some(first))
    }
}

/// Walks from the origin; trial `i` uses stream `(seed, i)`.
pub fn origin_paths(q: &Quenched, trials: u64, seed: u64) -> Result<Vec<OriginPath>> {
    let s = q.sites;
    let targets = [s.m_minus, s.m_plus, s.h_minus_minus, s.h_minus, s.h_plus, s.h_plus_plus];
    let t = q.t.t();
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut state = WalkState::for_trial(seed, i, 0);
            let mut grown = None;
            let mut hits = [None; 6];
            for (k, &x) in targets.iter().enumerate() {
                if x == 0 {
                    hits[k] = Some(0.0);
                }
            }
            advance_extending(&q.env, &mut grown, &mut state, t, |time, x| {
                for (k, &target) in targets.iter().enumerate() {
                    if x == target && hits[k].is_none() {
                        hits[k] = Some(time);
                    }
                }
                false
            })?;
            let final_position = state.position;
            let mut choice = [hits[0], hits[1]];
            if choice == [None, None] {
                advance_extending(&q.env, &mut grown, &mut state, f64::INFINITY, |time, x| {
                    if x == s.m_minus {
                        choice[0] = Some(time);
                    }
                    if x == s.m_plus {
                        choice[1] = Some(time);
                    }
                    x == s.m_minus || x == s.m_plus
                })?;
            }
            Ok(OriginPath { first_hits: hits, final_position, choice_times: choice })
        })
        .collect()
}

/// Events of one trial, indexed `[−, +]` where sided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialEvents {
    pub a1: bool,
    pub a2: [bool; 2],
    pub a3: [bool; 2],
    /// `A₁ ∩ A₂± ∩ {ξₜ ∈ N(m±)}`.
    pub a4: [bool; 2],
    pub in_neighborhood: [bool; 2],
}

/// Event frequencies of the decomposition of the localization probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTally {
    pub log_t: f64,
    pub eps: f64,
    pub trials: u64,
    pub neighborhoods: [Neighborhood; 2],
    pub a1: Proportion,
    pub a2: [Proportion; 2],
    pub a3: [Proportion; 2],
    pub a4: [Proportion; 2],
    pub in_neighborhood: [Proportion; 2],
    /// `A₁ ∩ A₂± ∩ A₃± ∩ A₄±`.
    pub joint: [Proportion; 2],
    /// Frequency of `¬A₃±` among trials in `A₁ ∩ A₂±`.
    pub not_a3_given: [f64; 2],
    /// Frequency of `¬A₄±` among trials in `A₁ ∩ A₂± ∩ A₃±`.
    pub not_a4_given: [f64; 2],
    /// `1 − P̂(¬A₁) − P̂(¬A₂±) − P̂(¬A₃±|·) − P̂(¬A₄±|·)`.
    pub lower_bound: [f64; 2],
    /// `P̂(ξₜ ∈ N(m±)) ≥ P̂(joint) ≥ lower_bound` on this sample.
    pub inequality_holds: [bool; 2],
    /// Trials where the counted events broke set inclusions.
    pub logic_violations: u64,
    /// Trials where neither `m⁻` nor `m⁺` was ever reached.
    pub unresolved_choices: u64,
    #[serde(skip)]
    pub events: Vec<TrialEvents>,
}

/// `N_{ε log t}(m±)`.
pub fn side_neighborhoods(q: &Quenched, eps: f64) -> Result<[Neighborhood; 2]> {
    let a = eps * q.t.log_t();
    let make = |side| {
        let well = q.landscape.side_well(side);
        neighborhood(&q.f, well.bottom, a.min(well.depth_value), well.interval)
    };
    Ok([make(WellSide::Minus)?, make(WellSide::Plus)?])
}

/// Evaluate the events on each path.
pub fn tally_events(q: &Quenched, eps: f64, paths: &[OriginPath]) -> Result<EventTally> {
    let hoods = side_neighborhoods(q, eps)?;
    let t = q.t.t();
    let n = paths.len() as u64;
    let mut events = Vec::with_capacity(paths.len());
    let mut violations = 0;
    let mut unresolved = 0;
    for p in paths {
        let a1 = p.tau_m().is_some_and(|x| x <= t);
        let chose = [p.chose(WellSide::Minus), p.chose(WellSide::Plus)];
        if chose[0].is_none() {
            unresolved += 1;
        }
        let a2 = chose.map(|c| c == Some(true));
        // H⁻ = {h⁻⁻, h⁺} is indices 2 and 4, H⁺ = {h⁻, h⁺⁺} is 3 and 5
        let a3 = [
            p.first_hits[2].is_none() && p.first_hits[4].is_none(),
            p.first_hits[3].is_none() && p.first_hits[5].is_none(),
        ];
        let in_n = hoods.map(|h| h.contains(p.final_position as f64));
        let a4 = [a1 && a2[0] && in_n[0], a1 && a2[1] && in_n[1]];
        let ev = TrialEvents { a1, a2, a3, a4, in_neighborhood: in_n };
        for i in 0..2 {
            if ev.a4[i] && !(ev.a1 && ev.a2[i] && ev.in_neighborhood[i]) {
                violations += 1;
            }
        }
        events.push(ev);
    }
    let count = |pred: &dyn Fn(&TrialEvents) -> bool| events.iter().filter(|e| pred(e)).count() as u64;
    let prop = |k: u64| Proportion::new(k, n, 3.0);
    let frac = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let nf = n.max(1) as f64;

    let a1 = count(&|e| e.a1);
    let mut a2 = [prop(0); 2];
    let mut a3 = [prop(0); 2];
    let mut a4 = [prop(0); 2];
    let mut inn = [prop(0); 2];
    let mut joint = [prop(0); 2];
    let mut not_a3_given = [0.0; 2];
    let mut not_a4_given = [0.0; 2];
    let mut lower = [0.0; 2];
    let mut holds = [false; 2];
    for i in 0..2 {
        let c2 = count(&|e| e.a2[i]);
        let c12 = count(&|e| e.a1 && e.a2[i]);
        let c123 = count(&|e| e.a1 && e.a2[i] && e.a3[i]);
        let c1234 = count(&|e| e.a1 && e.a2[i] && e.a3[i] && e.in_neighborhood[i]);
        a2[i] = prop(c2);
        a3[i] = prop(count(&|e| e.a3[i]));
        a4[i] = prop(count(&|e| e.a4[i]));
        inn[i] = prop(count(&|e| e.in_neighborhood[i]));
        joint[i] = prop(c1234);
        not_a3_given[i] = frac(c12 - c123, c12);
        not_a4_given[i] = frac(c123 - c1234, c123);
        lower[i] = 1.0 - (n - a1) as f64 / nf - (n - c2) as f64 / nf - not_a3_given[i] - not_a4_given[i];
        let pj = c1234 as f64 / nf;
        holds[i] = inn[i].successes >= c1234 && a4[i].successes >= c1234 && pj >= lower[i] - 1e-12;
    }
    Ok(EventTally {
        log_t: q.t.log_t(),
        eps,
        trials: n,
        neighborhoods: hoods,
        a1: prop(a1),
        a2,
        a3,
        a4,
        in_neighborhood: inn,
        joint,
        not_a3_given,
        not_a4_given,
        lower_bound: lower,
        inequality_holds: holds,
        logic_violations: violations,
        unresolved_choices: unresolved,
        events,
    })
}

/// Simulate `trials` walks from the origin and tally the events.
pub fn event_decomposition(q: &Quenched, eps: f64, trials: u64, seed: u64) -> Result<EventTally> {
    let paths = origin_paths(q, trials, seed)?;
    tally_events(q, eps, &paths)
}
