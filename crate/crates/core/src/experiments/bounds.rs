use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::events::{origin_paths, side_neighborhoods, OriginPath};
use super::gamma::{gamma_values, GammaReport};
use super::setting::{advance_extending, Quenched};
use super::Params;
use crate::error::{Error, Result};
use crate::landscape::{reversible_measure, WellSide};
use crate::oracle::{ruin_probability, transient_law, Boundary};
use crate::stats::Proportion;
use crate::walker::{advance, reflect, WalkState};

/// A fitted constant above this marks the check as suspicious.
pub const SUSPICIOUS_CONSTANT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Theorem,
    Corollary,
}

impl Claim {
    pub fn lemma(which: u8) -> Result<Self> {
        match which {
            1 => Ok(Claim::Lemma1),
            2 => Ok(Claim::Lemma2),
            3 => Ok(Claim::Lemma3),
            4 => Ok(Claim::Lemma4),
            _ => Err(Error::InvalidArgument(format!("no lemma {which}; expected 1 to 4"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// An upper bound `K·g(t)` on a probability, checked against simulation and,
/// where one exists, the exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub claim: Claim,
    pub side: Option<WellSide>,
    pub log_t: f64,
    /// Monte Carlo estimate of the bounded probability.
    pub monte_carlo: Option<Proportion>,
    /// The bounded probability from an exact oracle.
    pub exact: Option<f64>,
    /// Exact value within 3 standard errors of the Monte Carlo estimate.
    pub consistent: Option<bool>,
    /// Upper end of the probability's confidence interval; the exact value
    /// when there is one.
    pub upper: f64,
    /// `ε₁`, `ε₂`, `ε₃` or `ε`.
    pub exponent: f64,
    /// `g(t)`, the bound at `K = 1`.
    pub unit_bound: f64,
    pub constant: f64,
    pub bound: f64,
    pub suspicious: bool,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl BoundCheck {
    pub(crate) fn new(claim: Claim, side: Option<WellSide>, log_t: f64, exponent: f64, unit_bound: f64) -> Self {
        Self {
            claim,
            side,
            log_t,
            monte_carlo: None,
            exact: None,
            consistent: None,
            upper: f64::NAN,
            exponent,
            unit_bound,
            constant: 1.0,
            bound: unit_bound,
            suspicious: false,
            verdict: Verdict::NotApplicable,
            notes: Vec::new(),
        }
    }

    fn not_applicable(claim: Claim, side: Option<WellSide>, log_t: f64, why: &str) -> Self {
        let mut c = Self::new(claim, side, log_t, f64::NAN, f64::NAN);
        c.notes.push(why.into());
        c
    }

    fn finish(mut self, mc: Option<Proportion>, exact: Option<f64>) -> Self {
        self.monte_carlo = mc;
        self.exact = exact;
        self.consistent = match (mc, exact) {
            (Some(m), Some(e)) => Some(m.consistent_with(e, 3.0)),
            _ => None,
        };
        self.upper = match (mc, exact) {
            (_, Some(e)) => e,
            (Some(m), None) => m.upper,
            (None, None) => f64::NAN,
        };
        self.set_constant(1.0);
        self
    }

    /// Re-evaluate the verdict at constant `k`.
    pub fn set_constant(&mut self, k: f64) {
        if self.verdict == Verdict::NotApplicable && self.upper.is_nan() {
            return;
        }
        self.constant = k;
        self.bound = k * self.unit_bound;
        self.suspicious = k > SUSPICIOUS_CONSTANT;
        let ok = self.upper <= self.bound && self.consistent != Some(false);
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    }
}

/// Fit the smallest `K ≥ 1` making the first applicable check hold and apply
/// it to the whole series, which must share claim, side and environment.
pub fn fit_constant(series: &mut [BoundCheck]) -> Option<f64> {
    let first = series.iter().find(|c| !c.upper.is_nan())?;
    let k = if first.upper <= first.unit_bound { 1.0 } else { first.upper / first.unit_bound * (1.0 + 1e-12) };
    for c in series.iter_mut().filter(|c| !c.upper.is_nan()) {
        c.set_constant(k);
    }
    Some(k)
}

fn log_power(log_t: f64, p: f64) -> f64 {
    log_t.powf(p)
}

fn side_index(side: WellSide) -> usize {
    match side {
        WellSide::Minus => 0,
        WellSide::Plus => 1,
    }
}

/// Lemma 1 and Lemma 2 from walks started at the origin.
pub fn origin_lemmas(q: &Quenched, gamma: &GammaReport, paths: &[OriginPath], params: &Params) -> Result<[BoundCheck; 2]> {
    let log_t = q.t.log_t();
    if !gamma.overall {
        let why = "environment is not in Γ";
        return Ok([
            BoundCheck::not_applicable(Claim::Lemma1, None, log_t, why),
            BoundCheck::not_applicable(Claim::Lemma2, None, log_t, why),
        ]);
    }
    let values = gamma_values(q, params)?;
    let t = q.t.t();
    let n = paths.len() as u64;
    let s = q.sites;

    let eps1 = values.elevation.iter().map(|e| 1.0 - e / log_t).fold(f64::INFINITY, f64::min);
    let mut l1 = BoundCheck::new(Claim::Lemma1, None, log_t, eps1, (-eps1 * log_t).exp());
    let survived = paths.iter().filter(|p| !p.tau_m().is_some_and(|x| x <= t)).count() as u64;
    let exact1 = if s.m_minus < 0 && 0 < s.m_plus {
        let law = transient_law(&q.env, s.m_minus, s.m_plus, Boundary::Absorbing, 0, &[t])?;
        law.interior_mass(0)
    } else {
        0.0
    };
    l1 = l1.finish(Some(Proportion::new(survived, n, 3.0)), Some(exact1));

    let eps2 = values.peak_gap / log_t;
    let unit2 = (-values.peak_gap).exp() * log_power(log_t, (2.0 * params.kappa_hat + 1.0) * params.m);
    let mut l2 = BoundCheck::new(Claim::Lemma2, None, log_t, eps2, unit2);
    let wrong = match q.landscape.m_t_side {
        WellSide::Minus => WellSide::Plus,
        WellSide::Plus => WellSide::Minus,
    };
    let mut wrong_count = 0;
    let mut unresolved = 0;
    for p in paths {
        match p.chose(wrong) {
            Some(true) => wrong_count += 1,
            Some(false) => {}
            None => {
                unresolved += 1;
                wrong_count += 1;
            }
        }
    }
    let exact2 = if s.m_minus < 0 && 0 < s.m_plus {
        let left_first = ruin_probability(&q.env, s.m_minus, 0, s.m_plus)?;
        match wrong {
            WellSide::Minus => left_first,
            WellSide::Plus => 1.0 - left_first,
        }
    } else {
        0.0
    };
    l2.side = Some(wrong);
    if unresolved > 0 {
        l2.notes.push(format!("{unresolved} trials never reached m⁻ or m⁺, counted as wrong side"));
    }
    l2 = l2.finish(Some(Proportion::new(wrong_count, n, 3.0)), Some(exact2));
    Ok([l1, l2])
}

/// Lemma 3: escape from `m±` over `H±` before `t`.
pub fn escape_lemma(
    q: &Quenched,
    gamma: &GammaReport,
    side: WellSide,
    trials: u64,
    seed: u64,
    params: &Params,
) -> Result<BoundCheck> {
    let log_t = q.t.log_t();
    if !gamma.overall {
        return Ok(BoundCheck::not_applicable(Claim::Lemma3, Some(side), log_t, "environment is not in Γ"));
    }
    let values = gamma_values(q, params)?;
    let depth = values.depth[side_index(side)];
    let eps3 = depth / log_t - 1.0;
    let unit = (log_t - depth).exp() * log_power(log_t, 2.0 * params.kappa_hat * params.m);
    let check = BoundCheck::new(Claim::Lemma3, Some(side), log_t, eps3, unit);

    let m = q.sites.bottom(side);
    let (hl, hr) = q.sites.escape_set(side);
    let t = q.t.t();
    let escapes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut state = WalkState::for_trial(seed, i, m);
            let mut grown = None;
            let stop = advance_extending(&q.env, &mut grown, &mut state, t, |_, x| x == hl || x == hr)?;
            Ok(stop == crate::walker::Stop::Visitor)
        })
        .collect::<Result<_>>()?;
    let k = escapes.iter().filter(|&&e| e).count() as u64;
    let law = transient_law(&q.env, hl, hr, Boundary::Absorbing, m, &[t])?;
    Ok(check.finish(Some(Proportion::new(k, trials, 3.0)), Some(law.endpoint_mass(0))))
}

/// Reflected-chain occupation check of Lemma 4, with the `θₓ/θ_m` envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationCheck {
    pub check: BoundCheck,
    pub well: (i64, i64),
    pub times: Vec<f64>,
    /// Exact `P_s(m → N^c)` per time.
    pub exact_outside: Vec<f64>,
    /// Simulated frequency of `ξ̂_s ∉ N` per time.
    pub simulated_outside: Vec<Proportion>,
    /// `max_{s, x∉N} P_s(m → x) / (θₓ/θ_m)`.
    pub exact_envelope_ratio: f64,
    /// Sites whose simulated occupation is significantly above `θₓ/θ_m`.
    pub envelope_violations: u64,
}

/// Lemma 4 on the reflected chain of `Well(m±)` at `s ∈ {t/4, t/2, 3t/4}`.
pub fn occupation_lemma(
    q: &Quenched,
    gamma: &GammaReport,
    side: WellSide,
    trials: u64,
    seed: u64,
    params: &Params,
) -> Result<OccupationCheck> {
    let log_t = q.t.log_t();
    let t = q.t.t();
    let times = vec![t / 4.0, t / 2.0, 0.75 * t];
    let (wl, wr) = q.well_sites(side);
    if !gamma.overall {
        return Ok(OccupationCheck {
            check: BoundCheck::not_applicable(Claim::Lemma4, Some(side), log_t, "environment is not in Γ"),
            well: (wl, wr),
            times,
            exact_outside: vec![],
            simulated_outside: vec![],
            exact_envelope_ratio: f64::NAN,
            envelope_violations: 0,
        });
    }
    let eps = params.eps;
    let unit = (-eps * log_t).exp() * log_power(log_t, (2.0 * params.kappa_hat + 1.0) * params.m);
    let check = BoundCheck::new(Claim::Lemma4, Some(side), log_t, eps, unit);
    let hood = side_neighborhoods(q, eps)?[side_index(side)];
    let m = q.sites.bottom(side);
    let outside = |x: i64| !hood.contains(x as f64);

    let law = transient_law(&q.env, wl, wr, Boundary::Reflecting, m, &times)?;
    let theta = reversible_measure(&q.env);
    let log_theta_m = theta.log_theta(m).expect("m is in the window");
    let envelope = |x: i64| (theta.log_theta(x).expect("well is in the window") - log_theta_m).exp();
    let mut exact_outside = Vec::new();
    let mut ratio: f64 = 0.0;
    for k in 0..times.len() {
        let mut mass = 0.0;
        for x in wl..=wr {
            if outside(x) {
                let p = law.probability(k, x).expect("site in well");
                mass += p;
                ratio = ratio.max(p / envelope(x));
            }
        }
        exact_outside.push(mass);
    }

    let chain = reflect(&q.env, wl, wr)?;
    let positions: Vec<Vec<i64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut state = WalkState::for_trial(seed, i, m);
            let mut out = Vec::with_capacity(times.len());
            for &s in &times {
                advance(&chain, &mut state, s, |_, _| false)?;
                out.push(state.position);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n_sites = (wr - wl + 1) as usize;
    let mut simulated = Vec::new();
    let mut violations = 0;
    for k in 0..times.len() {
        let mut counts = vec![0u64; n_sites];
        for p in &positions {
            counts[(p[k] - wl) as usize] += 1;
        }
        let out: u64 = (wl..=wr).filter(|&x| outside(x)).map(|x| counts[(x - wl) as usize]).sum();
        simulated.push(Proportion::new(out, trials, 3.0));
        for x in (wl..=wr).filter(|&x| outside(x)) {
            let prop = Proportion::new(counts[(x - wl) as usize], trials, 3.0);
            if prop.lower > envelope(x) * (1.0 + 1e-8) {
                violations += 1;
            }
        }
    }

    let (kmax, _) = exact_outside
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| if v > bv { (k, v) } else { (bk, bv) });
    let mut check = check.finish(Some(simulated[kmax]), Some(exact_outside[kmax]));
    let all_consistent = simulated.iter().zip(&exact_outside).all(|(s, &e)| s.consistent_with(e, 3.0));
    if !all_consistent {
        check.consistent = Some(false);
        check.notes.push("simulated occupation disagrees with the exact law at some time".into());
        check.set_constant(check.constant);
    }
    if ratio > 1.0 + 1e-8 || violations > 0 {
        check.notes.push(format!("θ envelope exceeded: ratio {ratio}, {violations} sites"));
        check.verdict = Verdict::Fail;
    }
    Ok(OccupationCheck {
        check,
        well: (wl, wr),
        times,
        exact_outside,
        simulated_outside: simulated,
        exact_envelope_ratio: ratio,
        envelope_violations: violations,
    })
}

/// One lemma at one time scale; two checks for the sided lemmas.
pub fn lemma_check(
    q: &Quenched,
    gamma: &GammaReport,
    which: u8,
    trials: u64,
    seed: u64,
    params: &Params,
) -> Result<Vec<BoundCheck>> {
    match Claim::lemma(which)? {
        Claim::Lemma1 | Claim::Lemma2 => {
            let paths = if gamma.overall { origin_paths(q, trials, seed)? } else { Vec::new() };
            let [l1, l2] = origin_lemmas(q, gamma, &paths, params)?;
            Ok(vec![if which == 1 { l1 } else { l2 }])
        }
        Claim::Lemma3 => WellSide::BOTH.iter().map(|&s| escape_lemma(q, gamma, s, trials, seed, params)).collect(),
        _ => WellSide::BOTH
            .iter()
            .map(|&s| occupation_lemma(q, gamma, s, trials, seed, params).map(|o| o.check))
            .collect(),
    }
}

/// Localization at one time scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub log_t: f64,
    pub delta: f64,
    pub m_t: i64,
    /// `P̂(|ξₜ − mₜ| < δ log² t)`.
    pub success: Proportion,
    /// Failure probability against the quenched bound.
    pub check: BoundCheck,
}

/// Theorem check from walks started at the origin.
pub fn localization(q: &Quenched, gamma: &GammaReport, paths: &[OriginPath], params: &Params) -> Localization {
    let log_t = q.t.log_t();
    let radius = params.delta * q.t.spatial_scale();
    let n = paths.len() as u64;
    let m_t = q.sites.m_t;
    let hits = paths.iter().filter(|p| ((p.final_position - m_t).abs() as f64) < radius).count() as u64;
    let success = Proportion::new(hits, n, 3.0);
    let check = if gamma.overall {
        let (k, m, eps) = (params.kappa_hat, params.m, params.eps);
        let unit = (-eps * log_t).exp()
            * (1.0 + log_power(log_t, 2.0 * k * m) + 2.0 * log_power(log_t, (2.0 * k + 1.0) * m));
        BoundCheck::new(Claim::Theorem, None, log_t, eps, unit).finish(Some(Proportion::new(n - hits, n, 3.0)), None)
    } else {
        BoundCheck::not_applicable(Claim::Theorem, None, log_t, "environment is not in Γ")
    };
    Localization { log_t, delta: params.delta, m_t, success, check }
}

/// Simulate and check localization at each time scale of an analysed series.
pub fn quenched_localization(
    series: &[(Quenched, GammaReport)],
    trials: u64,
    seed: u64,
    params: &Params,
) -> Result<Vec<Localization>> {
    let mut out = series
        .iter()
        .map(|(q, g)| Ok(localization(q, g, &origin_paths(q, trials, seed)?, params)))
        .collect::<Result<Vec<_>>>()?;
    let mut checks: Vec<BoundCheck> = out.iter().map(|l| l.check.clone()).collect();
    fit_constant(&mut checks);
    for (l, c) in out.iter_mut().zip(checks) {
        l.check = c;
    }
    Ok(out)
}
