use serde::{Deserialize, Serialize};

use super::setting::Quenched;
use super::{Mode, Params};
use crate::error::Result;
use crate::landscape::{depth, elevation, neighborhood, WellSide};

/// Membership of one Γ-set. `member` is `None` when the set was not evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: f64,
    /// Positive exactly when the environment is a member.
    pub margin: Option<f64>,
    pub member: Option<bool>,
}

impl GammaEntry {
    /// Set `{value > threshold}`.
    fn above(name: &str, value: f64, threshold: f64) -> Self {
        let margin = value - threshold;
        Self { name: name.into(), value: Some(value), threshold, margin: Some(margin), member: Some(margin > 0.0) }
    }

    /// Set `{value < threshold}`.
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        let margin = threshold - value;
        Self { name: name.into(), value: Some(value), threshold, margin: Some(margin), member: Some(margin > 0.0) }
    }

    fn not_evaluated(name: &str, threshold: f64) -> Self {
        Self { name: name.into(), value: None, threshold, margin: None, member: None }
    }

    /// Members and unevaluated sets both count toward Γ.
    pub fn passes(&self) -> bool {
        self.member != Some(false)
    }
}

/// The ε-independent quantities behind the Γ-sets at one time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaValues {
    pub log_t: f64,
    pub m: f64,
    pub kappa_hat: f64,
    /// `sup_{|x|<log^M t} |V − W|`, coupled mode only.
    pub discrepancy: Option<f64>,
    /// `max(|h⁻⁻|, |h⁺⁺|)`.
    pub containment: f64,
    /// `|f(h⁻) − f(h⁺)|`.
    pub peak_gap: f64,
    pub elevation: [f64; 2],
    pub depth: [f64; 2],
}

/// Γ-membership of one environment at one `(t, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub log_t: f64,
    pub eps: f64,
    pub m: f64,
    pub kappa_hat: f64,
    pub mode: Mode,
    /// Γ₁, Γ₂, Γ₃, Γ₄⁻, Γ₄⁺, Γ₅⁻, Γ₅⁺, Γ₆⁻, Γ₆⁺ in this order.
    pub sets: Vec<GammaEntry>,
    pub overall: bool,
}

impl GammaReport {
    pub fn get(&self, name: &str) -> Option<&GammaEntry> {
        self.sets.iter().find(|s| s.name == name)
    }
}

pub const GAMMA_SET_NAMES: [&str; 9] =
    ["gamma1", "gamma2", "gamma3", "gamma4-", "gamma4+", "gamma5-", "gamma5+", "gamma6-", "gamma6+"];

fn side_index(side: WellSide) -> usize {
    match side {
        WellSide::Minus => 0,
        WellSide::Plus => 1,
    }
}

/// The ε-independent part of the classification.
pub fn gamma_values(q: &Quenched, params: &Params) -> Result<GammaValues> {
    let log_t = q.t.log_t();
    let lm = log_t.powf(params.m);
    let l = &q.landscape.landmarks;
    let f = &q.f;
    let value = |x: f64| f.at(x).expect("landmarks are grid points");
    let mut elev = [0.0; 2];
    let mut dep = [0.0; 2];
    for side in WellSide::BOTH {
        let well = q.landscape.side_well(side).interval;
        elev[side_index(side)] = elevation(f, well)?;
        dep[side_index(side)] = depth(f, well)?;
    }
    Ok(GammaValues {
        log_t,
        m: params.m,
        kappa_hat: params.kappa_hat,
        discrepancy: q.coupling.as_ref().and_then(|c| c.discrepancy(lm)),
        containment: l.h_minus_minus.abs().max(l.h_plus_plus.abs()),
        peak_gap: (value(l.h_minus) - value(l.h_plus)).abs(),
        elevation: elev,
        depth: dep,
    })
}

/// Neighborhood widths `|N_{ε log t}(m±)|`.
pub fn neighborhood_widths(q: &Quenched, eps: f64) -> Result<[f64; 2]> {
    let a = eps * q.t.log_t();
    let mut out = [0.0; 2];
    for side in WellSide::BOTH {
        let well = q.landscape.side_well(side);
        let n = neighborhood(&q.f, well.bottom, a.min(well.depth_value), well.interval)?;
        out[side_index(side)] = n.width();
    }
    Ok(out)
}

/// Flags and margins at `eps` from precomputed values and neighborhood widths.
pub fn gamma_report(values: &GammaValues, widths: [f64; 2], eps: f64, mode: Mode) -> GammaReport {
    let log_t = values.log_t;
    let lm = log_t.powf(values.m);
    let kmt = values.kappa_hat * values.m * log_t.ln().max(0.0);
    let gamma1 = match values.discrepancy {
        Some(d) => GammaEntry::below("gamma1", d, kmt),
        None => GammaEntry::not_evaluated("gamma1", kmt),
    };
    let mut sets = vec![
        gamma1,
        GammaEntry::below("gamma2", values.containment, lm),
        GammaEntry::above("gamma3", values.peak_gap / log_t, eps),
    ];
    for (i, s) in ["-", "+"].iter().enumerate() {
        sets.push(GammaEntry::above(&format!("gamma4{s}"), (log_t - values.elevation[i]) / log_t, eps));
    }
    for (i, s) in ["-", "+"].iter().enumerate() {
        sets.push(GammaEntry::above(&format!("gamma5{s}"), (values.depth[i] - log_t) / log_t, eps));
    }
    for (i, s) in ["-", "+"].iter().enumerate() {
        sets.push(GammaEntry::below(&format!("gamma6{s}"), widths[i], eps * log_t * log_t));
    }
    let overall = sets.iter().all(GammaEntry::passes);
    GammaReport { log_t, eps, m: values.m, kappa_hat: values.kappa_hat, mode, sets, overall }
}

/// Classify an analysed environment.
pub fn classify(q: &Quenched, params: &Params) -> Result<GammaReport> {
    let values = gamma_values(q, params)?;
    let widths = neighborhood_widths(q, params.eps)?;
    Ok(gamma_report(&values, widths, params.eps, params.mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{DistributionSpec, Environment, Window};
    use crate::experiments::prepare;
    use crate::landscape::TimeScale;

    #[test]
    fn overall_is_conjunction_and_margins_match_flags() {
        let spec = DistributionSpec::default_two_point();
        let t = TimeScale::from_log(6.0).unwrap();
        for seed in 0..20 {
            let env = Environment::sample(&spec, seed, Window::symmetric(50));
            let q = prepare(&env, t, &Params::default()).unwrap();
            let rep = classify(&q, &Params::default()).unwrap();
            assert_eq!(rep.sets.len(), 9);
            assert_eq!(rep.overall, rep.sets.iter().all(|s| s.member != Some(false)));
            assert!(rep.get("gamma1").unwrap().member.is_none());
            for s in &rep.sets[1..] {
                assert_eq!(s.member, Some(s.margin.unwrap() > 0.0));
            }
        }
    }

    #[test]
    fn symmetric_peaks_fail_gamma3() {
        let values = GammaValues {
            log_t: 5.0,
            m: 3.0,
            kappa_hat: 1.0,
            discrepancy: None,
            containment: 10.0,
            peak_gap: 0.0,
            elevation: [1.0, 1.0],
            depth: [9.0, 9.0],
        };
        let rep = gamma_report(&values, [1.0, 1.0], 0.01, Mode::Surrogate);
        let g3 = rep.get("gamma3").unwrap();
        assert_eq!(g3.value, Some(0.0));
        assert_eq!(g3.member, Some(false));
        assert!(!rep.overall);
    }
}
