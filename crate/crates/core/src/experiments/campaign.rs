use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::annealed::{annealed_frequencies, corollary_assembly};
use super::bounds::{fit_constant, lemma_check, quenched_localization, BoundCheck, Verdict};
use super::events::event_decomposition;
use super::gamma::{classify, GammaReport};
use super::scaling::{scaling_check, scaling_distribution_check};
use super::setting::{prepare, prepare_coupled, Quenched};
use super::{Mode, Params};
use crate::environment::{DistributionSpec, Environment, Window};
use crate::error::{Error, Result};
use crate::landscape::{brownian_path, TimeScale};
use crate::oracle::{absorption_solve, ruin_probability};
use crate::rng::derive_seed;
use crate::stats::Proportion;
use crate::walker::{advance, WalkState};

pub const SCHEMA_VERSION: u32 = 1;

const CLAIMS: [&str; 11] =
    ["ruin", "gamma", "events", "localization", "lemma1", "lemma2", "lemma3", "lemma4", "scaling", "annealed", "corollary"];

/// Every knob of a campaign; embedded in the report so a run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub spec: DistributionSpec,
    pub seed: u64,
    pub log_t: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub params: Params,
    /// Γ-members wanted, and how many environments to scan for them.
    pub members: usize,
    pub scan_limit: u64,
    pub localization_trials: u64,
    pub lemma_trials: u64,
    pub event_trials: u64,
    pub annealed_envs: usize,
    pub corollary_log_t: f64,
    pub corollary_envs: usize,
    pub corollary_trials: u64,
    pub ruin_instances: usize,
    pub ruin_trials: u64,
    pub scaling_paths: usize,
    pub scaling_log_t: [f64; 2],
    pub ks_threshold: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            spec: DistributionSpec::default_two_point(),
            seed: 1,
            log_t: vec![8.0, 10.0, 12.0],
            eps_grid: vec![0.2, 0.1, 0.05],
            params: Params::default(),
            members: 4,
            scan_limit: 300,
            localization_trials: 500,
            lemma_trials: 100,
            event_trials: 500,
            annealed_envs: 200,
            corollary_log_t: 8.0,
            corollary_envs: 40,
            corollary_trials: 200,
            ruin_instances: 10,
            ruin_trials: 20_000,
            scaling_paths: 200,
            scaling_log_t: [4.0, 9.0],
            ks_threshold: 0.01,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.log_t.is_empty() || self.log_t.iter().any(|&l| !(l > 1.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("log_t must be a non-empty list of values above 1".into()));
        }
        for &e in &self.eps_grid {
            Params { eps: e, ..self.params }.validate()?;
        }
        Ok(())
    }

    fn time_scales(&self) -> Result<Vec<TimeScale>> {
        self.log_t.iter().map(|&l| TimeScale::from_log(l)).collect()
    }
}

// ---------------------------------------------------------------- ruin

/// Exact, solved and simulated ruin probabilities on one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinInstance {
    pub env_seed: u64,
    pub a: i64,
    pub z: i64,
    pub b: i64,
    pub exact: f64,
    pub solved: f64,
    pub relative_gap: f64,
    pub monte_carlo: Proportion,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinSuite {
    /// Largest error of the closed form against `(b − z)/(b − a)` on a flat environment.
    pub flat_max_error: f64,
    pub max_relative_gap: f64,
    pub instances: Vec<RuinInstance>,
    pub pass: bool,
}

fn simulate_ruin(env: &Environment, a: i64, z: i64, b: i64, trials: u64, seed: u64) -> Result<Proportion> {
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut state = WalkState::for_trial(seed, i, z);
            advance(env, &mut state, f64::INFINITY, |_, x| x == a || x == b)?;
            Ok(state.position == a)
        })
        .collect::<Result<_>>()?;
    Ok(Proportion::new(hits.iter().filter(|&&h| h).count() as u64, trials, 3.0))
}

/// Closed form against the harmonic solve and against simulation.
pub fn ruin_suite(spec: &DistributionSpec, seed: u64, instances: usize, trials: u64) -> Result<RuinSuite> {
    let (a, b) = (-10, 10);
    let flat = Environment::from_log_ratios(spec, a, &vec![0.0; (b - a + 1) as usize])?;
    let mut flat_max_error: f64 = 0.0;
    for z in a + 1..b {
        let want = (b - z) as f64 / (b - a) as f64;
        flat_max_error = flat_max_error.max((ruin_probability(&flat, a, z, b)? - want).abs());
    }
    let mut out = Vec::with_capacity(instances);
    for k in 0..instances {
        let env_seed = derive_seed(seed, k as u64);
        let env = Environment::sample(spec, env_seed, Window::new(a, b)?);
        let z = -6 + 3 * (k as i64 % 5);
        let exact = ruin_probability(&env, a, z, b)?;
        let solved = absorption_solve(&env, a, b)?[(z - a - 1) as usize];
        let relative_gap = (exact - solved).abs() / exact.abs().max(f64::MIN_POSITIVE);
        let monte_carlo = simulate_ruin(&env, a, z, b, trials, derive_seed(env_seed, 0x7275))?;
        let consistent = monte_carlo.consistent_with(exact, 3.0);
        out.push(RuinInstance { env_seed, a, z, b, exact, solved, relative_gap, monte_carlo, consistent });
    }
    let max_relative_gap = out.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
    let pass = flat_max_error <= 1e-12 && max_relative_gap <= 1e-9 && out.iter().all(|r| r.consistent);
    Ok(RuinSuite { flat_max_error, max_relative_gap, instances: out, pass })
}

// ---------------------------------------------------------------- members

/// One environment classified at every time scale of the campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentSeries {
    pub env_seed: u64,
    pub reports: Vec<GammaReport>,
    /// In Γ at every time scale.
    pub member: bool,
    #[serde(skip)]
    pub quenched: Vec<Quenched>,
}

impl EnvironmentSeries {
    pub fn pairs(&self) -> Vec<(Quenched, GammaReport)> {
        self.quenched.iter().cloned().zip(self.reports.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberSelection {
    pub scanned: u64,
    /// Environments whose landmarks did not resolve at some time scale.
    pub unresolved: u64,
    pub series: Vec<EnvironmentSeries>,
}

fn analyse(config: &CampaignConfig, env_seed: u64, ts: &[TimeScale]) -> Result<EnvironmentSeries> {
    let params = &config.params;
    let mut quenched = Vec::with_capacity(ts.len());
    let mut reports = Vec::with_capacity(ts.len());
    for &t in ts {
        let q = match params.mode {
            Mode::Surrogate => prepare(&Environment::sample(&config.spec, env_seed, Window::symmetric(64)), t, params)?,
            Mode::Coupled => prepare_coupled(&config.spec, env_seed, t, params)?,
        };
        reports.push(classify(&q, params)?);
        quenched.push(q);
    }
    let member = reports.iter().all(|r| r.overall);
    Ok(EnvironmentSeries { env_seed, reports, member, quenched })
}

/// Scan environments `derive_seed(seed, k)` in order until `wanted` of them
/// are in Γ at every time scale.
pub fn select_members(config: &CampaignConfig) -> Result<MemberSelection> {
    let ts = config.time_scales()?;
    let mut series = Vec::new();
    let (mut scanned, mut unresolved) = (0, 0);
    while scanned < config.scan_limit && series.len() < config.members {
        let env_seed = derive_seed(config.seed, scanned);
        scanned += 1;
        match analyse(config, env_seed, &ts) {
            Ok(s) if s.member => series.push(s),
            Ok(_) => {}
            Err(Error::WindowExhausted(_)) => unresolved += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(MemberSelection { scanned, unresolved, series })
}

// ---------------------------------------------------------------- report

/// Result of one claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Section {
    pub claim: String,
    pub pass: bool,
    /// Human-readable summary, one finding per line.
    pub lines: Vec<String>,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub claim: String,
    pub config: CampaignConfig,
    /// Command line that produced the report, when run from the binary.
    pub invocation: Option<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub provenance: Provenance,
    /// Wall-clock stamp; left empty by the library so reports are reproducible.
    pub generated_at: Option<String>,
    pub sections: Vec<Section>,
    pub pass: bool,
}

impl Report {
    /// `PASS claim` or `FAIL claim` followed by the section lines.
    pub fn verdict_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.sections {
            out.push(format!("{} {}", if s.pass { "PASS" } else { "FAIL" }, s.claim));
            out.extend(s.lines.iter().map(|l| format!("  {l}")));
        }
        out
    }
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))
}

fn no_failures(checks: &[BoundCheck]) -> bool {
    checks.iter().all(|c| c.verdict != Verdict::Fail)
}

fn describe_check(env_seed: u64, c: &BoundCheck) -> String {
    let side = c.side.map(|s| s.sign()).unwrap_or("");
    format!(
        "env {env_seed:#x} log t = {}{side}: {:?}, upper {:.3e} vs bound {:.3e} (K = {:.3})",
        c.log_t, c.verdict, c.upper, c.bound, c.constant
    )
}

fn gamma_section(sel: &MemberSelection, config: &CampaignConfig) -> Result<Section> {
    let mut lines = vec![format!(
        "{} member(s) in Γ at every log t in {:?} after scanning {} environments ({} unresolved)",
        sel.series.len(),
        config.log_t,
        sel.scanned,
        sel.unresolved
    )];
    for s in &sel.series {
        lines.push(format!("env {:#x}: member", s.env_seed));
    }
    Ok(Section { claim: "gamma".into(), pass: !sel.series.is_empty(), lines, data: to_value(sel)? })
}

fn events_section(sel: &MemberSelection, config: &CampaignConfig) -> Result<Section> {
    let mut lines = Vec::new();
    let mut data = Vec::new();
    let mut pass = !sel.series.is_empty();
    for s in &sel.series {
        for (i, q) in s.quenched.iter().enumerate() {
            let seed = derive_seed(derive_seed(s.env_seed, 0xE7), i as u64);
            let tally = event_decomposition(q, config.params.eps, config.event_trials, seed)?;
            let ok = tally.inequality_holds == [true, true] && tally.logic_violations == 0;
            pass &= ok;
            lines.push(format!(
                "env {:#x} log t = {}: P(N(m±)) = [{:.3}, {:.3}] ≥ lower bound [{:.3}, {:.3}]{}",
                s.env_seed,
                tally.log_t,
                tally.in_neighborhood[0].estimate,
                tally.in_neighborhood[1].estimate,
                tally.lower_bound[0],
                tally.lower_bound[1],
                if ok { "" } else { " VIOLATED" }
            ));
            data.push(json!({ "env_seed": s.env_seed, "tally": tally }));
        }
    }
    Ok(Section { claim: "events".into(), pass, lines, data: Value::Array(data) })
}

fn localization_section(sel: &MemberSelection, config: &CampaignConfig) -> Result<Section> {
    let mut lines = Vec::new();
    let mut data = Vec::new();
    let mut pass = !sel.series.is_empty();
    let (mut hits, mut total) = (0, 0);
    for s in &sel.series {
        let seed = derive_seed(s.env_seed, 0x10C);
        let locs = quenched_localization(&s.pairs(), config.localization_trials, seed, &config.params)?;
        for l in &locs {
            hits += l.success.successes;
            total += l.success.trials;
            pass &= l.check.verdict != Verdict::Fail;
            lines.push(format!(
                "env {:#x} log t = {}: P(|ξ − m_t| < δ log² t) = {:.4}; {}",
                s.env_seed,
                l.log_t,
                l.success.estimate,
                describe_check(s.env_seed, &l.check)
            ));
        }
        data.push(json!({ "env_seed": s.env_seed, "localization": locs }));
    }
    let pooled = Proportion::new(hits, total, 3.0);
    lines.push(format!("pooled localization frequency {:.4} over {} walks", pooled.estimate, total));
    Ok(Section {
        claim: "localization".into(),
        pass,
        lines,
        data: json!({ "pooled": pooled, "environments": data }),
    })
}

fn lemma_section(sel: &MemberSelection, config: &CampaignConfig, which: u8) -> Result<Section> {
    let mut lines = Vec::new();
    let mut data = Vec::new();
    let mut pass = !sel.series.is_empty();
    for s in &sel.series {
        let mut per_t = Vec::new();
        for (i, (q, g)) in s.quenched.iter().zip(&s.reports).enumerate() {
            let seed = derive_seed(derive_seed(s.env_seed, 0x1E0 + which as u64), i as u64);
            per_t.push(lemma_check(q, g, which, config.lemma_trials, seed, &config.params)?);
        }
        let width = per_t.iter().map(Vec::len).max().unwrap_or(0);
        let mut series = Vec::new();
        for k in 0..width {
            let mut checks: Vec<BoundCheck> = per_t.iter().filter_map(|v| v.get(k).cloned()).collect();
            fit_constant(&mut checks);
            pass &= no_failures(&checks);
            lines.extend(checks.iter().map(|c| describe_check(s.env_seed, c)));
            series.push(checks);
        }
        data.push(json!({ "env_seed": s.env_seed, "checks": series }));
    }
    Ok(Section { claim: format!("lemma{which}"), pass, lines, data: Value::Array(data) })
}

fn scaling_section(config: &CampaignConfig) -> Result<Section> {
    let t = TimeScale::from_log(1.0)?;
    let verdicts = (0..config.scaling_paths.min(50))
        .into_par_iter()
        .map(|k| {
            let f = brownian_path(derive_seed(config.seed, 0x5CA + k as u64), 0.125, 2048, 2048, 1.0)?;
            [2.0, 0.5].iter().map(|&a| scaling_check(&f, t, a, config.params.eps)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let verdicts: Vec<_> = verdicts.into_iter().flatten().collect();
    let exact = verdicts.iter().all(|v| v.holds);
    let dist = scaling_distribution_check(
        derive_seed(config.seed, 0x5CB),
        config.scaling_paths,
        config.scaling_log_t,
        1.0,
        config.ks_threshold,
    )?;
    let lines = vec![
        format!(
            "exact rescaling by a ∈ {{2, 1/2}}: {} of {} comparisons hold",
            verdicts.iter().filter(|v| v.holds).count(),
            verdicts.len()
        ),
        format!(
            "h⁺⁺/log² t at log t = {:?}: KS D = {:.4}, p = {:.4}",
            dist.log_t, dist.ks.statistic, dist.ks.p_value
        ),
    ];
    Ok(Section {
        claim: "scaling".into(),
        pass: exact && dist.holds,
        lines,
        data: json!({ "exact": verdicts, "distribution": dist }),
    })
}

fn annealed_section(config: &CampaignConfig) -> Result<Section> {
    let table = annealed_frequencies(
        &config.spec,
        &config.log_t,
        &config.eps_grid,
        config.annealed_envs,
        derive_seed(config.seed, 0xA22),
        &config.params,
    )?;
    let mut lines: Vec<String> = table
        .trends
        .iter()
        .map(|tr| format!("{} {}: {}", if tr.holds { "holds" } else { "FAILS" }, tr.name, tr.detail))
        .collect();
    let structural = ["gamma3", "gamma4-", "gamma4+", "gamma5-", "gamma5+"]
        .iter()
        .all(|n| table.monotonicity_violations.get(*n).copied().unwrap_or(0) == 0);
    lines.push(format!("monotonicity violations in ε: {:?}", table.monotonicity_violations));
    let pass = structural && table.trends.iter().all(|t| t.holds);
    Ok(Section { claim: "annealed".into(), pass, lines, data: to_value(&table)? })
}

fn corollary_section(config: &CampaignConfig) -> Result<Section> {
    let res = corollary_assembly(
        &config.spec,
        config.corollary_log_t,
        config.corollary_envs,
        config.corollary_trials,
        derive_seed(config.seed, 0xC02),
        &config.params,
    )?;
    let lines = vec![format!(
        "annealed failure {:.4} ≤ Γ part {:.4} + non-Γ mass {:.4}; {} of {} environments in Γ",
        res.annealed_failure, res.gamma_part, res.non_gamma_mass, res.members, res.n_env
    )];
    Ok(Section { claim: "corollary".into(), pass: res.check.verdict == Verdict::Pass, lines, data: to_value(&res)? })
}

fn ruin_section(config: &CampaignConfig) -> Result<Section> {
    let suite = ruin_suite(&config.spec, derive_seed(config.seed, 0x2u64), config.ruin_instances, config.ruin_trials)?;
    let lines = vec![
        format!("flat environment: max error {:.2e}", suite.flat_max_error),
        format!("closed form vs harmonic solve: max relative gap {:.2e}", suite.max_relative_gap),
        format!(
            "simulation within 3σ: {} of {}",
            suite.instances.iter().filter(|r| r.consistent).count(),
            suite.instances.len()
        ),
    ];
    Ok(Section { claim: "ruin".into(), pass: suite.pass, lines, data: to_value(&suite)? })
}

/// Run one claim, or `"all"`, and assemble the report.
pub fn run_campaign(config: &CampaignConfig, claim: &str) -> Result<Report> {
    config.validate()?;
    let claims: Vec<&str> = match claim {
        "all" => CLAIMS.to_vec(),
        c if CLAIMS.contains(&c) => vec![c],
        c => {
            return Err(Error::InvalidArgument(format!("unknown claim {c:?}; expected one of {CLAIMS:?} or all")));
        }
    };
    let needs_members = claims.iter().any(|c| matches!(*c, "gamma" | "events" | "localization") || c.starts_with("lemma"));
    let selection = if needs_members { Some(select_members(config)?) } else { None };
    let sel = || selection.as_ref().expect("selected above");
    let mut sections = Vec::new();
    for c in claims {
        let section = match c {
            "ruin" => ruin_section(config)?,
            "gamma" => gamma_section(sel(), config)?,
            "events" => events_section(sel(), config)?,
            "localization" => localization_section(sel(), config)?,
            "scaling" => scaling_section(config)?,
            "annealed" => annealed_section(config)?,
            "corollary" => corollary_section(config)?,
            lemma => lemma_section(sel(), config, lemma[5..].parse().expect("lemma1 to lemma4"))?,
        };
        sections.push(section);
    }
    let pass = sections.iter().all(|s| s.pass);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            tool: "sinai-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            claim: claim.into(),
            config: config.clone(),
            invocation: None,
        },
        generated_at: None,
        sections,
        pass,
    })
}
