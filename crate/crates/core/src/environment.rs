//! i.i.d. elliptic environments in Sinai's regime.
//!
//! An environment assigns each site `x` a pair of jump rates `(ω⁻ₓ, ω⁺ₓ)`.
//! Only families whose log-ratio `log(ω⁺/ω⁻)` is symmetric about zero are
//! accepted, so the zero-mean condition holds by construction rather than by
//! a statistical test. Sites are generated lazily from a counter-based stream
//! keyed by `(seed, x)`; growing the window never perturbs existing sites.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat;
use crate::rng::site_stream;

/// Rate pair at one site, in events per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub minus: f64,
    pub plus: f64,
}

impl Rates {
    pub const fn new(minus: f64, plus: f64) -> Self {
        Self { minus, plus }
    }

    /// Rates with `log(ω⁻/ω⁺) = d` and `ω⁻ω⁺ = 1`.
    pub fn from_log_ratio(d: f64) -> Self {
        Self::new((d / 2.0).exp(), (-d / 2.0).exp())
    }

    pub fn total(&self) -> f64 {
        self.minus + self.plus
    }

    /// Potential increment `V(x) − V(x−1)` contributed by this site.
    pub fn log_ratio(&self) -> f64 {
        (self.minus / self.plus).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub minus: f64,
    pub plus: f64,
    pub prob: f64,
}

/// Law of one site's rate pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `(e^{-c/2}, e^{c/2})` or `(e^{c/2}, e^{-c/2})` with probability ½ each.
    TwoPointSymmetric { c: f64 },
    /// `log ω⁻` and `log ω⁺` independent and uniform on `[-c/2, c/2]`.
    LogUniformSymmetric { c: f64 },
    /// Finite table; must be invariant under swapping `ω⁻ ↔ ω⁺`.
    FiniteTable { entries: Vec<TableEntry> },
}

/// Validated site law with derived ellipticity constant and log-ratio variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub kappa: f64,
    pub sigma2: f64,
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let family = Family::deserialize(d)?;
        make_distribution(family).map_err(serde::de::Error::custom)
    }
}

impl DistributionSpec {
    pub fn two_point(c: f64) -> Result<Self> {
        make_distribution(Family::TwoPointSymmetric { c })
    }

    pub fn log_uniform(c: f64) -> Result<Self> {
        make_distribution(Family::LogUniformSymmetric { c })
    }

    /// Two-point family with `c = 1`.
    pub fn default_two_point() -> Self {
        Self::two_point(1.0).expect("c = 1 is valid")
    }

    pub fn is_two_point(&self) -> bool {
        matches!(self.family, Family::TwoPointSymmetric { .. })
    }

    /// Human-readable reason why `E log(ω⁺/ω⁻) = 0` holds exactly.
    pub fn zero_mean_certificate(&self) -> &'static str {
        match self.family {
            Family::TwoPointSymmetric { .. } => "two-point law with log-ratio ±c at probability 1/2 each",
            Family::LogUniformSymmetric { .. } => "log ω⁻ and log ω⁺ are i.i.d., so the log-ratio is symmetric",
            Family::FiniteTable { .. } => "table is invariant under the swap ω⁻ ↔ ω⁺",
        }
    }

    /// Draw one site's rates.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Rates {
        match &self.family {
            Family::TwoPointSymmetric { c } => {
                let (lo, hi) = ((-c / 2.0).exp(), (c / 2.0).exp());
                if rng.random::<bool>() {
                    Rates::new(lo, hi)
                } else {
                    Rates::new(hi, lo)
                }
            }
            Family::LogUniformSymmetric { c } => {
                let half = c / 2.0;
                let minus = rng.random_range(-half..=half).exp();
                let plus = rng.random_range(-half..=half).exp();
                Rates::new(minus, plus)
            }
            Family::FiniteTable { entries } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for e in entries {
                    acc += e.prob;
                    if u < acc {
                        return Rates::new(e.minus, e.plus);
                    }
                }
                let last = entries.last().expect("validated non-empty");
                Rates::new(last.minus, last.plus)
            }
        }
    }
}

/// Validate a family and derive `κ` and `σ²`.
pub fn make_distribution(family: Family) -> Result<DistributionSpec> {
    let (kappa, sigma2) = match &family {
        Family::TwoPointSymmetric { c } | Family::LogUniformSymmetric { c } => {
            if !c.is_finite() || *c <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "log-ratio magnitude must be positive and finite, got c = {c}"
                )));
            }
            let kappa = (c / 2.0).exp();
            let sigma2 = match family {
                Family::TwoPointSymmetric { .. } => c * c,
                _ => c * c / 6.0,
            };
            (kappa, sigma2)
        }
        Family::FiniteTable { entries } => {
            if entries.is_empty() {
                return Err(Error::InvalidDistribution("empty table".into()));
            }
            let mut total = 0.0;
            for e in entries {
                if !(e.minus > 0.0 && e.plus > 0.0 && e.minus.is_finite() && e.plus.is_finite()) {
                    return Err(Error::InvalidDistribution(format!("rates must be positive: {e:?}")));
                }
                if !(e.prob > 0.0 && e.prob.is_finite()) {
                    return Err(Error::InvalidDistribution(format!("probability must be positive: {e:?}")));
                }
                total += e.prob;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
            }
            // Swap invariance: the mass on (a, b) equals the mass on (b, a).
            for e in entries {
                let mass = |m: f64, p: f64| {
                    entries
                        .iter()
                        .filter(|o| o.minus == m && o.plus == p)
                        .map(|o| o.prob)
                        .sum::<f64>()
                };
                if (mass(e.minus, e.plus) - mass(e.plus, e.minus)).abs() > 1e-12 {
                    return Err(Error::InvalidDistribution(
                        "table is not symmetric under ω⁻ ↔ ω⁺; mean log-ratio would be nonzero".into(),
                    ));
                }
            }
            let kappa = entries
                .iter()
                .flat_map(|e| [e.minus, e.plus])
                .map(|r| r.max(1.0 / r))
                .fold(1.0, f64::max);
            let sigma2 = entries.iter().map(|e| e.prob * (e.plus / e.minus).ln().powi(2)).sum();
            (kappa, sigma2)
        }
    };
    if kappa <= 1.0 {
        return Err(Error::InvalidDistribution(format!("ellipticity constant must exceed 1, got {kappa}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidDistribution(format!("log-ratio variance must be positive, got {sigma2}")));
    }
    Ok(DistributionSpec { family, kappa, sigma2 })
}

/// Integer interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidArgument(format!("window [{lo}, {hi}] must contain 0")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]`.
    pub fn symmetric(r: i64) -> Self {
        Self { lo: -r.abs(), hi: r.abs() }
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn covers(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn union(&self, other: &Window) -> Window {
        Window { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

/// A realization of the environment on a finite window.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    spec: DistributionSpec,
    seed: u64,
    window: Window,
    rates: Vec<Rates>,
}

impl Environment {
    /// Sample i.i.d. rates for every site of `window`.
    pub fn sample(spec: &DistributionSpec, seed: u64, window: Window) -> Self {
        let rates = (window.lo..=window.hi).map(|x| site_rates(spec, seed, x)).collect();
        Self { spec: spec.clone(), seed, window, rates }
    }

    /// Environment with explicitly given rates on `[lo, lo + rates.len() - 1]`.
    /// Rates are not checked here; see [`Environment::validate`].
    pub fn from_rates(spec: &DistributionSpec, seed: u64, lo: i64, rates: Vec<Rates>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidArgument("no rates given".into()));
        }
        let window = Window::new(lo, lo + rates.len() as i64 - 1)?;
        Ok(Self { spec: spec.clone(), seed, window, rates })
    }

    /// Environment whose potential has the given increments: site `lo + i`
    /// gets `log(ω⁻/ω⁺) = increments[i]`.
    pub fn from_log_ratios(spec: &DistributionSpec, lo: i64, increments: &[f64]) -> Result<Self> {
        let rates = increments.iter().map(|&d| Rates::from_log_ratio(d)).collect();
        Self::from_rates(spec, 0, lo, rates)
    }

    /// Grow to `new_window`; existing sites are kept verbatim.
    pub fn extend(&self, new_window: Window) -> Result<Self> {
        if !new_window.covers(&self.window) {
            return Err(Error::InvalidArgument(format!(
                "new window {new_window:?} does not contain {:?}",
                self.window
            )));
        }
        let rates = (new_window.lo..=new_window.hi)
            .map(|x| self.rates(x).unwrap_or_else(|| site_rates(&self.spec, self.seed, x)))
            .collect();
        Ok(Self { spec: self.spec.clone(), seed: self.seed, window: new_window, rates })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn rates(&self, x: i64) -> Option<Rates> {
        if self.window.contains(x) {
            Some(self.rates[(x - self.window.lo) as usize])
        } else {
            None
        }
    }

    /// Rates in window order.
    pub fn all_rates(&self) -> &[Rates] {
        &self.rates
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, Rates)> + '_ {
        (self.window.lo..).zip(self.rates.iter().copied())
    }

    pub fn validate(&self) -> ValidationReport {
        let kappa = self.spec.kappa;
        let (lo, hi) = (1.0 / kappa, kappa);
        let mut min_rate = f64::INFINITY;
        let mut max_rate = f64::NEG_INFINITY;
        let mut violations = Vec::new();
        for (x, r) in self.sites() {
            for (side, v) in [(Side::Minus, r.minus), (Side::Plus, r.plus)] {
                min_rate = min_rate.min(v);
                max_rate = max_rate.max(v);
                if !(lo..=hi).contains(&v) {
                    violations.push(Violation { site: x, side, rate: v });
                }
            }
        }
        ValidationReport {
            kappa,
            min_rate,
            max_rate,
            lower_margin: min_rate - lo,
            upper_margin: hi - max_rate,
            zero_mean_certificate: self.spec.zero_mean_certificate().to_string(),
            violations,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&EnvironmentFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: EnvironmentFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// Rates of site `x` as a pure function of `(spec, seed, x)`.
pub fn site_rates(spec: &DistributionSpec, seed: u64, x: i64) -> Rates {
    spec.draw(&mut site_stream(seed, x))
}

/// Convenience for [`Environment::sample`].
pub fn sample_environment(spec: &DistributionSpec, seed: u64, window: Window) -> Environment {
    Environment::sample(spec, seed, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub site: i64,
    pub side: Side,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kappa: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    /// `min rate − κ⁻¹`; negative means a violation.
    pub lower_margin: f64,
    /// `κ − max rate`; negative means a violation.
    pub upper_margin: f64,
    pub zero_mean_certificate: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct EnvironmentFile {
    spec: DistributionSpec,
    seed: u64,
    window: [i64; 2],
    rates: Vec<(i64, String, String)>,
}

impl From<&Environment> for EnvironmentFile {
    fn from(env: &Environment) -> Self {
        Self {
            spec: env.spec.clone(),
            seed: env.seed,
            window: [env.window.lo, env.window.hi],
            rates: env
                .sites()
                .map(|(x, r)| (x, hexfloat::format(r.minus), hexfloat::format(r.plus)))
                .collect(),
        }
    }
}

impl TryFrom<EnvironmentFile> for Environment {
    type Error = Error;

    fn try_from(f: EnvironmentFile) -> Result<Self> {
        let window = Window::new(f.window[0], f.window[1])?;
        if f.rates.len() != window.len() {
            return Err(Error::Parse(format!(
                "window {:?} has {} sites but {} rate rows were given",
                window,
                window.len(),
                f.rates.len()
            )));
        }
        let mut rates = Vec::with_capacity(f.rates.len());
        for (i, (x, m, p)) in f.rates.iter().enumerate() {
            if *x != window.lo + i as i64 {
                return Err(Error::Parse(format!("rate rows must be contiguous and sorted; row {i} has site {x}")));
            }
            rates.push(Rates::new(hexfloat::parse(m)?, hexfloat::parse(p)?));
        }
        Ok(Environment { spec: f.spec, seed: f.seed, window, rates })
    }
}
