//! Quenched and annealed verification campaigns.
//!
//! An environment is first analysed at a time scale ([`prepare`]), which grows
//! its window until the landmarks around the origin resolve. The analysis is
//! then classified into the Γ-sets and, for members, the localization
//! probability and the four terms of its lower bound are simulated and
//! compared with exact values.

mod annealed;
mod bounds;
mod campaign;
mod events;
mod gamma;
mod scaling;
mod setting;

pub use annealed::{annealed_frequencies, corollary_assembly, AnnealedRow, AnnealedTable, CorollaryResult, TrendCheck};
pub use bounds::{
    escape_lemma, fit_constant, lemma_check, localization, occupation_lemma, origin_lemmas, quenched_localization,
    BoundCheck, Claim, Localization, OccupationCheck, Verdict, SUSPICIOUS_CONSTANT,
};
pub use campaign::{
    run_campaign, ruin_suite, select_members, CampaignConfig, EnvironmentSeries, MemberSelection, Provenance, Report,
    RuinInstance, RuinSuite, Section, SCHEMA_VERSION,
};
pub use events::{event_decomposition, origin_paths, side_neighborhoods, tally_events, EventTally, OriginPath, TrialEvents};
pub use gamma::{
    classify, gamma_report, gamma_values, neighborhood_widths, GammaEntry, GammaReport, GammaValues, GAMMA_SET_NAMES,
};
pub use scaling::{scaling_check, scaling_distribution_check, well_breadth_sample, ScalingDistribution, ScalingVerdict};
pub use setting::{prepare, prepare_coupled, LandmarkSites, Quenched, MAX_HALF_WIDTH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether landmarks are computed on `V` or on a Brownian path coupled to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Surrogate,
    Coupled,
}

/// Parameters shared by all quenched checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub delta: f64,
    /// Exponent `M` of the containment radius `log^M t`.
    pub m: f64,
    pub kappa_hat: f64,
    pub mode: Mode,
}

impl Default for Params {
    fn default() -> Self {
        Self { eps: 0.1, delta: 1.0, m: 3.0, kappa_hat: 1.0, mode: Mode::Surrogate }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < self.delta) {
            return Err(Error::InvalidArgument(format!("need 0 < ε < δ, got ε = {}, δ = {}", self.eps, self.delta)));
        }
        if !(self.m > 2.0 && self.m.is_finite()) {
            return Err(Error::InvalidArgument(format!("need M > 2, got {}", self.m)));
        }
        if !(self.kappa_hat > 0.0 && self.kappa_hat.is_finite()) {
            return Err(Error::InvalidArgument(format!("need κ̂ > 0, got {}", self.kappa_hat)));
        }
        Ok(())
    }
}
