//! Problem-level configuration shared by every solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Resources;
use crate::objectives::Scalarizer;

/// Weighted-sum weights obtained empirically for the first objective set
/// (power, federation cost, QoS violations, wasted resources).
pub const PART_ONE_WEIGHTS: [f64; 4] = [1.3903, 2.1379, 2.7393, 1.4586];

/// Equal weights used by the weighted-sum method on the two-phase objective set.
pub const PART_TWO_WEIGHTS: [f64; 4] = [0.25, 0.25, 0.25, 0.25];

/// Which four objectives are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSet {
    /// power, federation cost, QoS violations, wasted resources
    PartI,
    /// power, federation cost + penalties, wasted resources, reconfiguration
    PartII,
}

impl ObjectiveSet {
    pub fn labels(self) -> [&'static str; 4] {
        match self {
            ObjectiveSet::PartI => ["power_w", "federation_usd", "qos", "wasted"],
            ObjectiveSet::PartII => ["power_w", "economic_usd", "wasted", "reconfig_gb"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveSet::PartI => "part_i",
            ObjectiveSet::PartII => "part_ii",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Highest SLA level.
    pub s: u32,
    /// QoS priority constant.
    pub c_hat: f64,
    /// Fraction of a VM's revenue paid when it is leased from the federation.
    pub federation_factor: f64,
    /// When false, overflow VMs below the highest SLA are rejected instead.
    pub federation_enabled: bool,
    /// pmin / pmax.
    pub pmin_factor: f64,
    /// Overbooking protection factor per resource (cpu, ram, net).
    pub protection: [f64; 3],
    pub objective_set: ObjectiveSet,
    pub scalarizer: Scalarizer,
    /// Steps between reconfiguration triggers; `None` never triggers.
    pub vmpr_period: Option<u32>,
    /// Simulated steps between a reconfiguration snapshot and its application.
    pub vmpr_duration: u32,
    pub rng_seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self::part_one()
    }
}

impl ProblemConfig {
    /// Many-objective online setting: full reservation, weighted sum with the
    /// empirically derived weights.
    pub fn part_one() -> Self {
        Self {
            s: 4,
            c_hat: 1000.0,
            federation_factor: 0.7,
            federation_enabled: true,
            pmin_factor: 0.6,
            protection: [1.0; 3],
            objective_set: ObjectiveSet::PartI,
            scalarizer: Scalarizer::ws(PART_ONE_WEIGHTS),
            vmpr_period: None,
            vmpr_duration: 4,
            rng_seed: 0,
        }
    }

    /// Two-phase setting: overbooking with protection 0.75 and equal weights.
    pub fn part_two() -> Self {
        Self {
            protection: [0.75; 3],
            objective_set: ObjectiveSet::PartII,
            scalarizer: Scalarizer::ws(PART_TWO_WEIGHTS),
            vmpr_period: Some(10),
            ..Self::part_one()
        }
    }

    pub fn protection(&self) -> Resources {
        Resources(self.protection)
    }

    pub fn with_scalarizer(mut self, scalarizer: Scalarizer) -> Self {
        self.scalarizer = scalarizer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::config("s must be at least 1"));
        }
        if !(self.c_hat > 0.0 && self.c_hat.is_finite()) {
            return Err(Error::config("c_hat must be positive"));
        }
        if !(0.0..=1.0).contains(&self.federation_factor) {
            return Err(Error::config("federation_factor must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.pmin_factor) {
            return Err(Error::config("pmin_factor must lie in [0, 1]"));
        }
        if self.protection.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::config("protection factors must lie in [0, 1]"));
        }
        if self.vmpr_period == Some(0) {
            return Err(Error::config("vmpr_period must be positive"));
        }
        if self.vmpr_duration == 0 {
            return Err(Error::config("vmpr_duration must be positive"));
        }
        self.scalarizer.validate(4)
    }
}
