//! Online placement heuristics: First-Fit, Best-Fit, Worst-Fit and their
//! decreasing batch variants.
//!
//! Each heuristic only decides where a new VM goes; it never migrates VMs
//! that are already placed.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::model::{
    capacity_check, DatacenterState, PhysicalMachine, PmUsage, Resources, VirtualMachine, VmId,
    VmLocation, R,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heuristic {
    #[serde(rename = "ff")]
    FirstFit,
    #[serde(rename = "bf")]
    BestFit,
    #[serde(rename = "wf")]
    WorstFit,
    #[serde(rename = "ffd")]
    FirstFitDecreasing,
    #[serde(rename = "bfd")]
    BestFitDecreasing,
}

impl Heuristic {
    pub const ALL: [Heuristic; 5] = [
        Heuristic::FirstFit,
        Heuristic::BestFit,
        Heuristic::WorstFit,
        Heuristic::FirstFitDecreasing,
        Heuristic::BestFitDecreasing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Heuristic::FirstFit => "ff",
            Heuristic::BestFit => "bf",
            Heuristic::WorstFit => "wf",
            Heuristic::FirstFitDecreasing => "ffd",
            Heuristic::BestFitDecreasing => "bfd",
        }
    }

    /// PM scan order used for each single placement.
    pub fn order(self) -> ScanOrder {
        match self {
            Heuristic::FirstFit | Heuristic::FirstFitDecreasing => ScanOrder::Index,
            Heuristic::BestFit | Heuristic::BestFitDecreasing => ScanOrder::MostUtilized,
            Heuristic::WorstFit => ScanOrder::LeastUtilized,
        }
    }

    /// Whether a batch is sorted by CPU demand before placement.
    pub fn sorts_batch(self) -> bool {
        matches!(
            self,
            Heuristic::FirstFitDecreasing | Heuristic::BestFitDecreasing
        )
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.label() == s)
            .ok_or_else(|| Error::config(format!("unknown heuristic {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanOrder {
    /// Lowest PM index first.
    Index,
    /// Ascending [`PmScore`].
    MostUtilized,
    /// Descending [`PmScore`].
    LeastUtilized,
}

/// Sum of the unused shares of a PM's resources; `R` when the PM is off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmScore {
    pub pm: usize,
    pub score: f64,
}

fn score(pm: &PhysicalMachine, usage: &PmUsage) -> f64 {
    if !usage.powered_on() {
        return R as f64;
    }
    usage
        .actual
        .ratio_of(pm.capacity)
        .iter()
        .map(|u| 1.0 - u.clamp(0.0, 1.0))
        .sum::<f64>()
        .clamp(0.0, R as f64)
}

pub fn pm_scores(state: &DatacenterState) -> Vec<PmScore> {
    state
        .pms()
        .iter()
        .zip(state.usage())
        .enumerate()
        .map(|(pm, (p, u))| PmScore {
            pm,
            score: score(p, u),
        })
        .collect()
}

/// First PM in `order` that admits `vm`, skipping `exclude`.
pub(crate) fn scan(
    order: ScanOrder,
    vm: &VirtualMachine,
    pms: &[PhysicalMachine],
    usage: &[PmUsage],
    protection: &Resources,
    exclude: Option<usize>,
) -> Option<usize> {
    let fits = |i: usize| {
        Some(i) != exclude && capacity_check(&usage[i].committed, &pms[i].capacity, vm, protection)
    };
    if order == ScanOrder::Index {
        return (0..pms.len()).find(|&i| fits(i));
    }
    let mut ranked: Vec<(f64, usize)> = pms
        .iter()
        .zip(usage)
        .enumerate()
        .map(|(i, (p, u))| (score(p, u), i))
        .collect();
    ranked.sort_by(|a, b| {
        let by_score = a.0.total_cmp(&b.0);
        let by_score = if order == ScanOrder::LeastUtilized {
            by_score.reverse()
        } else {
            by_score
        };
        by_score.then(a.1.cmp(&b.1))
    });
    ranked.into_iter().map(|(_, i)| i).find(|&i| fits(i))
}

/// Where a VM goes when no PM admits it.
pub fn overflow(vm: &VirtualMachine, config: &ProblemConfig) -> Result<VmLocation> {
    if config.federation_enabled {
        Ok(VmLocation::Federated)
    } else if vm.sla < config.s {
        Ok(VmLocation::Rejected)
    } else {
        Err(Error::Infeasible(vm.id))
    }
}

pub fn locate(
    order: ScanOrder,
    vm: &VirtualMachine,
    state: &DatacenterState,
    config: &ProblemConfig,
) -> Result<VmLocation> {
    let protection = state.protection();
    match scan(order, vm, state.pms(), state.usage(), &protection, None) {
        Some(i) => Ok(VmLocation::OnPm(i)),
        None => overflow(vm, config),
    }
}

pub fn first_fit(vm: &VirtualMachine, state: &DatacenterState, config: &ProblemConfig) -> Result<VmLocation> {
    locate(ScanOrder::Index, vm, state, config)
}

pub fn best_fit(vm: &VirtualMachine, state: &DatacenterState, config: &ProblemConfig) -> Result<VmLocation> {
    locate(ScanOrder::MostUtilized, vm, state, config)
}

pub fn worst_fit(vm: &VirtualMachine, state: &DatacenterState, config: &ProblemConfig) -> Result<VmLocation> {
    locate(ScanOrder::LeastUtilized, vm, state, config)
}

/// Sorts a batch by CPU demand, largest first, ties by lower id.
pub fn decreasing_order(batch: &mut [&VirtualMachine]) {
    batch.sort_by(|a, b| {
        b.demand
            .cpu()
            .partial_cmp(&a.demand.cpu())
            .unwrap_or(Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
}

/// Places a batch of unplaced VMs of `state`, one at a time, committing each
/// decision before the next. Returns the decisions in processing order.
pub fn place_batch(
    heuristic: Heuristic,
    batch: &[VmId],
    state: &mut DatacenterState,
    config: &ProblemConfig,
) -> Result<Vec<(VmId, VmLocation)>> {
    let mut vms = batch
        .iter()
        .map(|id| state.vm(*id).cloned().ok_or(Error::UnknownVm(*id)))
        .collect::<Result<Vec<_>>>()?;
    if heuristic.sorts_batch() {
        let mut refs: Vec<&VirtualMachine> = vms.iter().collect();
        decreasing_order(&mut refs);
        vms = refs.into_iter().cloned().collect();
    }
    let mut out = Vec::with_capacity(vms.len());
    for vm in &vms {
        let loc = locate(heuristic.order(), vm, state, config)?;
        state.place(vm.id, loc)?;
        out.push((vm.id, loc));
    }
    Ok(out)
}

pub fn first_fit_decreasing(
    batch: &[VmId],
    state: &mut DatacenterState,
    config: &ProblemConfig,
) -> Result<Vec<(VmId, VmLocation)>> {
    place_batch(Heuristic::FirstFitDecreasing, batch, state, config)
}

pub fn best_fit_decreasing(
    batch: &[VmId],
    state: &mut DatacenterState,
    config: &ProblemConfig,
) -> Result<Vec<(VmId, VmLocation)>> {
    place_batch(Heuristic::BestFitDecreasing, batch, state, config)
}
