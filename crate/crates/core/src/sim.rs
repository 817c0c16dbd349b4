//! Discrete-time simulation: online placement every step, optionally with a
//! periodic reconfiguration computed on a snapshot and merged back later.
//!
//! Step order at time `t`:
//! 1. a reconfiguration result due at `t` is merged and adopted if better;
//! 2. the trace rows for `t` are applied (departures, resizes, utilization);
//! 3. PMs pushed over capacity evict VMs, which are re-placed together with
//!    the step's new VMs;
//! 4. objectives are recorded;
//! 5. a new reconfiguration is launched when the trigger fires.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::{ObjectiveSet, ProblemConfig};
use crate::error::{Error, Result};
use crate::heuristics::{self, Heuristic};
use crate::memetic::{build_migration_plan, evolve, Evolution, MaParams, MigrationPlan};
use crate::model::{
    compute_usage, DatacenterState, Lifecycle, PhysicalMachine, Placement,
    VirtualMachine, VmId, VmLocation,
};
use crate::objectives::{
    compute_bounds, economic_penalties, evaluate, federation_cost, normalize, raw_objectives,
    ObjectiveVector,
};
use crate::trace::TraceEvent;

/// CPU utilization added to a VM during the step it is migrated.
pub const MIGRATION_CPU_BOOST: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Online placement only.
    Online(Heuristic),
    /// Whole-placement memetic re-optimization whenever the VM set changes.
    Memetic,
    /// Online placement plus periodic memetic reconfiguration.
    TwoPhase,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Online(h) => h.label(),
            Algorithm::Memetic => "ma",
            Algorithm::TwoPhase => "two-phase",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ma" => Ok(Algorithm::Memetic),
            "two-phase" => Ok(Algorithm::TwoPhase),
            other => other.parse().map(Algorithm::Online),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Online heuristic used by the two-phase and memetic algorithms for
    /// arrivals.
    pub heuristic: Heuristic,
    pub ma: MaParams,
    /// Number of simulated steps; defaults to one past the last trace step.
    pub duration: Option<u32>,
    /// Check every placement constraint after each step.
    pub validate_each_step: bool,
    /// Run reconfiguration on a background thread.
    pub concurrent_vmpr: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            heuristic: Heuristic::BestFitDecreasing,
            ma: MaParams::default(),
            duration: None,
            validate_each_step: true,
            concurrent_vmpr: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub objectives: ObjectiveVector,
    /// Scalarized cost F(x, t).
    pub cost: f64,
    pub alive: usize,
    pub migrations: usize,
    pub migrated_gb: f64,
}

/// Wall-clock spent per phase. Never written to deterministic outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTiming {
    pub online: Duration,
    pub reconfiguration: Duration,
}

#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub algorithm: Algorithm,
    pub objective_set: ObjectiveSet,
    pub steps: Vec<StepRecord>,
    pub final_placement: Placement,
    pub migrations: usize,
    pub migrated_gb: f64,
    pub reconfigurations_adopted: usize,
    pub reconfigurations_discarded: usize,
    pub timing: PhaseTiming,
}

impl SimulationRun {
    /// Mean of F(x, t) over the run's steps.
    pub fn average_cost(&self) -> Result<f64> {
        crate::eval::scenario_average(self)
    }

    /// Per-objective means of the raw and normalized values.
    pub fn average_objectives(&self) -> ObjectiveVector {
        let n = self.steps.len().max(1) as f64;
        let mut v = ObjectiveVector {
            raw: [0.0; 4],
            normalized: [0.0; 4],
        };
        for s in &self.steps {
            for i in 0..4 {
                v.raw[i] += s.objectives.raw[i];
                v.normalized[i] += s.objectives.normalized[i];
            }
        }
        for i in 0..4 {
            v.raw[i] /= n;
            v.normalized[i] /= n;
        }
        v
    }

    /// Per-step CSV: `t`, raw f1..f4, normalized f1..f4, `F`.
    pub fn write_steps_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::config(format!("csv write failed: {e}"));
        w.write_record([
            "t", "f1", "f2", "f3", "f4", "f1_norm", "f2_norm", "f3_norm", "f4_norm", "F",
        ])
        .map_err(err)?;
        for s in &self.steps {
            let mut rec = vec![s.t.to_string()];
            rec.extend(s.objectives.raw.iter().map(f64::to_string));
            rec.extend(s.objectives.normalized.iter().map(f64::to_string));
            rec.push(s.cost.to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::config(format!("csv write failed: {e}")))
    }
}

/// True when a reconfiguration should be launched at `t`.
pub fn vmpr_trigger(t: u32, period: Option<u32>) -> bool {
    matches!(period, Some(p) if p > 0 && t > 0 && t % p == 0)
}

enum JobState {
    Ready(Result<Evolution>, Duration),
    Running(JoinHandle<(Result<Evolution>, Duration)>),
}

/// A reconfiguration computed on the snapshot taken at `t0`.
pub struct VmprJob {
    pub t0: u32,
    pub due: u32,
    state: JobState,
}

impl VmprJob {
    fn launch(snapshot: DatacenterState, params: MaParams, config: ProblemConfig, t0: u32, concurrent: bool) -> Self {
        let due = t0 + config.vmpr_duration;
        let work = move || {
            let start = Instant::now();
            let out = evolve(&snapshot, &params, &config);
            (out, start.elapsed())
        };
        let state = if concurrent {
            JobState::Running(std::thread::spawn(work))
        } else {
            let (out, took) = work();
            JobState::Ready(out, took)
        };
        VmprJob { t0, due, state }
    }

    fn finish(self) -> (Result<Evolution>, Duration) {
        match self.state {
            JobState::Ready(out, took) => (out, took),
            JobState::Running(handle) => handle.join().expect("reconfiguration thread panicked"),
        }
    }
}

/// Joins a reconfiguration result with the current state.
///
/// VMs that still exist take their reconfigured location; VMs created since
/// the snapshot keep theirs. Where the combination overloads a PM, the
/// reconfigured VMs on it fall back to their current location, largest CPU
/// first, until every PM fits.
pub fn merge_placement(result: &Placement, current: &DatacenterState) -> Placement {
    let vms = current.vms();
    let protection = current.protection();
    let n = current.pms().len();
    let now: Vec<Option<VmLocation>> = current.locations().to_vec();
    let mut merged = now.clone();
    let mut moved: BTreeSet<usize> = BTreeSet::new();
    for (j, vm) in vms.iter().enumerate() {
        if let Some(loc) = result.get(vm.id) {
            if now[j].is_some() && Some(loc) != now[j] && loc.pm().is_none_or(|i| i < n) {
                merged[j] = Some(loc);
                moved.insert(j);
            }
        }
    }
    loop {
        let usage = compute_usage(n, vms, &merged, &protection);
        let over = (0..n).find(|&i| {
            !usage[i].committed.fits_within(&current.pms()[i].capacity)
                && moved.iter().any(|&j| merged[j] == Some(VmLocation::OnPm(i)))
        });
        let Some(i) = over else { break };
        let revert = moved
            .iter()
            .copied()
            .filter(|&j| merged[j] == Some(VmLocation::OnPm(i)))
            .max_by(|&a, &b| {
                vms[a]
                    .demand
                    .cpu()
                    .total_cmp(&vms[b].demand.cpu())
                    .then(b.cmp(&a))
            })
            .expect("a moved vm on the pm");
        merged[revert] = now[revert];
        moved.remove(&revert);
    }
    vms.iter()
        .zip(merged)
        .filter_map(|(vm, loc)| loc.map(|l| (vm.id, l)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct Adoption {
    pub adopted: bool,
    pub plan: MigrationPlan,
    pub current_cost: f64,
    pub candidate_cost: f64,
}

/// Replaces the current placement with `candidate` iff the candidate's cost,
/// charged for its migrations, is strictly lower. Migrating VMs carry extra
/// CPU utilization until the boosts are cleared.
pub fn adopt_if_better(candidate: &Placement, state: &mut DatacenterState, config: &ProblemConfig) -> Adoption {
    let current_cost = config.scalarizer.apply(&evaluate(&state.view(), config, 0.0).normalized);
    let plan = build_migration_plan(&state.placement(), candidate, state);
    let mut trial = state.clone();
    let ok = trial.apply_placement(candidate).is_ok() && trial.validate_placement(config).is_empty();
    if !ok {
        return Adoption {
            adopted: false,
            plan,
            current_cost,
            candidate_cost: f64::INFINITY,
        };
    }
    for m in &plan.moves {
        trial
            .set_migration_boost(m.vm, MIGRATION_CPU_BOOST)
            .expect("migrating vm is alive");
    }
    let candidate_cost = config
        .scalarizer
        .apply(&evaluate(&trial.view(), config, plan.max_transfer()).normalized);
    let adopted = candidate_cost < current_cost;
    if adopted {
        *state = trial;
    }
    Adoption {
        adopted,
        plan,
        current_cost,
        candidate_cost,
    }
}

fn vm_from_row(row: &TraceEvent) -> VirtualMachine {
    VirtualMachine {
        id: VmId(0),
        service_id: row.b,
        datacenter_id: row.c,
        demand: row.demand(),
        utilization: row.utilization(),
        revenue: row.revenue(),
        rates: Some(row.rates()),
        sla: row.sla.unwrap_or(1),
        t_init: row.t_init,
        t_end: row.t_end,
        migration_boost: 0.0,
    }
}

fn mix_seed(seed: u64, t: u32) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// The simulation loop.
pub struct Simulator {
    pub state: DatacenterState,
    config: ProblemConfig,
    algorithm: Algorithm,
    options: SimOptions,
    ids: BTreeMap<u64, VmId>,
    job: Option<VmprJob>,
}

impl Simulator {
    pub fn new(pms: Vec<PhysicalMachine>, config: ProblemConfig, algorithm: Algorithm, options: SimOptions) -> Result<Self> {
        config.validate()?;
        options.ma.validate()?;
        if pms.is_empty() {
            return Err(Error::Empty("pm list"));
        }
        Ok(Simulator {
            state: DatacenterState::new(pms, config.protection()),
            config,
            algorithm,
            options,
            ids: BTreeMap::new(),
            job: None,
        })
    }

    fn online(&self) -> Heuristic {
        match self.algorithm {
            Algorithm::Online(h) => h,
            _ => self.options.heuristic,
        }
    }

    fn reconfigures(&self) -> bool {
        self.algorithm == Algorithm::TwoPhase
    }

    /// Applies one step's rows. Returns new VMs, VMs whose demand grew, and
    /// whether the VM set changed.
    fn apply_rows(&mut self, t: u32, rows: &[TraceEvent]) -> Result<(Vec<VmId>, BTreeSet<VmId>, bool)> {
        let present: BTreeSet<u64> = rows.iter().map(|r| r.v).collect();
        let gone: Vec<u64> = self
            .ids
            .keys()
            .copied()
            .filter(|v| !present.contains(v))
            .collect();
        let mut changed = !gone.is_empty();
        for v in gone {
            let id = self.ids.remove(&v).expect("known vm");
            self.state.apply_event(t, Lifecycle::Destroy(id))?;
        }
        let protection = self.state.protection();
        let mut created = Vec::new();
        let mut grown = BTreeSet::new();
        for row in rows {
            let fresh = vm_from_row(row);
            if fresh.sla == 0 || fresh.sla > self.config.s {
                return Err(Error::config(format!(
                    "trace vm {} has sla {} outside 1..={}",
                    row.v, fresh.sla, self.config.s
                )));
            }
            match self.ids.get(&row.v) {
                None => {
                    let delta = self.state.apply_event(t, Lifecycle::Create(fresh))?;
                    let id = delta.created.expect("create yields an id");
                    self.ids.insert(row.v, id);
                    created.push(id);
                    changed = true;
                }
                Some(&id) => {
                    let old = self.state.vm(id).expect("mapped vm is alive").clone();
                    if old.demand != fresh.demand || old.rates != fresh.rates {
                        self.state.apply_event(
                            t,
                            Lifecycle::Resize {
                                vm: id,
                                demand: fresh.demand,
                                rates: fresh.rates,
                                revenue: fresh.revenue,
                            },
                        )?;
                    }
                    if old.utilization != fresh.utilization {
                        self.state.apply_event(
                            t,
                            Lifecycle::Utilization {
                                vm: id,
                                utilization: fresh.utilization,
                            },
                        )?;
                    }
                    let before = old.effective_demand(&protection);
                    let after = fresh.effective_demand(&protection);
                    if (0..3).any(|k| after[k] > before[k]) {
                        grown.insert(id);
                    }
                }
            }
        }
        Ok((created, grown, changed))
    }

    /// Evicts VMs from over-capacity PMs: grown VMs first, then the largest
    /// effective CPU, until each PM fits again.
    fn evict(&mut self, grown: &BTreeSet<VmId>) -> Result<Vec<VmId>> {
        let protection = self.state.protection();
        let mut evicted = Vec::new();
        for i in 0..self.state.pms().len() {
            if self.state.pm_within_capacity(i) {
                continue;
            }
            let mut order: Vec<(bool, f64, VmId)> = self
                .state
                .hosted(i)
                .map(|id| {
                    let vm = self.state.vm(id).expect("hosted vm");
                    (grown.contains(&id), vm.effective_demand(&protection).cpu(), id)
                })
                .collect();
            order.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
            for (_, _, id) in order {
                if self.state.pm_within_capacity(i) {
                    break;
                }
                self.state.unplace(id)?;
                evicted.push(id);
            }
        }
        evicted.sort();
        Ok(evicted)
    }

    fn record(&self, t: u32, penalties: f64, plan: Option<&MigrationPlan>) -> StepRecord {
        let view = self.state.view();
        let f4 = plan.map_or(0.0, MigrationPlan::max_transfer);
        let mut raw = raw_objectives(&view, &self.config, f4);
        if self.config.objective_set == ObjectiveSet::PartII {
            raw[1] = federation_cost(&view, &self.config) + penalties;
        }
        let bounds = compute_bounds(&view, &self.config);
        let objectives = ObjectiveVector {
            raw,
            normalized: std::array::from_fn(|i| normalize(raw[i], bounds.0[i])),
        };
        StepRecord {
            t,
            cost: self.config.scalarizer.apply(&objectives.normalized),
            objectives,
            alive: self.state.len(),
            migrations: plan.map_or(0, MigrationPlan::count),
            migrated_gb: plan.map_or(0.0, MigrationPlan::total_gb),
        }
    }

    /// Runs the whole trace.
    pub fn run(mut self, trace: &[TraceEvent]) -> Result<SimulationRun> {
        if trace.windows(2).any(|w| w[0].t > w[1].t) {
            return Err(Error::Schema {
                line: 0,
                message: "trace rows must be sorted by t".into(),
            });
        }
        let last = trace.last().map_or(0, |r| r.t + 1);
        let t_max = self.options.duration.unwrap_or(last).max(1);
        let mut by_t: BTreeMap<u32, Vec<TraceEvent>> = BTreeMap::new();
        for row in trace.iter().filter(|r| r.t < t_max) {
            by_t.entry(row.t).or_default().push(row.clone());
        }

        let mut run = SimulationRun {
            algorithm: self.algorithm,
            objective_set: self.config.objective_set,
            steps: Vec::with_capacity(t_max as usize),
            final_placement: Placement::default(),
            migrations: 0,
            migrated_gb: 0.0,
            reconfigurations_adopted: 0,
            reconfigurations_discarded: 0,
            timing: PhaseTiming::default(),
        };
        let empty = Vec::new();
        for t in 0..t_max {
            let started = Instant::now();
            self.state.set_clock(t);
            self.state.clear_migration_boosts();
            let mut plan: Option<MigrationPlan> = None;

            if self.job.as_ref().is_some_and(|j| j.due == t) {
                let job = self.job.take().expect("due job");
                let (result, took) = job.finish();
                run.timing.reconfiguration += took;
                let evolution = result?;
                let merged = merge_placement(&evolution.placement, &self.state);
                let adoption = adopt_if_better(&merged, &mut self.state, &self.config);
                if adoption.adopted {
                    run.reconfigurations_adopted += 1;
                    plan = Some(adoption.plan);
                } else {
                    run.reconfigurations_discarded += 1;
                }
            }

            let rows = by_t.get(&t).unwrap_or(&empty);
            let (created, grown, mut changed) = self.apply_rows(t, rows)?;
            let penalties = if self.config.objective_set == ObjectiveSet::PartII {
                economic_penalties(&self.state.view())
            } else {
                0.0
            };
            let forced = self.evict(&grown)?;
            changed |= !forced.is_empty();
            let online = self.online();
            for id in &forced {
                heuristics::place_batch(online, &[*id], &mut self.state, &self.config)?;
            }
            heuristics::place_batch(online, &created, &mut self.state, &self.config)?;

            if self.algorithm == Algorithm::Memetic && changed && !self.state.is_empty() {
                let ma_start = Instant::now();
                let params = self.options.ma.clone().with_seed(mix_seed(self.options.ma.rng_seed, t));
                let evolution = evolve(&self.state, &params, &self.config)?;
                let moves = build_migration_plan(&self.state.placement(), &evolution.placement, &self.state);
                self.state.apply_placement(&evolution.placement)?;
                run.timing.reconfiguration += ma_start.elapsed();
                plan = Some(moves);
            }

            let record = self.record(t, penalties, plan.as_ref());
            run.migrations += record.migrations;
            run.migrated_gb += record.migrated_gb;
            run.steps.push(record);

            if self.options.validate_each_step {
                let violations = self.state.validate_placement(&self.config);
                if let Some(v) = violations.first() {
                    return Err(Error::Invariant {
                        t,
                        detail: v.to_string(),
                    });
                }
            }

            if self.reconfigures()
                && self.job.is_none()
                && vmpr_trigger(t, self.config.vmpr_period)
                && t + self.config.vmpr_duration < t_max
                && !self.state.is_empty()
            {
                let mut snapshot = self.state.clone();
                snapshot.clear_migration_boosts();
                let params = self.options.ma.clone().with_seed(mix_seed(self.options.ma.rng_seed, t));
                self.job = Some(VmprJob::launch(
                    snapshot,
                    params,
                    self.config.clone(),
                    t,
                    self.options.concurrent_vmpr,
                ));
            }
            run.timing.online += started.elapsed();
        }
        run.final_placement = self.state.placement();
        Ok(run)
    }
}

/// Convenience wrapper around [`Simulator`].
pub fn run_simulation(
    trace: &[TraceEvent],
    pms: Vec<PhysicalMachine>,
    config: &ProblemConfig,
    algorithm: Algorithm,
    options: &SimOptions,
) -> Result<SimulationRun> {
    Simulator::new(pms, config.clone(), algorithm, options.clone())?.run(trace)
}

/// PM counts per machine type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadProfile {
    /// Ten homogeneous PMs: 8 ECU, 10 GB, 780 Mbps, 960 W.
    Homogeneous,
    /// Many PMs relative to the reference elastic workload.
    Low,
    /// Few PMs relative to the reference elastic workload.
    High,
}

impl LoadProfile {
    pub fn label(self) -> &'static str {
        match self {
            LoadProfile::Homogeneous => "homogeneous",
            LoadProfile::Low => "low",
            LoadProfile::High => "high",
        }
    }

    pub fn pms(self) -> Vec<PhysicalMachine> {
        // (count, cpu, ram, net, pmax)
        let types: &[(usize, f64, f64, f64, f64)] = match self {
            LoadProfile::Homogeneous => &[(10, 8.0, 10.0, 780.0, 960.0)],
            LoadProfile::Low => &[
                (50, 32.0, 128.0, 1000.0, 800.0),
                (50, 64.0, 256.0, 1000.0, 1000.0),
                (50, 256.0, 512.0, 1000.0, 3000.0),
                (30, 512.0, 1024.0, 20000.0, 5000.0),
            ],
            LoadProfile::High => &[
                (20, 32.0, 128.0, 1000.0, 800.0),
                (20, 64.0, 256.0, 1000.0, 1000.0),
                (15, 256.0, 512.0, 1000.0, 3000.0),
                (8, 512.0, 1024.0, 20000.0, 5000.0),
            ],
        };
        let mut out = Vec::new();
        for &(count, cpu, ram, net, pmax) in types {
            for _ in 0..count {
                let id = out.len() as u32;
                out.push(PhysicalMachine::new(id, cpu, ram, net, pmax).expect("positive preset"));
            }
        }
        out
    }
}

impl FromStr for LoadProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(LoadProfile::Homogeneous),
            "low" => Ok(LoadProfile::Low),
            "high" => Ok(LoadProfile::High),
            _ => Err(Error::config(format!("unknown load profile {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Resources;
    use crate::trace::{generate, GeneratorParams};

    fn row(t: u32, v: u64, cpu: f64, u: f64) -> TraceEvent {
        TraceEvent {
            t,
            b: v as u32,
            c: 0,
            v,
            cpu,
            ram: 2.0,
            net: 10.0,
            u_cpu: u,
            u_ram: u,
            u_net: u,
            r_cpu: 0.065,
            r_ram: 0.016,
            r_net: 0.179,
            t_init: 0,
            t_end: 0,
            sla: None,
        }
    }

    fn pms(n: usize, cpu: f64) -> Vec<PhysicalMachine> {
        (0..n)
            .map(|i| PhysicalMachine::new(i as u32, cpu, 16.0, 1000.0, 500.0).unwrap())
            .collect()
    }

    fn small_ma() -> SimOptions {
        SimOptions {
            ma: MaParams {
                population_size: 16,
                generations: 15,
                ..MaParams::default()
            },
            ..SimOptions::default()
        }
    }

    #[test]
    fn trigger_cases() {
        assert!(vmpr_trigger(20, Some(10)));
        assert!(!vmpr_trigger(0, Some(10)));
        assert!(!vmpr_trigger(15, Some(10)));
        assert!(!vmpr_trigger(20, None));
    }

    #[test]
    fn parses_algorithms() {
        for label in ["ff", "bf", "wf", "ffd", "bfd", "ma", "two-phase"] {
            assert_eq!(label.parse::<Algorithm>().unwrap().label(), label);
        }
        assert!("nsga".parse::<Algorithm>().is_err());
    }

    #[test]
    fn empty_trace_yields_zero_objectives() {
        let cfg = ProblemConfig::part_two();
        let opts = SimOptions {
            duration: Some(5),
            ..SimOptions::default()
        };
        let run = run_simulation(&[], pms(2, 8.0), &cfg, Algorithm::TwoPhase, &opts).unwrap();
        assert_eq!(run.steps.len(), 5);
        assert!(run.steps.iter().all(|s| s.objectives.raw == [0.0; 4] && s.cost == 0.0));
    }

    #[test]
    fn vm_lives_between_creation_and_destruction() {
        let trace: Vec<TraceEvent> = (1..5).map(|t| row(t, 0, 4.0, 100.0)).collect();
        let opts = SimOptions {
            duration: Some(7),
            ..SimOptions::default()
        };
        let cfg = ProblemConfig::part_two();
        let run = run_simulation(&trace, pms(2, 8.0), &cfg, Algorithm::Online(Heuristic::FirstFit), &opts).unwrap();
        let alive: Vec<usize> = run.steps.iter().map(|s| s.alive).collect();
        assert_eq!(alive, vec![0, 1, 1, 1, 1, 0, 0]);
        assert!(run.steps[1].objectives.raw[0] > 0.0);
        assert_eq!(run.steps[5].objectives.raw[0], 0.0);
    }

    #[test]
    fn scale_up_forces_replacement_without_migration_count() {
        let mut trace = vec![row(0, 0, 4.0, 100.0), row(0, 1, 4.0, 100.0)];
        trace.push(row(1, 0, 4.0, 100.0));
        trace.push(row(1, 1, 6.0, 100.0));
        let cfg = ProblemConfig::part_two();
        let sim = Simulator::new(pms(2, 8.0), cfg, Algorithm::Online(Heuristic::FirstFit), SimOptions::default()).unwrap();
        let run = sim.run(&trace).unwrap();
        assert_eq!(run.migrations, 0);
        assert_eq!(run.final_placement.get(VmId(1)), Some(VmLocation::OnPm(1)));
    }

    #[test]
    fn merge_without_changes_is_the_result() {
        let mut state = DatacenterState::new(pms(2, 8.0), Resources::splat(1.0));
        let a = state.add_vm(VirtualMachine::new(2.0, 1.0, 1.0, 1.0));
        let b = state.add_vm(VirtualMachine::new(2.0, 1.0, 1.0, 1.0));
        state.place(a, VmLocation::OnPm(0)).unwrap();
        state.place(b, VmLocation::OnPm(1)).unwrap();
        let result: Placement = [(a, VmLocation::OnPm(1)), (b, VmLocation::OnPm(1))].into_iter().collect();
        assert_eq!(merge_placement(&result, &state), result);
    }

    #[test]
    fn merge_drops_destroyed_vms() {
        let mut state = DatacenterState::new(pms(2, 8.0), Resources::splat(1.0));
        let a = state.add_vm(VirtualMachine::new(2.0, 1.0, 1.0, 1.0));
        state.place(a, VmLocation::OnPm(0)).unwrap();
        let result: Placement = [(a, VmLocation::OnPm(1)), (VmId(99), VmLocation::OnPm(1))].into_iter().collect();
        let merged = merge_placement(&result, &state);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.get(a), Some(VmLocation::OnPm(1)));
    }

    #[test]
    fn merge_conflict_keeps_arrival() {
        let mut state = DatacenterState::new(pms(2, 8.0), Resources::splat(1.0));
        let old = state.add_vm(VirtualMachine::new(5.0, 1.0, 1.0, 1.0));
        state.place(old, VmLocation::OnPm(1)).unwrap();
        // snapshot result wants `old` on pm0, but an arrival took pm0 meanwhile
        let result: Placement = [(old, VmLocation::OnPm(0))].into_iter().collect();
        let arrival = state.add_vm(VirtualMachine::new(5.0, 1.0, 1.0, 1.0));
        state.place(arrival, VmLocation::OnPm(0)).unwrap();
        let merged = merge_placement(&result, &state);
        assert_eq!(merged.get(arrival), Some(VmLocation::OnPm(0)));
        assert_eq!(merged.get(old), Some(VmLocation::OnPm(1)));
    }

    #[test]
    fn identical_candidate_is_not_adopted() {
        let cfg = ProblemConfig::part_two();
        let mut state = DatacenterState::new(pms(2, 8.0), cfg.protection());
        let a = state.add_vm(VirtualMachine::new(2.0, 1.0, 1.0, 1.0));
        state.place(a, VmLocation::OnPm(0)).unwrap();
        let out = adopt_if_better(&state.placement(), &mut state, &cfg);
        assert!(!out.adopted);
    }

    #[test]
    fn consolidation_is_adopted_with_boost() {
        let cfg = ProblemConfig::part_two();
        let mut state = DatacenterState::new(pms(2, 8.0), cfg.protection());
        let a = state.add_vm(VirtualMachine::new(2.0, 12.0, 1.0, 1.0).with_utilization(0.5, 1.0, 1.0));
        let b = state.add_vm(VirtualMachine::new(2.0, 1.0, 1.0, 1.0).with_utilization(0.5, 1.0, 1.0));
        state.place(a, VmLocation::OnPm(0)).unwrap();
        state.place(b, VmLocation::OnPm(1)).unwrap();
        let candidate: Placement = [(a, VmLocation::OnPm(0)), (b, VmLocation::OnPm(0))].into_iter().collect();
        let out = adopt_if_better(&candidate, &mut state, &cfg);
        assert!(out.adopted && out.candidate_cost < out.current_cost);
        assert_eq!(out.plan.count(), 1);
        assert_eq!(state.vm(b).unwrap().live_utilization().cpu(), 0.6);
        state.clear_migration_boosts();
        assert_eq!(state.vm(b).unwrap().live_utilization().cpu(), 0.5);
    }

    #[test]
    fn expensive_migration_is_discarded() {
        // consolidating saves one idle PM but moves a lot of RAM relative to the total
        let cfg = ProblemConfig::part_two();
        let mut state = DatacenterState::new(
            (0..2).map(|i| PhysicalMachine::new(i, 8.0, 64.0, 1000.0, 100.0).unwrap()).collect(),
            cfg.protection(),
        );
        let a = state.add_vm(VirtualMachine::new(1.0, 1.0, 1.0, 1.0));
        let b = state.add_vm(VirtualMachine::new(1.0, 40.0, 1.0, 1.0));
        state.place(a, VmLocation::OnPm(0)).unwrap();
        state.place(b, VmLocation::OnPm(1)).unwrap();
        let candidate: Placement = [(a, VmLocation::OnPm(0)), (b, VmLocation::OnPm(0))].into_iter().collect();
        let mut view_state = state.clone();
        view_state.apply_placement(&candidate).unwrap();
        let raw_power_better = crate::objectives::power_consumption(&view_state.view(), &cfg)
            < crate::objectives::power_consumption(&state.view(), &cfg);
        assert!(raw_power_better);
        let out = adopt_if_better(&candidate, &mut state, &cfg);
        assert!(!out.adopted);
    }

    fn scenario_trace(seed: u64) -> Vec<TraceEvent> {
        generate(&GeneratorParams {
            duration: 40,
            num_services: 20,
            max_vms_per_service: 4,
            horizontal_elasticity: crate::trace::Pdf::Uniform { a: 0, b: 4 },
            vertical_elasticity: crate::trace::Pdf::Uniform { a: 0, b: 5 },
            rng_seed: seed,
            ..GeneratorParams::default()
        })
        .unwrap()
    }

    #[test]
    fn concurrent_and_inline_reconfiguration_agree() {
        let trace = scenario_trace(3);
        let cfg = ProblemConfig::part_two();
        let inline = run_simulation(&trace, LoadProfile::High.pms(), &cfg, Algorithm::TwoPhase, &small_ma()).unwrap();
        let concurrent_opts = SimOptions {
            concurrent_vmpr: true,
            ..small_ma()
        };
        let threaded = run_simulation(&trace, LoadProfile::High.pms(), &cfg, Algorithm::TwoPhase, &concurrent_opts).unwrap();
        assert_eq!(inline.steps, threaded.steps);
        assert_eq!(inline.final_placement, threaded.final_placement);
    }

    #[test]
    fn no_period_equals_online_run() {
        let trace = scenario_trace(4);
        let mut cfg = ProblemConfig::part_two();
        cfg.vmpr_period = None;
        let a = run_simulation(&trace, LoadProfile::High.pms(), &cfg, Algorithm::TwoPhase, &small_ma()).unwrap();
        let b = run_simulation(
            &trace,
            LoadProfile::High.pms(),
            &cfg,
            Algorithm::Online(Heuristic::BestFitDecreasing),
            &small_ma(),
        )
        .unwrap();
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn migration_totals_add_up() {
        let trace = scenario_trace(5);
        let cfg = ProblemConfig::part_two();
        let run = run_simulation(&trace, LoadProfile::High.pms(), &cfg, Algorithm::TwoPhase, &small_ma()).unwrap();
        let gb: f64 = run.steps.iter().map(|s| s.migrated_gb).sum();
        let count: usize = run.steps.iter().map(|s| s.migrations).sum();
        assert_eq!(gb, run.migrated_gb);
        assert_eq!(count, run.migrations);
    }

    #[test]
    fn boost_lasts_one_step() {
        // after an adoption step, no VM carries a boost into the next step
        let trace = scenario_trace(6);
        let cfg = ProblemConfig::part_two();
        let mut sim = Simulator::new(LoadProfile::High.pms(), cfg, Algorithm::TwoPhase, small_ma()).unwrap();
        sim.options.duration = Some(40);
        let run = sim.run(&trace).unwrap();
        let adopted: Vec<u32> = run.steps.iter().filter(|s| s.migrations > 0).map(|s| s.t).collect();
        for t in adopted {
            assert_eq!((t - 4) % 10, 0, "adoption only at due steps");
        }
    }

    #[test]
    fn oversized_sla_is_a_config_error() {
        let mut r = row(0, 0, 1.0, 100.0);
        r.sla = Some(9);
        let cfg = ProblemConfig::part_one();
        let out = run_simulation(&[r], pms(1, 8.0), &cfg, Algorithm::Online(Heuristic::FirstFit), &SimOptions::default());
        assert!(matches!(out, Err(Error::Config(_))));
    }
}
