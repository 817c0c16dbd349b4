//! Datacenter state: physical machines, virtual machines, their placement and
//! the capacity constraints that tie them together.
//!
//! Every solver reads and mutates the datacenter through [`DatacenterState`].
//! PMs are addressed by their position in the (pm_id-sorted) PM list; VMs by a
//! monotonically increasing [`VmId`] that is never reused.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::ops::{Add, AddAssign, Index, IndexMut, Sub};

use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{Error, Result};

/// Number of modeled resources (cpu, ram, net).
pub const R: usize = 3;

/// Relative slack accepted by capacity comparisons, absorbing summation-order
/// rounding in float loads.
const CAPACITY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Cpu,
    Ram,
    Net,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; R] = [ResourceKind::Cpu, ResourceKind::Ram, ResourceKind::Net];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceKind::Cpu => "cpu",
            ResourceKind::Ram => "ram",
            ResourceKind::Net => "net",
        })
    }
}

/// A (cpu [ECU], ram [GB], net [Mbps]) triple.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Resources(pub [f64; R]);

impl Resources {
    pub const ZERO: Resources = Resources([0.0; R]);

    pub const fn new(cpu: f64, ram: f64, net: f64) -> Self {
        Resources([cpu, ram, net])
    }

    pub const fn splat(v: f64) -> Self {
        Resources([v; R])
    }

    pub fn cpu(&self) -> f64 {
        self.0[0]
    }

    pub fn ram(&self) -> f64 {
        self.0[1]
    }

    pub fn net(&self) -> f64 {
        self.0[2]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Resources(self.0.map(f))
    }

    pub fn zip_with(self, other: Resources, f: impl Fn(f64, f64) -> f64) -> Self {
        Resources(std::array::from_fn(|k| f(self.0[k], other.0[k])))
    }

    /// Component-wise ratio `self / capacity`.
    pub fn ratio_of(self, capacity: Resources) -> Self {
        self.zip_with(capacity, |a, c| a / c)
    }

    /// True when every component fits within `capacity`.
    pub fn fits_within(&self, capacity: &Resources) -> bool {
        self.first_excess(capacity).is_none()
    }

    /// First resource on which `self` exceeds `capacity`.
    pub fn first_excess(&self, capacity: &Resources) -> Option<ResourceKind> {
        ResourceKind::ALL
            .into_iter()
            .find(|k| self[*k] > capacity[*k] * (1.0 + CAPACITY_EPS))
    }
}

impl Add for Resources {
    type Output = Resources;
    fn add(self, rhs: Resources) -> Resources {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl AddAssign for Resources {
    fn add_assign(&mut self, rhs: Resources) {
        for k in 0..R {
            self.0[k] += rhs.0[k];
        }
    }
}

impl Sub for Resources {
    type Output = Resources;
    fn sub(self, rhs: Resources) -> Resources {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Index<ResourceKind> for Resources {
    type Output = f64;
    fn index(&self, k: ResourceKind) -> &f64 {
        &self.0[k.index()]
    }
}

impl IndexMut<ResourceKind> for Resources {
    fn index_mut(&mut self, k: ResourceKind) -> &mut f64 {
        &mut self.0[k.index()]
    }
}

impl Index<usize> for Resources {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalMachine {
    pub pm_id: u32,
    pub capacity: Resources,
    /// Maximum power draw [W].
    pub pmax: f64,
    pub datacenter_id: u32,
}

impl PhysicalMachine {
    pub fn new(pm_id: u32, cpu: f64, ram: f64, net: f64, pmax: f64) -> Result<Self> {
        let pm = PhysicalMachine {
            pm_id,
            capacity: Resources::new(cpu, ram, net),
            pmax,
            datacenter_id: 0,
        };
        pm.check()?;
        Ok(pm)
    }

    fn check(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.capacity.iter().all(positive) && positive(self.pmax) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "pm {} must have strictly positive capacities and pmax",
                self.pm_id
            )))
        }
    }
}

#[derive(Deserialize)]
struct CatalogRow {
    pm_id: u32,
    cpu: f64,
    ram: f64,
    net: f64,
    pmax: f64,
    datacenter_id: u32,
}

/// Reads a PM catalog CSV with header `pm_id,cpu,ram,net,pmax,datacenter_id`.
/// The result is sorted by `pm_id`.
pub fn read_pm_catalog(reader: impl Read) -> Result<Vec<PhysicalMachine>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut pms = Vec::new();
    for row in rdr.deserialize::<CatalogRow>() {
        let row = row.map_err(|e| Error::Schema {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let pm = PhysicalMachine {
            pm_id: row.pm_id,
            capacity: Resources::new(row.cpu, row.ram, row.net),
            pmax: row.pmax,
            datacenter_id: row.datacenter_id,
        };
        pm.check()?;
        pms.push(pm);
    }
    pms.sort_by_key(|pm| pm.pm_id);
    if let Some(w) = pms.windows(2).find(|w| w[0].pm_id == w[1].pm_id) {
        return Err(Error::config(format!("duplicate pm_id {}", w[0].pm_id)));
    }
    Ok(pms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VmId(pub u64);

impl fmt::Display for VmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualMachine {
    pub id: VmId,
    pub service_id: u32,
    pub datacenter_id: u32,
    /// Requested virtual resources at the current step.
    pub demand: Resources,
    /// Per-resource utilization ratio in [0, 1].
    pub utilization: Resources,
    /// Revenue [USD] at the current step.
    pub revenue: f64,
    /// Per-unit revenue rates; when present, `revenue` is derived from them.
    pub rates: Option<Resources>,
    pub sla: u32,
    pub t_init: u32,
    pub t_end: u32,
    /// Extra CPU utilization charged while the VM is being migrated.
    pub migration_boost: f64,
}

impl VirtualMachine {
    /// A fully utilized VM with no elasticity, SLA 1 and the given revenue.
    pub fn new(cpu: f64, ram: f64, net: f64, revenue: f64) -> Self {
        VirtualMachine {
            id: VmId(0),
            service_id: 0,
            datacenter_id: 0,
            demand: Resources::new(cpu, ram, net),
            utilization: Resources::splat(1.0),
            revenue,
            rates: None,
            sla: 1,
            t_init: 0,
            t_end: u32::MAX,
            migration_boost: 0.0,
        }
    }

    pub fn with_sla(mut self, sla: u32) -> Self {
        self.sla = sla;
        self
    }

    pub fn with_utilization(mut self, cpu: f64, ram: f64, net: f64) -> Self {
        self.utilization = Resources::new(cpu, ram, net);
        self
    }

    pub fn with_rates(mut self, rates: Resources) -> Self {
        self.set_rates(rates);
        self
    }

    pub fn set_rates(&mut self, rates: Resources) {
        self.revenue = rate_revenue(&self.demand, &rates);
        self.rates = Some(rates);
    }

    /// Demand committed against PM capacity under protection factors:
    /// used share plus the protected fraction of the idle share.
    pub fn effective_demand(&self, protection: &Resources) -> Resources {
        Resources(std::array::from_fn(|k| {
            let v = self.demand[k];
            let u = self.utilization[k];
            v * u + v * (1.0 - u) * protection[k]
        }))
    }

    /// Utilization including any migration surcharge on CPU.
    pub fn live_utilization(&self) -> Resources {
        let mut u = self.utilization;
        u.0[0] = (u.0[0] + self.migration_boost).min(1.0);
        u
    }

    /// Resources actually in use at this step.
    pub fn actual_demand(&self) -> Resources {
        self.demand.zip_with(self.live_utilization(), |v, u| v * u)
    }

    /// Revenue attributed to one resource.
    pub fn resource_revenue(&self, k: usize) -> f64 {
        match &self.rates {
            Some(rates) => self.demand[k] * rates[k],
            None => self.revenue / R as f64,
        }
    }

    fn check(&self, s: Option<u32>) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(format!("vm {}: {msg}", self.id)));
        if self.demand.iter().any(|v| !(v >= 0.0 && v.is_finite())) {
            return bad("demands must be nonnegative");
        }
        if self.utilization.iter().any(|u| !(0.0..=1.0).contains(&u)) {
            return bad("utilization must lie in [0, 1]");
        }
        if self.t_init > self.t_end {
            return bad("t_init must not exceed t_end");
        }
        if self.sla == 0 || s.is_some_and(|s| self.sla > s) {
            return bad("sla out of range");
        }
        Ok(())
    }
}

pub(crate) fn rate_revenue(demand: &Resources, rates: &Resources) -> f64 {
    demand.cpu() * rates.cpu() + demand.ram() * rates.ram() + demand.net() * rates.net()
}

/// Where a VM runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VmLocation {
    /// On the PM at this index of the datacenter's PM list.
    OnPm(usize),
    /// Leased from a federated provider.
    Federated,
    /// Not served. Only legal below the highest SLA level.
    Rejected,
}

impl VmLocation {
    /// X_j: the VM is being served somewhere.
    pub fn is_served(self) -> bool {
        !matches!(self, VmLocation::Rejected)
    }

    /// Y-hat_j: the VM runs at a federated provider.
    pub fn is_federated(self) -> bool {
        matches!(self, VmLocation::Federated)
    }

    /// X-hat_j: federation cost factor applied to the VM's revenue.
    pub fn federation_factor(self, factor: f64) -> f64 {
        if self.is_federated() {
            factor
        } else {
            0.0
        }
    }

    pub fn pm(self) -> Option<usize> {
        match self {
            VmLocation::OnPm(i) => Some(i),
            _ => None,
        }
    }
}

/// VM → location map for every alive VM.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Placement(pub BTreeMap<VmId, VmLocation>);

impl Placement {
    pub fn get(&self, id: VmId) -> Option<VmLocation> {
        self.0.get(&id).copied()
    }

    pub fn insert(&mut self, id: VmId, loc: VmLocation) {
        self.0.insert(id, loc);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VmId, VmLocation)> + '_ {
        self.0.iter().map(|(id, loc)| (*id, *loc))
    }

    /// Dense binary allocation matrix, one row per VM (id order), one column per PM.
    pub fn to_matrix(&self, n: usize) -> Vec<Vec<u8>> {
        self.0
            .values()
            .map(|loc| {
                let mut row = vec![0u8; n];
                if let Some(i) = loc.pm() {
                    row[i] = 1;
                }
                row
            })
            .collect()
    }
}

impl FromIterator<(VmId, VmLocation)> for Placement {
    fn from_iter<T: IntoIterator<Item = (VmId, VmLocation)>>(iter: T) -> Self {
        Placement(iter.into_iter().collect())
    }
}

/// Aggregated load of one PM.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PmUsage {
    /// Sum of hosted effective demands (admission load).
    pub committed: Resources,
    /// Sum of hosted actual demands.
    pub actual: Resources,
    pub hosted: usize,
}

impl PmUsage {
    pub fn add(&mut self, vm: &VirtualMachine, protection: &Resources) {
        self.committed += vm.effective_demand(protection);
        self.actual += vm.actual_demand();
        self.hosted += 1;
    }

    /// Y_i: the PM is powered on.
    pub fn powered_on(&self) -> bool {
        self.hosted > 0
    }
}

/// Aggregates PM loads for a location assignment. VMs are visited in slice
/// order, so every caller summing in VM id order gets bit-identical loads.
pub fn compute_usage(
    n: usize,
    vms: &[VirtualMachine],
    locations: &[Option<VmLocation>],
    protection: &Resources,
) -> Vec<PmUsage> {
    let mut usage = vec![PmUsage::default(); n];
    for (vm, loc) in vms.iter().zip(locations) {
        if let Some(VmLocation::OnPm(i)) = loc {
            usage[*i].add(vm, protection);
        }
    }
    usage
}

/// Admission predicate: the VM's effective demand fits on top of `committed`.
/// With full protection this is plain reservation of the requested resources.
pub fn capacity_check(
    committed: &Resources,
    capacity: &Resources,
    vm: &VirtualMachine,
    protection: &Resources,
) -> bool {
    (*committed + vm.effective_demand(protection)).fits_within(capacity)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The VM has no location entry.
    Unplaced(VmId),
    /// A highest-SLA VM is not served.
    Sla(VmId),
    /// Hosted effective demand exceeds the PM's capacity.
    Capacity { pm: usize, resource: ResourceKind },
    /// The location references a PM that does not exist.
    UnknownPm { vm: VmId, pm: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unplaced(vm) => write!(f, "{vm} has no location"),
            Violation::Sla(vm) => write!(f, "{vm} has the highest SLA but is rejected"),
            Violation::Capacity { pm, resource } => {
                write!(f, "pm #{pm} over {resource} capacity")
            }
            Violation::UnknownPm { vm, pm } => write!(f, "{vm} placed on missing pm #{pm}"),
        }
    }
}

/// Request applied to the datacenter at the current clock.
#[derive(Clone, Debug, PartialEq)]
pub enum Lifecycle {
    /// Service creation or scale-out: the VM enters unplaced.
    Create(VirtualMachine),
    /// Service destruction or scale-in.
    Destroy(VmId),
    /// Vertical elasticity: new requested resources and revenue rates.
    Resize {
        vm: VmId,
        demand: Resources,
        rates: Option<Resources>,
        revenue: f64,
    },
    /// New utilization snapshot.
    Utilization { vm: VmId, utilization: Resources },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateDelta {
    pub created: Option<VmId>,
    pub released: Option<(VmId, Option<VmLocation>)>,
    /// The VM's PM no longer satisfies the capacity constraint.
    pub needs_replacement: bool,
}

/// Mutable datacenter state. Single writer; clones are cheap snapshots.
#[derive(Clone, Debug)]
pub struct DatacenterState {
    pms: Vec<PhysicalMachine>,
    protection: Resources,
    /// Alive VMs sorted by id.
    vms: Vec<VirtualMachine>,
    /// Parallel to `vms`; `None` while a VM awaits placement.
    locations: Vec<Option<VmLocation>>,
    hosted: Vec<BTreeSet<VmId>>,
    usage: Vec<PmUsage>,
    clock: u32,
    next_id: u64,
}

impl DatacenterState {
    pub fn new(mut pms: Vec<PhysicalMachine>, protection: Resources) -> Self {
        pms.sort_by_key(|pm| pm.pm_id);
        let n = pms.len();
        DatacenterState {
            pms,
            protection,
            vms: Vec::new(),
            locations: Vec::new(),
            hosted: vec![BTreeSet::new(); n],
            usage: vec![PmUsage::default(); n],
            clock: 0,
            next_id: 0,
        }
    }

    pub fn pms(&self) -> &[PhysicalMachine] {
        &self.pms
    }

    pub fn protection(&self) -> Resources {
        self.protection
    }

    pub fn vms(&self) -> &[VirtualMachine] {
        &self.vms
    }

    pub fn locations(&self) -> &[Option<VmLocation>] {
        &self.locations
    }

    pub fn usage(&self) -> &[PmUsage] {
        &self.usage
    }

    pub fn clock(&self) -> u32 {
        self.clock
    }

    pub fn set_clock(&mut self, t: u32) {
        self.clock = t;
    }

    pub fn len(&self) -> usize {
        self.vms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vms.is_empty()
    }

    fn pos(&self, id: VmId) -> Result<usize> {
        self.vms
            .binary_search_by_key(&id, |vm| vm.id)
            .map_err(|_| Error::UnknownVm(id))
    }

    pub fn vm(&self, id: VmId) -> Option<&VirtualMachine> {
        self.pos(id).ok().map(|p| &self.vms[p])
    }

    pub fn location(&self, id: VmId) -> Option<VmLocation> {
        self.pos(id).ok().and_then(|p| self.locations[p])
    }

    pub fn hosted(&self, pm: usize) -> impl Iterator<Item = VmId> + '_ {
        self.hosted[pm].iter().copied()
    }

    /// Current placement of every placed VM.
    pub fn placement(&self) -> Placement {
        self.vms
            .iter()
            .zip(&self.locations)
            .filter_map(|(vm, loc)| loc.map(|l| (vm.id, l)))
            .collect()
    }

    /// Per-resource utilization ratio of PM `i` (actual use over capacity).
    pub fn pm_utilization(&self, i: usize) -> Resources {
        self.usage[i].actual.ratio_of(self.pms[i].capacity)
    }

    pub fn powered_on(&self, i: usize) -> bool {
        self.usage[i].powered_on()
    }

    /// Whether `vm` passes admission on PM `i` given its current load.
    pub fn fits(&self, vm: &VirtualMachine, i: usize) -> bool {
        capacity_check(&self.usage[i].committed, &self.pms[i].capacity, vm, &self.protection)
    }

    /// Adds a VM, assigning the next unused id. The VM enters unplaced.
    pub fn add_vm(&mut self, mut vm: VirtualMachine) -> VmId {
        let id = VmId(self.next_id);
        self.next_id += 1;
        vm.id = id;
        self.vms.push(vm);
        self.locations.push(None);
        id
    }

    /// Removes a VM and releases its resources.
    pub fn remove_vm(&mut self, id: VmId) -> Result<(VirtualMachine, Option<VmLocation>)> {
        let p = self.pos(id)?;
        let loc = self.locations[p];
        self.detach(p);
        let vm = self.vms.remove(p);
        self.locations.remove(p);
        if let Some(VmLocation::OnPm(i)) = loc {
            self.refresh(i);
        }
        Ok((vm, loc))
    }

    /// Places an unplaced VM. No capacity check; see [`Self::fits`].
    pub fn place(&mut self, id: VmId, loc: VmLocation) -> Result<()> {
        let p = self.pos(id)?;
        if self.locations[p].is_some() {
            return Err(Error::AlreadyPlaced(id));
        }
        self.attach(p, loc)
    }

    /// Moves a VM to a new location (placing it if it was unplaced).
    pub fn relocate(&mut self, id: VmId, loc: VmLocation) -> Result<()> {
        let p = self.pos(id)?;
        if self.locations[p] == Some(loc) {
            return Ok(());
        }
        self.unplace(id)?;
        self.attach(p, loc)
    }

    /// Detaches a VM from its location, leaving it awaiting placement.
    pub fn unplace(&mut self, id: VmId) -> Result<Option<VmLocation>> {
        let p = self.pos(id)?;
        let loc = self.detach(p);
        if let Some(VmLocation::OnPm(i)) = loc {
            self.refresh(i);
        }
        Ok(loc)
    }

    /// Replaces the whole placement. Every VM in `placement` must be alive.
    pub fn apply_placement(&mut self, placement: &Placement) -> Result<()> {
        for (id, loc) in placement.iter() {
            self.relocate(id, loc)?;
        }
        Ok(())
    }

    fn attach(&mut self, p: usize, loc: VmLocation) -> Result<()> {
        if let VmLocation::OnPm(i) = loc {
            if i >= self.pms.len() {
                return Err(Error::UnknownPm(i));
            }
            self.hosted[i].insert(self.vms[p].id);
            self.locations[p] = Some(loc);
            self.refresh(i);
        } else {
            self.locations[p] = Some(loc);
        }
        Ok(())
    }

    fn detach(&mut self, p: usize) -> Option<VmLocation> {
        let loc = self.locations[p].take();
        if let Some(VmLocation::OnPm(i)) = loc {
            self.hosted[i].remove(&self.vms[p].id);
        }
        loc
    }

    /// Recomputes PM `i`'s load from scratch in VM id order.
    fn refresh(&mut self, i: usize) {
        let mut u = PmUsage::default();
        for id in &self.hosted[i] {
            let p = self
                .vms
                .binary_search_by_key(id, |vm| vm.id)
                .expect("hosted vm is alive");
            u.add(&self.vms[p], &self.protection);
        }
        self.usage[i] = u;
    }

    fn update_vm(&mut self, id: VmId, f: impl FnOnce(&mut VirtualMachine)) -> Result<Option<usize>> {
        let p = self.pos(id)?;
        f(&mut self.vms[p]);
        let pm = self.locations[p].and_then(VmLocation::pm);
        if let Some(i) = pm {
            self.refresh(i);
        }
        Ok(pm)
    }

    pub fn set_migration_boost(&mut self, id: VmId, boost: f64) -> Result<()> {
        self.update_vm(id, |vm| vm.migration_boost = boost).map(|_| ())
    }

    /// Removes every migration surcharge.
    pub fn clear_migration_boosts(&mut self) {
        let boosted: Vec<VmId> = self
            .vms
            .iter()
            .filter(|vm| vm.migration_boost != 0.0)
            .map(|vm| vm.id)
            .collect();
        for id in boosted {
            let _ = self.set_migration_boost(id, 0.0);
        }
    }

    /// Applies one request at the current clock.
    pub fn apply_event(&mut self, t: u32, event: Lifecycle) -> Result<StateDelta> {
        if t != self.clock {
            return Err(Error::ClockMismatch {
                event: t,
                clock: self.clock,
            });
        }
        let mut delta = StateDelta::default();
        match event {
            Lifecycle::Create(vm) => {
                vm.check(None)?;
                delta.created = Some(self.add_vm(vm));
            }
            Lifecycle::Destroy(id) => {
                let (_, loc) = self.remove_vm(id)?;
                delta.released = Some((id, loc));
            }
            Lifecycle::Resize {
                vm,
                demand,
                rates,
                revenue,
            } => {
                let pm = self.update_vm(vm, |v| {
                    v.demand = demand;
                    match rates {
                        Some(r) => v.set_rates(r),
                        None => {
                            v.rates = None;
                            v.revenue = revenue;
                        }
                    }
                })?;
                delta.needs_replacement = pm.is_some_and(|i| !self.pm_within_capacity(i));
            }
            Lifecycle::Utilization { vm, utilization } => {
                if utilization.iter().any(|u| !(0.0..=1.0).contains(&u)) {
                    return Err(Error::config(format!("{vm}: utilization outside [0, 1]")));
                }
                let pm = self.update_vm(vm, |v| v.utilization = utilization)?;
                delta.needs_replacement = pm.is_some_and(|i| !self.pm_within_capacity(i));
            }
        }
        Ok(delta)
    }

    pub fn pm_within_capacity(&self, i: usize) -> bool {
        self.usage[i].committed.fits_within(&self.pms[i].capacity)
    }

    /// Checks unique placement, SLA provisioning and PM capacities. Loads are
    /// recomputed from scratch rather than read from the cache.
    pub fn validate_placement(&self, config: &ProblemConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.pms.len();
        for (vm, loc) in self.vms.iter().zip(&self.locations) {
            match loc {
                None => out.push(Violation::Unplaced(vm.id)),
                Some(VmLocation::Rejected) if vm.sla >= config.s => out.push(Violation::Sla(vm.id)),
                Some(VmLocation::OnPm(i)) if *i >= n => {
                    out.push(Violation::UnknownPm { vm: vm.id, pm: *i })
                }
                _ => {}
            }
        }
        let located: Vec<Option<VmLocation>> = self
            .locations
            .iter()
            .map(|l| l.filter(|l| l.pm().is_none_or(|i| i < n)))
            .collect();
        let usage = compute_usage(n, &self.vms, &located, &self.protection);
        for (i, (u, pm)) in usage.iter().zip(&self.pms).enumerate() {
            if let Some(resource) = u.committed.first_excess(&pm.capacity) {
                out.push(Violation::Capacity { pm: i, resource });
            }
        }
        out
    }
}
