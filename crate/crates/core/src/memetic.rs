//! Memetic algorithm over whole placements, plus migration plans between
//! placements.
//!
//! A chromosome holds one gene per alive VM (id order): `0` sends the VM to
//! the overflow location (the federation, or rejection when federation is
//! disabled) and `i + 1` puts it on the PM at index `i`.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::heuristics::{self, Heuristic, ScanOrder};
use crate::model::{
    capacity_check, compute_usage, DatacenterState, Placement, PmUsage, VirtualMachine, VmId,
    VmLocation,
};
use crate::objectives::{
    compute_bounds, normalize, raw_objectives, ObjectiveBounds, ObjectiveVector, StateView,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene resampling probability; `None` means 1/m.
    pub mutation_rate: Option<f64>,
    pub tournament_size: usize,
    /// Accepted hill-climbing moves per local-search call.
    pub local_search_moves: usize,
    pub rng_seed: u64,
}

impl Default for MaParams {
    fn default() -> Self {
        MaParams {
            population_size: 100,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: None,
            tournament_size: 2,
            local_search_moves: 10,
            rng_seed: 0,
        }
    }
}

impl MaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("population_size must be at least 2"));
        }
        if self.tournament_size == 0 {
            return Err(Error::config("tournament_size must be positive"));
        }
        let rates = [Some(self.crossover_rate), self.mutation_rate];
        if rates.iter().flatten().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::config("rates must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

pub type Chromosome = Vec<u32>;

/// One VM moved between two PMs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Migration {
    pub vm: VmId,
    pub from: usize,
    pub to: usize,
    pub ram: f64,
}

/// VM moves between two placements and the RAM they transfer per ordered PM pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MigrationPlan {
    pub moves: Vec<Migration>,
    /// Total RAM [GB] per (source, destination) PM pair.
    pub transfers: BTreeMap<(usize, usize), f64>,
}

impl MigrationPlan {
    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn count(&self) -> usize {
        self.moves.len()
    }

    pub fn total_gb(&self) -> f64 {
        self.moves.iter().map(|m| m.ram).sum()
    }

    /// Largest entry of the transfer matrix; 0 for an empty plan.
    pub fn max_transfer(&self) -> f64 {
        self.transfers.values().copied().fold(0.0, f64::max)
    }

    /// Dense n×n transfer matrix.
    pub fn mt_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let mut mt = vec![vec![0.0; n]; n];
        for (&(i, k), gb) in &self.transfers {
            mt[i][k] = *gb;
        }
        mt
    }

    /// Builds a plan from two location vectors parallel to `vms`.
    pub fn between(
        vms: &[VirtualMachine],
        from: &[Option<VmLocation>],
        to: &[Option<VmLocation>],
    ) -> Self {
        let mut plan = MigrationPlan::default();
        for ((vm, a), b) in vms.iter().zip(from).zip(to) {
            if let (Some(VmLocation::OnPm(i)), Some(VmLocation::OnPm(k))) = (a, b) {
                if i != k {
                    plan.moves.push(Migration {
                        vm: vm.id,
                        from: *i,
                        to: *k,
                        ram: vm.demand.ram(),
                    });
                    *plan.transfers.entry((*i, *k)).or_insert(0.0) += vm.demand.ram();
                }
            }
        }
        plan
    }
}

/// Moves needed to go from `from` to `to`. VMs entering or leaving the
/// federation are not PM-to-PM migrations and are left out.
pub fn build_migration_plan(from: &Placement, to: &Placement, state: &DatacenterState) -> MigrationPlan {
    let a: Vec<Option<VmLocation>> = state.vms().iter().map(|vm| from.get(vm.id)).collect();
    let b: Vec<Option<VmLocation>> = state.vms().iter().map(|vm| to.get(vm.id)).collect();
    MigrationPlan::between(state.vms(), &a, &b)
}

/// Fitness context for one snapshot.
pub struct Problem<'a> {
    state: &'a DatacenterState,
    config: &'a ProblemConfig,
    incumbent: Vec<Option<VmLocation>>,
    bounds: ObjectiveBounds,
    overflow: VmLocation,
    n: usize,
}

#[derive(Clone, Debug)]
pub struct Scored {
    pub genes: Chromosome,
    pub objectives: ObjectiveVector,
    pub cost: f64,
}

impl<'a> Problem<'a> {
    /// The snapshot's current locations serve as the incumbent for the
    /// reconfiguration objective.
    pub fn new(state: &'a DatacenterState, config: &'a ProblemConfig) -> Self {
        Problem {
            state,
            config,
            incumbent: state.locations().to_vec(),
            bounds: compute_bounds(&state.view(), config),
            overflow: if config.federation_enabled {
                VmLocation::Federated
            } else {
                VmLocation::Rejected
            },
            n: state.pms().len(),
        }
    }

    pub fn m(&self) -> usize {
        self.state.len()
    }

    pub fn decode_gene(&self, g: u32) -> VmLocation {
        if g == 0 {
            self.overflow
        } else {
            VmLocation::OnPm(g as usize - 1)
        }
    }

    fn encode(&self, loc: VmLocation) -> u32 {
        match loc {
            VmLocation::OnPm(i) => i as u32 + 1,
            _ => 0,
        }
    }

    pub fn decode(&self, genes: &[u32]) -> Vec<Option<VmLocation>> {
        genes.iter().map(|g| Some(self.decode_gene(*g))).collect()
    }

    pub fn to_placement(&self, genes: &[u32]) -> Placement {
        self.state
            .vms()
            .iter()
            .zip(genes)
            .map(|(vm, g)| (vm.id, self.decode_gene(*g)))
            .collect()
    }

    /// Chromosome of the snapshot's placement, if every VM is placed and
    /// representable.
    pub fn incumbent(&self) -> Option<Chromosome> {
        self.incumbent
            .iter()
            .map(|loc| match loc {
                Some(l) if l.pm().is_some() || *l == self.overflow => Some(self.encode(*l)),
                _ => None,
            })
            .collect()
    }

    pub fn encode_placement(&self, placement: &Placement) -> Option<Chromosome> {
        self.state
            .vms()
            .iter()
            .map(|vm| {
                placement
                    .get(vm.id)
                    .filter(|l| l.pm().is_some() || *l == self.overflow)
                    .map(|l| self.encode(l))
            })
            .collect()
    }

    fn usage(&self, locations: &[Option<VmLocation>]) -> Vec<PmUsage> {
        compute_usage(self.n, self.state.vms(), locations, &self.state.protection())
    }

    /// Fitness of a chromosome at the snapshot instant.
    pub fn evaluate(&self, genes: &[u32]) -> (ObjectiveVector, f64) {
        let locations = self.decode(genes);
        let usage = self.usage(&locations);
        let view = StateView {
            pms: self.state.pms(),
            vms: self.state.vms(),
            locations: &locations,
            usage: &usage,
        };
        let f4 = MigrationPlan::between(self.state.vms(), &self.incumbent, &locations).max_transfer();
        let raw = raw_objectives(&view, self.config, f4);
        let v = ObjectiveVector {
            raw,
            normalized: std::array::from_fn(|i| normalize(raw[i], self.bounds.0[i])),
        };
        (v, self.config.scalarizer.apply(&v.normalized))
    }

    pub fn score(&self, genes: Chromosome) -> Scored {
        let (objectives, cost) = self.evaluate(&genes);
        Scored {
            genes,
            objectives,
            cost,
        }
    }

    /// True when the decoded chromosome satisfies every placement constraint.
    pub fn is_feasible(&self, genes: &[u32]) -> bool {
        let mut state = self.state.clone();
        state.apply_placement(&self.to_placement(genes)).is_ok()
            && state.validate_placement(self.config).is_empty()
    }

    /// Resolves capacity violations: the largest-CPU VMs of each overloaded PM
    /// are evicted to a best-fit PM, else to the overflow location.
    pub fn repair(&self, mut genes: Chromosome) -> Result<Chromosome> {
        let vms = self.state.vms();
        let pms = self.state.pms();
        let protection = self.state.protection();
        let mut usage = self.usage(&self.decode(&genes));
        let mut hosted: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        let mut pending: Vec<(usize, Option<usize>)> = Vec::new();
        for (j, g) in genes.iter().enumerate() {
            match self.decode_gene(*g) {
                VmLocation::OnPm(i) => hosted[i].push(j),
                VmLocation::Rejected if vms[j].sla >= self.config.s => pending.push((j, None)),
                _ => {}
            }
        }
        for (i, list) in hosted.iter_mut().enumerate() {
            if usage[i].committed.fits_within(&pms[i].capacity) {
                continue;
            }
            list.sort_by(|a, b| vms[*b].demand.cpu().total_cmp(&vms[*a].demand.cpu()).then(a.cmp(b)));
            for &j in list.iter() {
                if usage[i].committed.fits_within(&pms[i].capacity) {
                    break;
                }
                let u = &mut usage[i];
                u.committed = u.committed - vms[j].effective_demand(&protection);
                u.actual = u.actual - vms[j].actual_demand();
                u.hosted -= 1;
                pending.push((j, Some(i)));
            }
        }
        pending.sort_by(|a, b| {
            vms[b.0]
                .demand
                .cpu()
                .total_cmp(&vms[a.0].demand.cpu())
                .then(a.0.cmp(&b.0))
        });
        for (j, origin) in pending {
            let vm = &vms[j];
            match heuristics::scan(ScanOrder::MostUtilized, vm, pms, &usage, &protection, origin) {
                Some(i) => {
                    usage[i].add(vm, &protection);
                    genes[j] = i as u32 + 1;
                }
                None => {
                    heuristics::overflow(vm, self.config)?;
                    if self.overflow == VmLocation::Rejected && vm.sla >= self.config.s {
                        return Err(Error::Infeasible(vm.id));
                    }
                    genes[j] = 0;
                }
            }
        }
        Ok(genes)
    }

    /// Consolidation hill-climb: moves one VM at a time off the least-loaded
    /// powered PM onto a more loaded one, keeping strict improvements only.
    pub fn local_search(&self, start: Scored, budget: usize) -> Scored {
        let mut best = start;
        let pms = self.state.pms();
        let vms = self.state.vms();
        let protection = self.state.protection();
        let mut accepted = 0;
        'outer: while accepted < budget {
            let usage = self.usage(&self.decode(&best.genes));
            let mut powered: Vec<(f64, usize)> = (0..self.n)
                .filter(|&i| usage[i].powered_on())
                .map(|i| (pm_load(pms[i].capacity, usage[i]), i))
                .collect();
            if powered.len() < 2 {
                break;
            }
            powered.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, src) in powered.iter().take(3) {
                let mut movers: Vec<usize> = (0..vms.len())
                    .filter(|&j| best.genes[j] == src as u32 + 1)
                    .collect();
                movers.sort_by(|a, b| vms[*b].demand.cpu().total_cmp(&vms[*a].demand.cpu()).then(a.cmp(b)));
                for j in movers {
                    let target = powered.iter().rev().map(|p| p.1).find(|&k| {
                        k != src
                            && capacity_check(&usage[k].committed, &pms[k].capacity, &vms[j], &protection)
                    });
                    let Some(k) = target else { continue };
                    let mut genes = best.genes.clone();
                    genes[j] = k as u32 + 1;
                    let trial = self.score(genes);
                    if trial.cost < best.cost {
                        best = trial;
                        accepted += 1;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        best
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Chromosome {
        (0..self.m()).map(|_| rng.random_range(0..=self.n as u32)).collect()
    }

    /// Chromosome built by running `h` over every VM from an empty datacenter.
    fn from_heuristic(&self, h: Heuristic) -> Option<Chromosome> {
        let mut state = self.state.clone();
        let ids: Vec<VmId> = state.vms().iter().map(|vm| vm.id).collect();
        for id in &ids {
            state.unplace(*id).ok()?;
        }
        heuristics::place_batch(h, &ids, &mut state, self.config).ok()?;
        self.encode_placement(&state.placement())
    }
}

fn pm_load(capacity: crate::model::Resources, usage: PmUsage) -> f64 {
    usage.committed.ratio_of(capacity).iter().sum()
}

/// Uniform crossover: each gene pair is swapped with probability 0.5.
pub fn crossover(a: &[u32], b: &[u32], rng: &mut impl Rng) -> (Chromosome, Chromosome) {
    let mut c = a.to_vec();
    let mut d = b.to_vec();
    for j in 0..c.len().min(d.len()) {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c[j], &mut d[j]);
        }
    }
    (c, d)
}

/// Resamples each gene uniformly from `0..=n` with probability `rate`.
pub fn mutate(mut c: Chromosome, n: usize, rate: f64, rng: &mut impl Rng) -> Chromosome {
    for g in c.iter_mut() {
        if rng.random_bool(rate) {
            *g = rng.random_range(0..=n as u32);
        }
    }
    c
}

/// Result of [`evolve`].
#[derive(Clone, Debug)]
pub struct Evolution {
    pub placement: Placement,
    pub objectives: ObjectiveVector,
    pub cost: f64,
    /// Best cost after each generation (index 0 is the initial population).
    pub history: Vec<f64>,
}

fn tournament<'p>(pop: &'p [Scored], k: usize, rng: &mut ChaCha8Rng) -> &'p Scored {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let c = rng.random_range(0..pop.len());
        if pop[c].cost < pop[best].cost || (pop[c].cost == pop[best].cost && c < best) {
            best = c;
        }
    }
    &pop[best]
}

/// Keeps the `mu` cheapest distinct chromosomes; stable on ties.
fn survivors(mut pool: Vec<Scored>, mu: usize) -> Vec<Scored> {
    pool.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut seen = HashSet::new();
    pool.retain(|s| seen.insert(s.genes.clone()));
    pool.truncate(mu);
    pool
}

/// Searches a whole new placement for the snapshot's alive VMs.
///
/// The snapshot's placement seeds the first generation, so the returned cost
/// never exceeds the incumbent's.
pub fn evolve(snapshot: &DatacenterState, params: &MaParams, config: &ProblemConfig) -> Result<Evolution> {
    params.validate()?;
    let mut snapshot = snapshot.clone();
    snapshot.clear_migration_boosts();
    let problem = Problem::new(&snapshot, config);
    if problem.m() == 0 {
        let (objectives, cost) = problem.evaluate(&[]);
        return Ok(Evolution {
            placement: Placement::default(),
            objectives,
            cost,
            history: vec![cost],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let rate = params.mutation_rate.unwrap_or(1.0 / problem.m() as f64);

    let mut infeasible = None;
    let mut seeds: Vec<Chromosome> = Vec::new();
    let constructed = problem
        .incumbent()
        .into_iter()
        .chain(Heuristic::ALL.iter().filter_map(|h| problem.from_heuristic(*h)));
    for c in constructed {
        match problem.repair(c) {
            Ok(c) => seeds.push(c),
            Err(e) => infeasible = Some(e),
        }
    }
    let mut attempts = 0;
    while seeds.len() < params.population_size && attempts < 4 * params.population_size {
        attempts += 1;
        match problem.repair(problem.random(&mut rng)) {
            Ok(c) => seeds.push(c),
            Err(e) => infeasible = Some(e),
        }
    }
    let scored: Vec<Scored> = seeds.into_par_iter().map(|c| problem.score(c)).collect();
    let mut pop = survivors(scored, params.population_size);
    if pop.is_empty() {
        return Err(infeasible.unwrap_or(Error::Empty("initial population")));
    }
    let mut history = vec![pop[0].cost];

    for _ in 0..params.generations {
        let mut raw = Vec::with_capacity(params.population_size);
        while raw.len() < params.population_size {
            let a = tournament(&pop, params.tournament_size, &mut rng);
            let b = tournament(&pop, params.tournament_size, &mut rng);
            let (c, d) = if rng.random_bool(params.crossover_rate) {
                crossover(&a.genes, &b.genes, &mut rng)
            } else {
                (a.genes.clone(), b.genes.clone())
            };
            raw.push(mutate(c, problem.n, rate, &mut rng));
            raw.push(mutate(d, problem.n, rate, &mut rng));
        }
        raw.truncate(params.population_size);
        let mut children: Vec<Scored> = raw
            .into_par_iter()
            .filter_map(|c| problem.repair(c).ok())
            .map(|c| problem.score(c))
            .collect();
        if let Some(pos) = (0..children.len()).min_by(|a, b| children[*a].cost.total_cmp(&children[*b].cost)) {
            let best = children.swap_remove(pos);
            children.push(problem.local_search(best, params.local_search_moves));
        }
        pop.extend(children);
        pop = survivors(pop, params.population_size);
        history.push(pop[0].cost);
    }

    let best = problem.local_search(pop.swap_remove(0), params.local_search_moves);
    Ok(Evolution {
        placement: problem.to_placement(&best.genes),
        objectives: best.objectives,
        cost: best.cost,
        history,
    })
}
