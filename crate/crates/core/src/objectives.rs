//! Objective functions, normalization and scalarization.

use serde::{Deserialize, Serialize};

use crate::config::{ObjectiveSet, ProblemConfig};
use crate::error::{Error, Result};
use crate::memetic::MigrationPlan;
use crate::model::{
    compute_usage, DatacenterState, PhysicalMachine, PmUsage, Resources, VirtualMachine,
    VmLocation, R,
};

/// Borrowed view of everything the objective functions read. Lets callers
/// evaluate hypothetical placements without building a [`DatacenterState`].
#[derive(Clone, Copy, Debug)]
pub struct StateView<'a> {
    pub pms: &'a [PhysicalMachine],
    /// Sorted by id.
    pub vms: &'a [VirtualMachine],
    /// Parallel to `vms`.
    pub locations: &'a [Option<VmLocation>],
    /// Parallel to `pms`.
    pub usage: &'a [PmUsage],
}

impl DatacenterState {
    pub fn view(&self) -> StateView<'_> {
        StateView {
            pms: self.pms(),
            vms: self.vms(),
            locations: self.locations(),
            usage: self.usage(),
        }
    }
}

impl StateView<'_> {
    fn served(&self) -> impl Iterator<Item = (&VirtualMachine, VmLocation)> {
        self.vms
            .iter()
            .zip(self.locations)
            .filter_map(|(vm, loc)| loc.map(|l| (vm, l)))
    }

    /// Actual per-resource utilization of PM `i`, clamped to [0, 1].
    pub fn pm_utilization(&self, i: usize) -> Resources {
        self.usage[i]
            .actual
            .ratio_of(self.pms[i].capacity)
            .map(|u| u.clamp(0.0, 1.0))
    }
}

/// Total power drawn by powered-on PMs under the linear power model [W].
pub fn power_consumption(view: &StateView, config: &ProblemConfig) -> f64 {
    let mut total = 0.0;
    for (i, pm) in view.pms.iter().enumerate() {
        if view.usage[i].powered_on() {
            let pmin = config.pmin_factor * pm.pmax;
            total += (pm.pmax - pmin) * view.pm_utilization(i).cpu() + pmin;
        }
    }
    total
}

/// Leasing cost paid to the federation [USD].
pub fn federation_cost(view: &StateView, config: &ProblemConfig) -> f64 {
    view.served()
        .filter(|(_, loc)| loc.is_served())
        .map(|(vm, loc)| vm.revenue * loc.federation_factor(config.federation_factor))
        .sum()
}

/// Penalties for demand that exceeds a PM's physical capacity [USD].
///
/// The shortfall on resource q is rationed in proportion to each hosted VM's
/// actual demand, so every VM on the PM sees the same unsatisfied ratio.
pub fn economic_penalties(view: &StateView) -> f64 {
    let shortfall: Vec<Option<[f64; R]>> = view
        .usage
        .iter()
        .zip(view.pms)
        .map(|(u, pm)| {
            let ratio: [f64; R] = std::array::from_fn(|q| {
                let excess = u.actual[q] - pm.capacity[q];
                if excess > 0.0 {
                    excess / u.actual[q]
                } else {
                    0.0
                }
            });
            ratio.iter().any(|r| *r > 0.0).then_some(ratio)
        })
        .collect();
    let mut total = 0.0;
    for (vm, loc) in view.served() {
        let Some(i) = loc.pm() else { continue };
        let Some(ratio) = shortfall[i] else { continue };
        let used = vm.actual_demand();
        for (q, dr) in ratio.iter().enumerate() {
            if used[q] > 0.0 {
                total += vm.resource_revenue(q) * dr;
            }
        }
    }
    total
}

/// Weighted count of SLA levels served by the federation.
pub fn qos_violation_cost(view: &StateView, config: &ProblemConfig) -> f64 {
    view.served()
        .filter(|(_, loc)| loc.is_federated())
        .map(|(vm, _)| config.c_hat.powi(vm.sla as i32) * vm.sla as f64)
        .sum()
}

/// Mean idle share of powered-on PMs; 0 when every PM is off.
pub fn wasted_resources(view: &StateView) -> f64 {
    let mut sum = 0.0;
    let mut on = 0usize;
    for i in 0..view.pms.len() {
        if view.usage[i].powered_on() {
            let u = view.pm_utilization(i);
            sum += 1.0 - u.iter().sum::<f64>() / R as f64;
            on += 1;
        }
    }
    if on == 0 {
        0.0
    } else {
        sum / on as f64
    }
}

/// Largest RAM volume moved between any ordered pair of PMs [GB].
pub fn reconfiguration_overhead(plan: &MigrationPlan) -> f64 {
    plan.max_transfer()
}

/// Raw and normalized values of the active objective set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub raw: [f64; 4],
    pub normalized: [f64; 4],
}

/// Per-objective (f_min, f_max).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds(pub [(f64, f64); 4]);

pub fn normalize(f: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo {
        0.0
    } else {
        ((f - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Analytic per-step extremes of each objective in the active set.
pub fn compute_bounds(view: &StateView, config: &ProblemConfig) -> ObjectiveBounds {
    let pmax: f64 = view.pms.iter().map(|pm| pm.pmax).sum();
    let revenue: f64 = view
        .vms
        .iter()
        .map(|vm| vm.revenue * config.federation_factor.max(1.0))
        .sum();
    let m = view.vms.len() as f64;
    let qos = config.c_hat.powi(config.s as i32) * config.s as f64 * m;
    let ram: f64 = view.vms.iter().map(|vm| vm.demand.ram()).sum();
    ObjectiveBounds(match config.objective_set {
        ObjectiveSet::PartI => [(0.0, pmax), (0.0, revenue), (0.0, qos), (0.0, 1.0)],
        ObjectiveSet::PartII => [(0.0, pmax), (0.0, revenue), (0.0, 1.0), (0.0, ram)],
    })
}

/// Raw objective values of the active set. `reconfiguration` is the f4 term
/// of the two-phase set and is ignored by the online set.
pub fn raw_objectives(view: &StateView, config: &ProblemConfig, reconfiguration: f64) -> [f64; 4] {
    let power = power_consumption(view, config);
    let leasing = federation_cost(view, config);
    let wasted = wasted_resources(view);
    match config.objective_set {
        ObjectiveSet::PartI => [power, leasing, qos_violation_cost(view, config), wasted],
        ObjectiveSet::PartII => [
            power,
            leasing + economic_penalties(view),
            wasted,
            reconfiguration,
        ],
    }
}

pub fn evaluate(view: &StateView, config: &ProblemConfig, reconfiguration: f64) -> ObjectiveVector {
    let raw = raw_objectives(view, config, reconfiguration);
    let bounds = compute_bounds(view, config);
    ObjectiveVector {
        raw,
        normalized: std::array::from_fn(|i| normalize(raw[i], bounds.0[i])),
    }
}

/// Evaluates a hypothetical assignment of the state's VMs.
pub fn evaluate_locations(
    state: &DatacenterState,
    locations: &[Option<VmLocation>],
    config: &ProblemConfig,
    reconfiguration: f64,
) -> ObjectiveVector {
    let usage = compute_usage(state.pms().len(), state.vms(), locations, &state.protection());
    let view = StateView {
        pms: state.pms(),
        vms: state.vms(),
        locations,
        usage: &usage,
    };
    evaluate(&view, config, reconfiguration)
}

/// Method collapsing a normalized objective vector to one value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Scalarizer {
    #[serde(rename = "ws")]
    WeightedSum { weights: Vec<f64> },
    #[serde(rename = "ed")]
    Euclidean,
    #[serde(rename = "cd")]
    Chebyshev,
}

impl Scalarizer {
    pub fn ws(weights: impl Into<Vec<f64>>) -> Self {
        Scalarizer::WeightedSum {
            weights: weights.into(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scalarizer::WeightedSum { .. } => "ws",
            Scalarizer::Euclidean => "ed",
            Scalarizer::Chebyshev => "cd",
        }
    }

    pub fn validate(&self, objectives: usize) -> Result<()> {
        if let Scalarizer::WeightedSum { weights } = self {
            if weights.len() != objectives {
                return Err(Error::config(format!(
                    "weighted sum needs {objectives} weights, got {}",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::config("weights must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn scalarize(&self, normalized: &[f64]) -> Result<f64> {
        self.validate(normalized.len())?;
        Ok(self.apply(normalized))
    }

    /// [`Self::scalarize`] without the weight-count check.
    pub fn apply(&self, f: &[f64]) -> f64 {
        match self {
            Scalarizer::WeightedSum { weights } => f.iter().zip(weights).map(|(f, w)| f * w).sum(),
            Scalarizer::Euclidean => f.iter().map(|f| f * f).sum::<f64>().sqrt(),
            Scalarizer::Chebyshev => f.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Weights that equalize the average contribution of each objective over
/// sampled normalized vectors: w_i = N / Σ_k f̂_i(x_k).
pub fn derive_ws_weights(samples: &[[f64; 4]]) -> Result<[f64; 4]> {
    if samples.is_empty() {
        return Err(Error::Empty("weight samples"));
    }
    let n = samples.len() as f64;
    let mut out = [0.0; 4];
    for (i, w) in out.iter_mut().enumerate() {
        let column: f64 = samples.iter().map(|s| s[i]).sum();
        if !(column > 0.0 && column.is_finite()) {
            return Err(Error::config(format!(
                "objective {} is zero across all samples; its weight is undefined",
                i + 1
            )));
        }
        *w = n / column;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PART_ONE_WEIGHTS;
    use crate::memetic::build_migration_plan;
    use crate::model::{Placement, VmId};
    use proptest::prelude::*;

    fn single_pm(pmax: f64) -> DatacenterState {
        DatacenterState::new(
            vec![PhysicalMachine::new(1, 10.0, 10.0, 10.0, pmax).unwrap()],
            Resources::splat(1.0),
        )
    }

    fn host(state: &mut DatacenterState, vm: VirtualMachine, loc: VmLocation) -> VmId {
        let id = state.add_vm(vm);
        state.place(id, loc).unwrap();
        id
    }

    #[test]
    fn power_of_empty_datacenter_is_zero() {
        let state = single_pm(800.0);
        assert_eq!(power_consumption(&state.view(), &ProblemConfig::part_one()), 0.0);
    }

    #[test]
    fn power_at_half_load() {
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(5.0, 1.0, 1.0, 1.0), VmLocation::OnPm(0));
        assert_eq!(power_consumption(&state.view(), &ProblemConfig::part_one()), 640.0);
    }

    #[test]
    fn power_at_full_load_is_pmax() {
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(10.0, 1.0, 1.0, 1.0), VmLocation::OnPm(0));
        assert_eq!(power_consumption(&state.view(), &ProblemConfig::part_one()), 800.0);
    }

    #[test]
    fn federation_cost_cases() {
        let cfg = ProblemConfig::part_one();
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(1.0, 1.0, 1.0, 5.0), VmLocation::OnPm(0));
        assert_eq!(federation_cost(&state.view(), &cfg), 0.0);
        host(&mut state, VirtualMachine::new(1.0, 1.0, 1.0, 1.0), VmLocation::Federated);
        assert!((federation_cost(&state.view(), &cfg) - 0.7).abs() < 1e-12);
        host(&mut state, VirtualMachine::new(1.0, 1.0, 1.0, 2.0), VmLocation::Federated);
        assert!((federation_cost(&state.view(), &cfg) - 2.1).abs() < 1e-12);
    }

    #[test]
    fn no_oversubscription_no_penalty() {
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(10.0, 10.0, 10.0, 3.0), VmLocation::OnPm(0));
        assert_eq!(economic_penalties(&state.view()), 0.0);
    }

    #[test]
    fn single_term_penalty() {
        // Rr_cpu = 0.3 (equal split of 0.9), actual cpu 20 on 10 ECU: Δr = 0.5
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(20.0, 1.0, 1.0, 0.9), VmLocation::OnPm(0));
        assert!((economic_penalties(&state.view()) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn federated_vms_pay_no_penalty() {
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(50.0, 50.0, 50.0, 3.0), VmLocation::Federated);
        assert_eq!(economic_penalties(&state.view()), 0.0);
    }

    #[test]
    fn penalty_uses_rates_when_present() {
        let mut state = single_pm(800.0);
        let vm = VirtualMachine::new(20.0, 1.0, 1.0, 0.0).with_rates(Resources::new(0.1, 0.0, 0.0));
        host(&mut state, vm, VmLocation::OnPm(0));
        // Rr_cpu = 20 * 0.1 = 2, Δr = 0.5
        assert!((economic_penalties(&state.view()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qos_cases() {
        let cfg = ProblemConfig::part_one();
        let mut state = single_pm(800.0);
        host(&mut state, VirtualMachine::new(1.0, 1.0, 1.0, 1.0).with_sla(2), VmLocation::OnPm(0));
        assert_eq!(qos_violation_cost(&state.view(), &cfg), 0.0);
        host(&mut state, VirtualMachine::new(1.0, 1.0, 1.0, 1.0).with_sla(2), VmLocation::Federated);
        assert_eq!(qos_violation_cost(&state.view(), &cfg), 2e6);

        let mut state = single_pm(800.0);
        for _ in 0..2 {
            host(&mut state, VirtualMachine::new(1.0, 1.0, 1.0, 1.0), VmLocation::Federated);
        }
        assert_eq!(qos_violation_cost(&state.view(), &cfg), 2000.0);
    }

    #[test]
    fn wasted_resources_cases() {
        let mut state = single_pm(800.0);
        assert_eq!(wasted_resources(&state.view()), 0.0);
        host(&mut state, VirtualMachine::new(4.0, 6.0, 5.0, 1.0), VmLocation::OnPm(0));
        assert!((wasted_resources(&state.view()) - 0.5).abs() < 1e-12);

        let mut full = single_pm(800.0);
        host(&mut full, VirtualMachine::new(10.0, 10.0, 10.0, 1.0), VmLocation::OnPm(0));
        assert_eq!(wasted_resources(&full.view()), 0.0);

        let mut idle = single_pm(800.0);
        host(&mut idle, VirtualMachine::new(0.0, 0.0, 0.0, 1.0), VmLocation::OnPm(0));
        assert_eq!(wasted_resources(&idle.view()), 1.0);
    }

    #[test]
    fn reconfiguration_cases() {
        let pms = (1..=3)
            .map(|i| PhysicalMachine::new(i, 100.0, 100.0, 100.0, 1.0).unwrap())
            .collect();
        let mut state = DatacenterState::new(pms, Resources::splat(1.0));
        let a = host(&mut state, VirtualMachine::new(1.0, 10.0, 1.0, 1.0), VmLocation::OnPm(0));
        let b = host(&mut state, VirtualMachine::new(1.0, 6.0, 1.0, 1.0), VmLocation::OnPm(1));
        let from = state.placement();
        assert_eq!(reconfiguration_overhead(&build_migration_plan(&from, &from, &state)), 0.0);

        let mut to = from.clone();
        to.insert(a, VmLocation::OnPm(1));
        to.insert(b, VmLocation::OnPm(2));
        assert_eq!(reconfiguration_overhead(&build_migration_plan(&from, &to, &state)), 10.0);

        let mut state = DatacenterState::new(
            (1..=2)
                .map(|i| PhysicalMachine::new(i, 100.0, 100.0, 100.0, 1.0).unwrap())
                .collect(),
            Resources::splat(1.0),
        );
        host(&mut state, VirtualMachine::new(1.0, 4.0, 1.0, 1.0), VmLocation::OnPm(0));
        host(&mut state, VirtualMachine::new(1.0, 5.0, 1.0, 1.0), VmLocation::OnPm(0));
        let from = state.placement();
        let to: Placement = from.iter().map(|(id, _)| (id, VmLocation::OnPm(1))).collect();
        assert_eq!(reconfiguration_overhead(&build_migration_plan(&from, &to, &state)), 9.0);
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(normalize(0.0, (0.0, 10.0)), 0.0);
        assert_eq!(normalize(10.0, (0.0, 10.0)), 1.0);
        assert_eq!(normalize(4.0, (0.0, 10.0)), 0.4);
        assert_eq!(normalize(5.0, (0.0, 0.0)), 0.0);
        assert_eq!(normalize(-1.0, (0.0, 10.0)), 0.0);
    }

    #[test]
    fn power_bounds_of_ten_homogeneous_pms() {
        let pms = (1..=10)
            .map(|i| PhysicalMachine::new(i, 8.0, 10.0, 780.0, 960.0).unwrap())
            .collect();
        let state = DatacenterState::new(pms, Resources::splat(1.0));
        let b = compute_bounds(&state.view(), &ProblemConfig::part_one());
        assert_eq!(b.0[0], (0.0, 9600.0));
        assert_eq!(b.0[1], (0.0, 0.0));
        assert_eq!(b.0[2], (0.0, 0.0));
        assert_eq!(b.0[3], (0.0, 1.0));
        let b = compute_bounds(&state.view(), &ProblemConfig::part_two());
        assert_eq!(b.0[2], (0.0, 1.0));
        assert_eq!(b.0[3], (0.0, 0.0));
    }

    #[test]
    fn scalarizer_cases() {
        let ws = Scalarizer::ws(PART_ONE_WEIGHTS);
        assert!((ws.scalarize(&[1.0; 4]).unwrap() - 7.7261).abs() < 1e-12);
        assert_eq!(Scalarizer::Euclidean.scalarize(&[0.3, 0.4, 0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(Scalarizer::Chebyshev.scalarize(&[0.2, 0.7, 0.5, 0.1]).unwrap(), 0.7);
        assert!(Scalarizer::ws([1.0; 3]).scalarize(&[1.0; 4]).is_err());
    }

    #[test]
    fn scalarizer_toml_shape() {
        #[derive(Deserialize)]
        struct Doc {
            scalarizer: Scalarizer,
        }
        let doc: Doc = toml::from_str("[scalarizer]\nmethod = \"ws\"\nweights = [1, 2, 3, 4]\n").unwrap();
        assert_eq!(doc.scalarizer, Scalarizer::ws([1.0, 2.0, 3.0, 4.0]));
        let doc: Doc = toml::from_str("[scalarizer]\nmethod = \"cd\"\n").unwrap();
        assert_eq!(doc.scalarizer, Scalarizer::Chebyshev);
    }

    #[test]
    fn weight_derivation_cases() {
        assert_eq!(derive_ws_weights(&[[0.5; 4]; 7]).unwrap(), [2.0; 4]);
        let w = derive_ws_weights(&[[0.4, 1.0, 1.0, 1.0], [0.6, 1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(w[0], 2.0);
        assert!(derive_ws_weights(&[[0.0, 1.0, 1.0, 1.0]]).is_err());
        assert!(derive_ws_weights(&[]).is_err());
    }

    #[test]
    fn revenue_objective_is_leasing_plus_penalties() {
        let cfg = ProblemConfig::part_two();
        let mut state = DatacenterState::new(
            vec![PhysicalMachine::new(1, 10.0, 10.0, 10.0, 500.0).unwrap()],
            Resources::splat(0.0),
        );
        host(&mut state, VirtualMachine::new(8.0, 3.0, 3.0, 1.2), VmLocation::OnPm(0));
        host(&mut state, VirtualMachine::new(6.0, 3.0, 3.0, 0.6), VmLocation::OnPm(0));
        host(&mut state, VirtualMachine::new(6.0, 3.0, 3.0, 0.6), VmLocation::Federated);
        let v = state.view();
        let raw = raw_objectives(&v, &cfg, 0.0);
        assert_eq!(raw[1], federation_cost(&v, &cfg) + economic_penalties(&v));
        assert!(economic_penalties(&v) > 0.0);
    }

    fn arb_vec() -> impl Strategy<Value = [f64; 4]> {
        proptest::array::uniform4(0.0f64..=1.0)
    }

    proptest! {
        #[test]
        fn scalarizers_are_monotone(a in arb_vec(), d in arb_vec()) {
            let b: [f64; 4] = std::array::from_fn(|i| (a[i] + d[i] * (1.0 - a[i])).min(1.0));
            for s in [Scalarizer::ws(PART_ONE_WEIGHTS), Scalarizer::Euclidean, Scalarizer::Chebyshev] {
                prop_assert!(s.apply(&a) <= s.apply(&b));
            }
        }

        #[test]
        fn norms_are_ordered(v in arb_vec()) {
            let cd = Scalarizer::Chebyshev.apply(&v);
            let ed = Scalarizer::Euclidean.apply(&v);
            let l1 = Scalarizer::ws([1.0; 4]).apply(&v);
            prop_assert!(cd <= ed + 1e-15 && ed <= l1 + 1e-15);
        }

        #[test]
        fn power_is_linear_in_cpu(cpu in 0.0f64..9.0, step in 0.01f64..1.0) {
            let cfg = ProblemConfig::part_one();
            let power = |c: f64| {
                let mut s = single_pm(960.0);
                host(&mut s, VirtualMachine::new(c, 1.0, 1.0, 1.0), VmLocation::OnPm(0));
                power_consumption(&s.view(), &cfg)
            };
            let slope = (power(cpu + step) - power(cpu)) / (step / 10.0);
            prop_assert!((slope - 960.0 * 0.4).abs() < 1e-6);
        }

        #[test]
        fn weights_satisfy_closed_form(samples in proptest::collection::vec(
            proptest::array::uniform4(0.01f64..=1.0), 1..50)
        ) {
            let w = derive_ws_weights(&samples).unwrap();
            for i in 0..4 {
                let col: f64 = samples.iter().map(|s| s[i]).sum();
                prop_assert!((w[i] * col - samples.len() as f64).abs() < 1e-9);
            }
        }
    }
}
