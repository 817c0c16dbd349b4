use proptest::prelude::*;

use vmplace::config::ProblemConfig;
use vmplace::eval::{build_report, run_scenarios, MethodResult, ScenarioGrid};
use vmplace::heuristics::Heuristic;
use vmplace::memetic::MaParams;
use vmplace::sim::{run_simulation, Algorithm, LoadProfile, SimOptions};
use vmplace::trace::{generate, legacy_workload, GeneratorParams, LegacyParams, Pdf};

fn quick() -> SimOptions {
    SimOptions {
        ma: MaParams {
            population_size: 12,
            generations: 8,
            ..MaParams::default()
        },
        ..SimOptions::default()
    }
}

#[test]
fn memetic_run_records_migrations_only_when_the_vm_set_changes() {
    let trace = legacy_workload(&LegacyParams {
        duration: 30,
        services: 20,
        arrivals: Pdf::Uniform { a: 0, b: 29 },
        lifetime: Some(Pdf::Uniform { a: 2, b: 10 }),
        ..LegacyParams::default()
    })
    .unwrap();
    let cfg = ProblemConfig {
        s: 5,
        ..ProblemConfig::part_one()
    };
    let run = run_simulation(&trace, LoadProfile::Homogeneous.pms(), &cfg, Algorithm::Memetic, &quick()).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for s in &run.steps {
        let rows: std::collections::BTreeSet<u64> = trace.iter().filter(|r| r.t == s.t).map(|r| r.v).collect();
        if rows == seen {
            assert_eq!(s.migrations, 0, "t={}", s.t);
        }
        seen = rows;
    }
    assert!(run.steps.iter().any(|s| s.alive > 0));
}

#[test]
fn part_two_report_over_both_loads() {
    let grid = ScenarioGrid {
        base: GeneratorParams {
            duration: 25,
            num_services: 12,
            max_vms_per_service: 4,
            ..GeneratorParams::default()
        },
        ..ScenarioGrid::default()
    };
    let scenarios: Vec<_> = grid.build().unwrap().into_iter().step_by(4).collect();
    let cfg = ProblemConfig::part_two();
    let results: Vec<MethodResult> = [Algorithm::Online(Heuristic::BestFitDecreasing), Algorithm::TwoPhase]
        .into_iter()
        .map(|a| run_scenarios(a.label(), &scenarios, a, &cfg, &quick(), &[0, 1]).unwrap())
        .collect();
    let report = build_report(&results).unwrap();
    let by_load = report.table("by_load").unwrap();
    assert_eq!(by_load.rows.len(), 4 * 2);
    for r in &results {
        let mean = r.scenarios.iter().map(|s| s.average_cost).sum::<f64>() / r.scenarios.len() as f64;
        assert!((r.average - mean).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_algorithm_keeps_constraints(seed in 0u64..1000, services in 2u32..10, period in 2u32..6) {
        let trace = generate(&GeneratorParams {
            duration: 20,
            num_services: services,
            max_vms_per_service: 4,
            horizontal_elasticity: Pdf::Poisson { lambda: 2.0 },
            vertical_elasticity: Pdf::Uniform { a: 0, b: 6 },
            rng_seed: seed,
            ..GeneratorParams::default()
        })
        .unwrap();
        let mut cfg = ProblemConfig::part_two();
        cfg.vmpr_period = Some(period);
        cfg.vmpr_duration = 1 + (seed % 3) as u32;
        let pms = LoadProfile::High.pms()[..6].to_vec();
        for algo in ["ff", "wf", "bfd", "ma", "two-phase"] {
            let algo: Algorithm = algo.parse().unwrap();
            let opts = SimOptions { duration: Some(20), ..quick() };
            let run = run_simulation(&trace, pms.clone(), &cfg, algo, &opts).unwrap();
            prop_assert_eq!(run.steps.len(), 20);
            for s in &run.steps {
                prop_assert!(s.objectives.normalized.iter().all(|x| (0.0..=1.0).contains(x)));
                prop_assert!(s.cost.is_finite() && s.cost >= 0.0);
            }
            if algo == Algorithm::TwoPhase {
                for s in run.steps.iter().filter(|s| s.migrations > 0) {
                    prop_assert!(s.t >= period + cfg.vmpr_duration);
                    prop_assert_eq!((s.t - cfg.vmpr_duration) % period, 0);
                }
            }
        }
    }
}
