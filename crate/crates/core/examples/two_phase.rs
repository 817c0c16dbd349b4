//! Online BFD with and without periodic memetic reconfiguration.

use vmplace::config::ProblemConfig;
use vmplace::heuristics::Heuristic;
use vmplace::memetic::MaParams;
use vmplace::sim::{run_simulation, Algorithm, LoadProfile, SimOptions};
use vmplace::trace::{generate, GeneratorParams, Pdf};

fn main() -> vmplace::error::Result<()> {
    let trace = generate(&GeneratorParams {
        duration: 100,
        num_services: 40,
        horizontal_elasticity: Pdf::Poisson { lambda: 7.0 },
        vertical_elasticity: Pdf::Poisson { lambda: 5.0 },
        rng_seed: 11,
        ..GeneratorParams::default()
    })?;
    let cfg = ProblemConfig::part_two();
    let options = SimOptions {
        ma: MaParams {
            population_size: 40,
            generations: 40,
            ..MaParams::default()
        },
        concurrent_vmpr: true,
        ..SimOptions::default()
    };
    let online = run_simulation(&trace, LoadProfile::High.pms(), &cfg, Algorithm::Online(Heuristic::BestFitDecreasing), &options)?;
    let two_phase = run_simulation(&trace, LoadProfile::High.pms(), &cfg, Algorithm::TwoPhase, &options)?;

    println!("online bfd  F = {:.5}", online.average_cost()?);
    println!("two-phase   F = {:.5}", two_phase.average_cost()?);
    println!(
        "reconfigurations adopted {} / discarded {}, {} migrations moving {:.1} GB",
        two_phase.reconfigurations_adopted,
        two_phase.reconfigurations_discarded,
        two_phase.migrations,
        two_phase.migrated_gb
    );
    for s in two_phase.steps.iter().filter(|s| s.migrations > 0) {
        println!("  t={:>3}: {} VMs moved, F {:.5}", s.t, s.migrations, s.cost);
    }
    Ok(())
}
