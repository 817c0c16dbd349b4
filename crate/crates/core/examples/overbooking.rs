//! How the protection factor trades admitted load against overload risk.

use vmplace::config::ProblemConfig;
use vmplace::heuristics::Heuristic;
use vmplace::sim::{run_simulation, Algorithm, LoadProfile, SimOptions};
use vmplace::trace::{generate, GeneratorParams, Pdf};

fn main() -> vmplace::error::Result<()> {
    let trace = generate(&GeneratorParams {
        duration: 80,
        num_services: 60,
        server_util: Pdf::Poisson { lambda: 40.0 },
        rng_seed: 5,
        ..GeneratorParams::default()
    })?;
    println!("{:>6} {:>10} {:>10} {:>8}", "lambda", "power_w", "economic", "F");
    for lambda in [1.0, 0.75, 0.5, 0.25] {
        let cfg = ProblemConfig {
            protection: [lambda; 3],
            ..ProblemConfig::part_two()
        };
        let run = run_simulation(
            &trace,
            LoadProfile::High.pms(),
            &cfg,
            Algorithm::Online(Heuristic::BestFitDecreasing),
            &SimOptions::default(),
        )?;
        let avg = run.average_objectives();
        println!("{lambda:>6} {:>10.1} {:>10.2} {:>8.4}", avg.raw[0], avg.raw[1], run.average_cost()?);
    }
    Ok(())
}
