//! Two-phase BFD under each scalarizer across a small scenario grid.

use vmplace::config::ProblemConfig;
use vmplace::eval::{build_report, run_scenarios, ScenarioGrid};
use vmplace::memetic::MaParams;
use vmplace::objectives::Scalarizer;
use vmplace::sim::{Algorithm, SimOptions};
use vmplace::trace::GeneratorParams;

fn main() -> vmplace::error::Result<()> {
    let grid = ScenarioGrid {
        base: GeneratorParams {
            duration: 60,
            num_services: 30,
            ..GeneratorParams::default()
        },
        ..ScenarioGrid::default()
    };
    let scenarios: Vec<_> = grid.build()?.into_iter().step_by(2).collect();
    let options = SimOptions {
        ma: MaParams {
            population_size: 30,
            generations: 30,
            ..MaParams::default()
        },
        ..SimOptions::default()
    };
    let mut results = Vec::new();
    for s in [Scalarizer::ws([0.25; 4]), Scalarizer::Euclidean, Scalarizer::Chebyshev] {
        let cfg = ProblemConfig::part_two().with_scalarizer(s.clone());
        results.push(run_scenarios(s.label(), &scenarios, Algorithm::TwoPhase, &cfg, &options, &[0])?);
    }
    print!("{}", build_report(&results)?.to_text());
    Ok(())
}
