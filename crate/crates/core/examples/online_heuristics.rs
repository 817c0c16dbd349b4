//! The five online heuristics on the four reference workloads.

use vmplace::config::ProblemConfig;
use vmplace::heuristics::Heuristic;
use vmplace::sim::{run_simulation, Algorithm, LoadProfile, SimOptions};
use vmplace::trace::{legacy_workload, LegacyParams};

fn main() -> vmplace::error::Result<()> {
    // the reference workloads draw SLA levels up to 5
    let cfg = ProblemConfig {
        s: 5,
        ..ProblemConfig::part_one()
    };
    print!("{:<4}", "");
    for h in Heuristic::ALL {
        print!("{:>9}", h.label());
    }
    println!();
    for (name, params) in LegacyParams::reference_workloads() {
        let trace = legacy_workload(&params)?;
        print!("{name:<4}");
        for h in Heuristic::ALL {
            let run = run_simulation(&trace, LoadProfile::Homogeneous.pms(), &cfg, Algorithm::Online(h), &SimOptions::default())?;
            print!("{:>9.4}", run.average_cost()?);
        }
        println!();
    }
    Ok(())
}
