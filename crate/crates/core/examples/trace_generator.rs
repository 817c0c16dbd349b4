//! Elastic trace generation and the CSV round trip.

use std::collections::BTreeMap;

use vmplace::trace::{generate, legacy_workload, parse_csv, to_csv_string, GeneratorParams, LegacyParams, Pdf};

fn main() -> vmplace::error::Result<()> {
    let steady = generate(&GeneratorParams::steady_example())?;
    let csv = to_csv_string(&steady);
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    assert_eq!(parse_csv(csv.as_bytes())?, steady);

    let elastic = generate(&GeneratorParams {
        duration: 50,
        num_services: 5,
        horizontal_elasticity: Pdf::Poisson { lambda: 7.0 },
        vertical_elasticity: Pdf::Poisson { lambda: 5.0 },
        server_util: Pdf::Poisson { lambda: 70.0 },
        rng_seed: 2,
        ..GeneratorParams::default()
    })?;
    let mut per_step: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for e in &elastic {
        let slot = per_step.entry(e.t).or_default();
        slot.0 += 1;
        slot.1 += e.cpu;
    }
    println!("\nt   vms  requested ECU");
    for (t, (vms, cpu)) in per_step.iter().step_by(5) {
        println!("{t:<3} {vms:>4} {cpu:>14.1}");
    }

    for (name, params) in LegacyParams::reference_workloads() {
        let rows = legacy_workload(&params)?;
        let busiest = rows.iter().fold(BTreeMap::new(), |mut m, r| {
            *m.entry(r.t).or_insert(0) += 1;
            m
        });
        println!("{name}: {} rows, peak {} VMs", rows.len(), busiest.values().max().unwrap_or(&0));
    }
    Ok(())
}
