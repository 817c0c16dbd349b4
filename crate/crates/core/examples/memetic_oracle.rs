//! Memetic search against exhaustive enumeration on a tiny instance.

use vmplace::config::ProblemConfig;
use vmplace::memetic::{evolve, MaParams};
use vmplace::model::{DatacenterState, PhysicalMachine, Placement, VirtualMachine, VmLocation};
use vmplace::objectives::evaluate;

fn main() -> vmplace::error::Result<()> {
    let cfg = ProblemConfig::part_one();
    let pms = vec![
        PhysicalMachine::new(0, 8.0, 10.0, 780.0, 960.0)?,
        PhysicalMachine::new(1, 12.0, 16.0, 1000.0, 1200.0)?,
    ];
    let mut state = DatacenterState::new(pms, cfg.protection());
    let ids: Vec<_> = [(4.0, 3.0, 1), (6.0, 8.0, 4), (3.0, 2.0, 2), (5.0, 6.0, 3)]
        .into_iter()
        .map(|(cpu, ram, sla)| {
            state.add_vm(
                VirtualMachine::new(cpu, ram, 100.0, 0.3 * cpu)
                    .with_sla(sla)
                    .with_utilization(0.6, 0.8, 0.5),
            )
        })
        .collect();

    let n = state.pms().len();
    let mut best = (f64::INFINITY, Placement::default());
    for code in 0..(n + 1).pow(ids.len() as u32) {
        let mut c = code;
        let placement: Placement = ids
            .iter()
            .map(|&id| {
                let g = c % (n + 1);
                c /= n + 1;
                (id, if g == 0 { VmLocation::Federated } else { VmLocation::OnPm(g - 1) })
            })
            .collect();
        let mut trial = state.clone();
        trial.apply_placement(&placement)?;
        if trial.validate_placement(&cfg).is_empty() {
            let cost = cfg.scalarizer.apply(&evaluate(&trial.view(), &cfg, 0.0).normalized);
            if cost < best.0 {
                best = (cost, placement);
            }
        }
    }

    let params = MaParams {
        population_size: 50,
        generations: 200,
        ..MaParams::default()
    };
    let ev = evolve(&state, &params, &cfg)?;
    println!("enumerated optimum {:.6}: {:?}", best.0, best.1.iter().collect::<Vec<_>>());
    println!("memetic result     {:.6}: {:?}", ev.cost, ev.placement.iter().collect::<Vec<_>>());
    println!("best cost by generation: {:.4?}", &ev.history[..ev.history.len().min(8)]);
    Ok(())
}
