//! Dead-beat feedback empties the inviscid loop in finite time, and so
//! does the simpler loop.

use transport_spectra::model::SystemParams;
use transport_spectra::sim::{run, ClosedLoopConfig, Controller, InitialCondition, SystemKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let initial = InitialCondition::Smooth { seed: 11, modes: 6 };
    let pair = ClosedLoopConfig::new(SystemKind::InviscidPair, SystemParams::unit())
        .with_controller(Controller::DeadBeat)
        .with_initial(initial)
        .with_t_end(6.0);
    let simpler = ClosedLoopConfig::new(SystemKind::SimplerPair, SystemParams::unit())
        .with_initial(initial)
        .with_t_end(6.0);

    for (label, cfg) in [("inviscid pair", pair), ("simpler loop", simpler)] {
        let traj = run(&cfg)?;
        let last_nonzero = traj
            .times
            .iter()
            .zip(&traj.output)
            .filter(|(_, y)| **y != 0.0)
            .map(|(t, _)| *t)
            .next_back();
        println!(
            "{label}: last nonzero output at t = {last_nonzero:?}, final energy {:e}",
            traj.energy.last().copied().unwrap_or_default()
        );
    }
    Ok(())
}
