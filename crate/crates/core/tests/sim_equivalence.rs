//! The PDE simulator against the exact difference recurrence.

use transport_spectra::model::SystemParams;
use transport_spectra::sim::{
    estimate_decay_rate, free_response_history, run, run_difference_recurrence, ClosedLoopConfig, Controller,
    InitialCondition, SystemKind,
};

fn pair(controller: Controller, initial: InitialCondition, cells: usize) -> ClosedLoopConfig {
    ClosedLoopConfig::new(SystemKind::InviscidPair, SystemParams::unit())
        .with_controller(controller)
        .with_initial(initial)
        .with_cells(cells)
        .with_t_end(12.0)
}

#[test]
fn pde_output_equals_recurrence_bitwise() {
    let cells = 64;
    let initial = InitialCondition::Smooth { seed: 7, modes: 5 };
    for (k1, k2) in [(0.0, 1.0), (0.25, 1.0), (0.1, 0.5), (-0.2, 0.3), (0.0, 0.0)] {
        let ctrl = Controller::DynamicDelayed { k1, k2, tau: 1.0 };
        let traj = run(&pair(ctrl, initial, cells)).unwrap();
        let (a, b) = initial.profiles(cells);
        let hist = free_response_history(&a, &b);
        let rec = run_difference_recurrence(k1, k2, 1.0, traj.dt, &hist, 12.0).unwrap();
        assert_eq!(rec.len(), traj.len());
        // n = 0 reads the initial a[N], which the recurrence also starts from
        for i in 0..traj.len() {
            assert_eq!(traj.output[i].to_bits(), rec.output[i].to_bits(), "k = ({k1}, {k2}), step {i}");
        }
    }
}

#[test]
fn uncontrolled_ring_is_an_exact_rotation() {
    let cells = 50;
    let initial = InitialCondition::Smooth { seed: 3, modes: 4 };
    let traj = run(&pair(Controller::None, initial, cells).with_snapshots(2 * cells)).unwrap();
    let first = &traj.snapshots[0];
    for snap in &traj.snapshots[1..] {
        assert_eq!(snap.first, first.first, "t = {}", snap.t);
        assert_eq!(snap.second, first.second, "t = {}", snap.t);
    }
    // energy is conserved up to the trapezoid weights of the moving seam
    let e0 = traj.energy[0];
    assert!(traj.energy.iter().all(|e| (e - e0).abs() < 0.1 * e0));
}

#[test]
fn deadbeat_energy_reaches_zero() {
    let traj = run(&pair(Controller::DeadBeat, InitialCondition::default(), 128)).unwrap();
    let k = traj.times.iter().position(|&t| t >= 4.0).unwrap();
    assert!(traj.energy[0] > 0.0);
    assert!(traj.energy[k..].iter().all(|&e| e == 0.0));
}

#[test]
fn proportional_loop_grows_at_the_pole_line_rate() {
    // Y(t + 1) = Y(t − 1) − 2k_p Y(t): the echo root √(1 + k_p²) + k_p
    // exceeds one for every nonzero gain
    for kp in [0.25, 0.75] {
        let cfg = pair(Controller::Proportional { kp }, InitialCondition::default(), 64)
            .with_t_end(24.0);
        let traj = run(&cfg).unwrap();
        let fit = estimate_decay_rate(&traj, 10.0).unwrap();
        let want = ((1.0 + kp * kp).sqrt() + kp).ln();
        assert!((fit.rate - want).abs() < 1e-2, "kp {kp}: {} vs {want}", fit.rate);
    }
}
