//! Invariants over random inputs.

use num_complex::Complex64;
use proptest::prelude::*;
use transport_spectra::charfun::{schur_poly_roots, CharFn, Variant};
use transport_spectra::model::SystemParams;
use transport_spectra::roots::{count_zeros, SearchWindow};
use transport_spectra::sim::{
    free_response_history, run, run_difference_recurrence, step_advdiff, ClosedLoopConfig,
    Controller, DelayLine, InitialCondition, SystemKind,
};

fn real_variants() -> impl Strategy<Value = (Variant, SystemParams)> {
    (0.01f64..0.5, -0.2f64..0.2, -2.0f64..2.0, -2.0f64..2.0).prop_flat_map(|(eta, eps, k1, k2)| {
        let viscous = SystemParams::unit().eta(eta).unwrap();
        prop::sample::select(vec![
            (Variant::PropInviscid, SystemParams::unit().kp(k1).unwrap()),
            (Variant::DynInviscid, SystemParams::unit().gains(k1, k2).unwrap()),
            (Variant::OpenLoopViscous, viscous),
            (Variant::DeadbeatViscous, viscous),
            (Variant::DeadbeatViscousPerturbed, viscous.eps(eps).unwrap()),
            (Variant::SimplerSystem, viscous),
        ])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn characteristic_functions_are_conjugate_symmetric(
        (variant, p) in real_variants(),
        re in -6.0f64..2.0,
        im in -80.0f64..80.0,
    ) {
        let f = CharFn::new(variant, p).unwrap();
        let s = Complex64::new(re, im);
        let a = f.value(s);
        let b = f.value(s.conj()).conj();
        let d = (a.ln_abs() - b.ln_abs()).abs();
        prop_assert!(d < 1e-9 || (a.is_zero() && b.is_zero()), "{variant:?} at {s}: {a:?} vs {b:?}");
        let phase = (a.arg() - b.arg()).rem_euclid(std::f64::consts::TAU);
        prop_assert!(phase.min(std::f64::consts::TAU - phase) < 1e-8);
    }

    #[test]
    fn schur_roots_satisfy_their_polynomial(k1 in -3.0f64..3.0, k2 in -3.0f64..3.0) {
        let (w1, w2, stable) = schur_poly_roots(k1, k2);
        for w in [w1, w2] {
            let r = w * w + 2.0 * k1 * w + (k2 - 1.0);
            prop_assert!(r.norm() < 1e-10 * (1.0 + w.norm_sqr()), "{w}: {r}");
        }
        prop_assert_eq!(stable, w1.norm() < 1.0 && w2.norm() < 1.0);
    }

    #[test]
    fn delay_line_returns_pushed_samples(xs in prop::collection::vec(-1e3f64..1e3, 1..200), lag in 0usize..50) {
        let dt = 0.01;
        let mut line = DelayLine::new(dt, 0.5);
        for &x in &xs {
            line.push(x);
        }
        let t_now = (xs.len() - 1) as f64 * dt;
        let want = xs.len().checked_sub(1 + lag).map(|i| xs[i]).unwrap_or(0.0);
        prop_assert_eq!(line.at(t_now - lag as f64 * dt), want);
    }

    #[test]
    fn advdiff_step_keeps_constants_and_bounds(
        c in -10.0f64..10.0,
        velocity in 0.5f64..2.0,
        eta in 0.0f64..0.5,
        bumps in prop::collection::vec(-1.0f64..1.0, 65),
    ) {
        let dx = 1.0 / 64.0;
        let dt = 0.5 * dx / velocity;
        let mut flat = vec![c; 65];
        step_advdiff(&mut flat, dt, velocity, eta).unwrap();
        prop_assert!(flat.iter().all(|v| (v - c).abs() < 1e-12 * (1.0 + c.abs())));
        // monotone upwind plus an M-matrix solve: no new extrema
        let mut u = bumps.clone();
        step_advdiff(&mut u, dt, velocity, eta).unwrap();
        let hi = bumps.iter().cloned().fold(f64::MIN, f64::max);
        let lo = bumps.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(u[1..].iter().all(|&v| v <= hi + 1e-12 && v >= lo - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulator_matches_recurrence_for_any_gains(
        k1 in -0.6f64..0.6,
        k2 in -1.5f64..1.5,
        seed in 0u64..1000,
    ) {
        let cells = 40;
        let initial = InitialCondition::Smooth { seed, modes: 3 };
        let cfg = ClosedLoopConfig::new(SystemKind::InviscidPair, SystemParams::unit())
            .with_controller(Controller::DynamicDelayed { k1, k2, tau: 1.0 })
            .with_initial(initial)
            .with_cells(cells)
            .with_t_end(8.0);
        let traj = run(&cfg).unwrap();
        let (a, b) = initial.profiles(cells);
        let rec = run_difference_recurrence(k1, k2, 1.0, traj.dt, &free_response_history(&a, &b), 8.0).unwrap();
        prop_assert_eq!(traj.output.len(), rec.output.len());
        for (x, y) in traj.output.iter().zip(&rec.output) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn zero_counts_add_over_a_split_window(eta in 0.02f64..0.3, cut in -2.9f64..-0.6) {
        let f = CharFn::new(Variant::DeadbeatViscous, SystemParams::unit().eta(eta).unwrap()).unwrap();
        let whole = SearchWindow::new(-3.0, 0.5, -20.0, 20.0).unwrap();
        let left = SearchWindow::new(-3.0, cut, -20.0, 20.0).unwrap();
        let right = SearchWindow::new(cut, 0.5, -20.0, 20.0).unwrap();
        let n = count_zeros(&f, &whole).unwrap();
        prop_assert!(n > 0);
        prop_assert_eq!(n, count_zeros(&f, &left).unwrap() + count_zeros(&f, &right).unwrap());
    }
}
