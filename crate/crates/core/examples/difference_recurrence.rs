//! The sampled inviscid loop is a two-step difference equation; its growth
//! rate follows from the roots of w² + 2k₁w + k₂ − 1.

use transport_spectra::analysis::difference_recurrence_rate;
use transport_spectra::charfun::schur_poly_roots;
use transport_spectra::sim::{estimate_decay_rate, run_difference_recurrence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tau = 1.0;
    let dt = 0.02;
    // one smooth pulse per delay keeps the envelope clean
    let history: Vec<f64> = (0..100)
        .map(|i| (-((i as f64 - 25.0) / 8.0).powi(2)).exp())
        .collect();

    for (k1, k2) in [(0.25, 1.0), (0.1, 0.5), (0.0, 0.3), (0.6, 0.2)] {
        let (w1, w2, stable) = schur_poly_roots(k1, k2);
        let traj = run_difference_recurrence(k1, k2, tau, dt, &history, 40.0)?;
        let fit = estimate_decay_rate(&traj, 6.0)?;
        println!(
            "k = ({k1}, {k2}): roots {w1:.4}, {w2:.4} (stable {stable}), predicted {:.6}, fitted {:.6}",
            difference_recurrence_rate(k1, k2, tau),
            fit.rate
        );
    }
    Ok(())
}
