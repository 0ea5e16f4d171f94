//! Empirical decay rates and the exact delay-difference recurrence.

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::SimError;

/// Integer step counts within this distance are taken as exact.
const DIVIDES: f64 = 1e-9;
/// Controller delays that must follow `t_skip` in a trajectory.
const MIN_DELAYS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `ln |Y|` against `t`.
    pub rate: f64,
    /// Coefficient of determination of the line fit.
    pub r2: f64,
    pub points: usize,
}

/// Peak-envelope decay rate of `traj.output` over `[t_skip, t_end]`, one
/// envelope point per loop round trip `2τ`.
pub fn estimate_decay_rate(traj: &Trajectory, t_skip: f64) -> Result<DecayFit, SimError> {
    if traj.t_end() < t_skip + MIN_DELAYS * traj.delay {
        return Err(SimError::Config(format!(
            "trajectory ends at {} but the fit needs t ≥ {}",
            traj.t_end(),
            t_skip + MIN_DELAYS * traj.delay
        )));
    }
    decay_fit(&traj.times, &traj.output, t_skip, 2.0 * traj.delay)
}

/// Least-squares slope of the log of the local maxima of `|values|`.
///
/// Each maximum is refined by a parabola through the neighbouring log
/// magnitudes, which removes most of the sampling jitter. With a positive
/// `bin`, only the largest maximum in each slot `[t_skip + k·bin, …)` is
/// kept, so ripples from faster modes do not enter the envelope.
pub fn decay_fit(
    times: &[f64],
    values: &[f64],
    t_skip: f64,
    bin: f64,
) -> Result<DecayFit, SimError> {
    assert_eq!(times.len(), values.len());
    let mag: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut pts = Vec::new();
    for i in 1..mag.len().saturating_sub(1) {
        if times[i] < t_skip || mag[i] == 0.0 || !mag[i].is_finite() {
            continue;
        }
        if !(mag[i] >= mag[i - 1] && mag[i] > mag[i + 1]) {
            continue;
        }
        let mid = mag[i].ln();
        let mut t = times[i];
        let mut l = mid;
        if mag[i - 1] > 0.0 && mag[i + 1] > 0.0 {
            let (lo, hi) = (mag[i - 1].ln(), mag[i + 1].ln());
            let curv = lo - 2.0 * mid + hi;
            if curv < 0.0 {
                let off = 0.5 * (lo - hi) / curv;
                let h = 0.5 * (times[i + 1] - times[i - 1]);
                t += off * h;
                l = mid - 0.25 * (lo - hi) * off;
            }
        }
        pts.push((t, l));
    }
    if bin > 0.0 {
        let mut kept: Vec<(i64, (f64, f64))> = Vec::new();
        for p in pts {
            let slot = ((p.0 - t_skip) / bin).floor() as i64;
            match kept.last_mut() {
                Some((s, best)) if *s == slot => {
                    if p.1 > best.1 {
                        *best = p;
                    }
                }
                _ => kept.push((slot, p)),
            }
        }
        pts = kept.into_iter().map(|(_, p)| p).collect();
    }
    if pts.len() < 4 {
        return Err(SimError::InsufficientData(pts.len()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let stl = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum::<f64>();
    let sll = pts.iter().map(|p| (p.1 - ml).powi(2)).sum::<f64>();
    if stt == 0.0 {
        return Err(SimError::InsufficientData(pts.len()));
    }
    let rate = stl / stt;
    let r2 = if sll == 0.0 { 1.0 } else { stl * stl / (stt * sll) };
    Ok(DecayFit {
        rate,
        r2,
        points: pts.len(),
    })
}

/// Outputs of the uncontrolled ring on its first two laps, read off the
/// initial profiles at Courant number 1: `h_n = y₁[N−n]` for `n < N`,
/// `h_n = y₂[2N−n]` for `N ≤ n < 2N`.
pub fn free_response_history(first: &[f64], second: &[f64]) -> Vec<f64> {
    let n = first.len() - 1;
    assert_eq!(second.len(), n + 1);
    (0..2 * n)
        .map(|k| if k < n { first[n - k] } else { second[2 * n - k] })
        .collect()
}

/// Iterate `Y(t) = Y(t − 2τ) + U(t − τ)`, `U = −2k₁Y − k₂Y(t − τ)`, on the
/// grid `t = nΔt`, starting from the free response `history` on `[0, 2τ)`
/// (missing samples are zero).
pub fn run_difference_recurrence(
    k1: f64,
    k2: f64,
    tau: f64,
    dt: f64,
    history: &[f64],
    t_end: f64,
) -> Result<Trajectory, SimError> {
    if !(tau > 0.0 && dt > 0.0 && tau.is_finite() && dt.is_finite()) {
        return Err(SimError::Config("tau and dt must be positive".into()));
    }
    let ratio = tau / dt;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > DIVIDES {
        return Err(SimError::Config(format!("dt = {dt} does not divide tau = {tau}")));
    }
    let m = m as usize;
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut y = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    let mut window = 0.0;
    for i in 0..=steps {
        let base = if i < 2 * m {
            history.get(i).copied().unwrap_or(0.0)
        } else {
            y[i - 2 * m]
        };
        let yi = if i >= m { base + u[i - m] } else { base };
        let yd = if i >= m { y[i - m] } else { 0.0 };
        u.push(-2.0 * k1 * yi - k2 * yd);
        y.push(yi);
        // the recurrence state is Y on the last 2τ
        window += yi * yi;
        if i >= 2 * m {
            window -= y[i - 2 * m] * y[i - 2 * m];
        }
        energy.push(window.max(0.0) * dt);
    }
    Ok(Trajectory {
        times: (0..=steps).map(|i| i as f64 * dt).collect(),
        output: y,
        energy,
        snapshots: Vec::new(),
        dt,
        delay: tau,
        aborted_at: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_damped_cosine() {
        let dt = 1e-3;
        let times: Vec<f64> = (0..20_000).map(|i| i as f64 * dt).collect();
        let y: Vec<f64> = times.iter().map(|t| (-0.7 * t).exp() * (20.0 * t).cos()).collect();
        let fit = decay_fit(&times, &y, 1.0, 0.0).unwrap();
        assert!((fit.rate + 0.7).abs() < 0.01, "{fit:?}");
        assert!(fit.r2 > 0.999);
    }

    #[test]
    fn zero_signal_is_insufficient() {
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let y = vec![0.0; 100];
        assert!(matches!(decay_fit(&times, &y, 0.0, 1.0), Err(SimError::InsufficientData(0))));
    }

    #[test]
    fn deadbeat_recurrence_vanishes_after_two_delays() {
        let h: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin() + 1.5).collect();
        let traj = run_difference_recurrence(0.0, 1.0, 1.0, 0.1, &h, 10.0).unwrap();
        // Y vanishes once both the free response and its echo are flushed
        assert!(traj.output[..20].iter().any(|&v| v != 0.0));
        assert!(traj.output[30..].iter().all(|&v| v == 0.0));
        assert!(matches!(estimate_decay_rate(&traj, 4.0), Err(SimError::InsufficientData(_))));
    }

    #[test]
    fn open_recurrence_is_periodic() {
        let h: Vec<f64> = (0..16).map(|i| (i as f64).cos()).collect();
        let traj = run_difference_recurrence(0.0, 0.0, 1.0, 0.125, &h, 20.0).unwrap();
        for i in 16..traj.len() {
            assert_eq!(traj.output[i], traj.output[i - 16]);
        }
    }

    #[test]
    fn quarter_gain_rate_is_ln_half() {
        // characteristic polynomial w² + 0.5w: the nonzero root −1/2 gives
        // |Y| halving every τ; a single peak per delay keeps the envelope
        // exactly geometric
        let h: Vec<f64> = (0..20).map(|i| (-((i as f64 - 10.0) / 4.0).powi(2)).exp()).collect();
        let traj = run_difference_recurrence(0.25, 1.0, 1.0, 0.05, &h, 30.0).unwrap();
        let fit = estimate_decay_rate(&traj, 4.0).unwrap();
        assert!((fit.rate - 0.5f64.ln()).abs() < 1e-6, "{fit:?}");
        let per_delay = traj.output[200] / traj.output[180];
        assert!((per_delay + 0.5).abs() < 1e-12);
    }

    #[test]
    fn step_must_divide_delay() {
        assert!(run_difference_recurrence(0.0, 1.0, 1.0, 0.3, &[], 5.0).is_err());
        assert!(run_difference_recurrence(0.0, 1.0, 1.0, 0.1, &[], 5.0).is_ok());
    }

    #[test]
    fn history_reads_both_channels() {
        let a = [9.0, 1.0, 2.0, 3.0];
        let b = [8.0, 4.0, 5.0, 6.0];
        assert_eq!(free_response_history(&a, &b), vec![3.0, 2.0, 1.0, 6.0, 5.0, 4.0]);
    }
}
