//! Stability statements built on windowed spectra: theorem checks,
//! conjecture probes and parameter sweeps.
//!
//! Every claim is scoped to the window it was computed on, which is
//! recorded in the report. Probes never report a violated claim, only
//! whether the abscissa falls in the probed band.

use std::f64::consts::LN_2;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfun::{schur_poly_roots, CharFn, Variant};
use crate::error::{ModelError, RootError};
use crate::model::SystemParams;
use crate::roots::{find_roots, RootOptions, SearchWindow, SpectralAbscissa};

/// Default slack on the `-ln 2` decay margin.
pub const DEFAULT_DELTA: f64 = 0.1;

/// `-ln 2`, the dead-beat decay margin.
pub const DEADBEAT_MARGIN: f64 = -LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Check,
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `σ̂ ≤ target`.
    AtMost { target: f64 },
    /// `lo ≤ σ̂ ≤ hi`.
    Within { lo: f64, hi: f64 },
    /// `σ̂ > bound`.
    Above { bound: f64 },
}

impl Criterion {
    pub fn holds(&self, sigma: f64) -> bool {
        match *self {
            Criterion::AtMost { target } => sigma <= target,
            Criterion::Within { lo, hi } => lo <= sigma && sigma <= hi,
            Criterion::Above { bound } => sigma > bound,
        }
    }

    /// Single number used in tables: the bound the check is measured
    /// against (the upper edge for bands).
    pub fn margin(&self) -> f64 {
        match *self {
            Criterion::AtMost { target } => target,
            Criterion::Within { hi, .. } => hi,
            Criterion::Above { bound } => bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub variant: Variant,
    pub params: SystemParams,
    pub window: SearchWindow,
    pub sigma_hat: SpectralAbscissa,
    pub criterion: Criterion,
    pub kind: ReportKind,
    pub satisfied: bool,
    pub roots_in_rhp: usize,
    pub root_count: u64,
    /// Root-finder failure at this point; the sweep carries on.
    pub error: Option<String>,
}

impl StabilityReport {
    pub fn margin_target(&self) -> f64 {
        self.criterion.margin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: String,
    pub etas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub reports: Vec<StabilityReport>,
    /// Direction of `σ̂` along the grid, over points with a finite value.
    pub sigma_trend: Trend,
}

impl SweepResult {
    fn new(label: &str, etas: Vec<f64>, epsilons: Vec<f64>, reports: Vec<StabilityReport>) -> Self {
        let sigma_trend = trend(reports.iter().map(|r| r.sigma_hat.sigma()));
        Self {
            label: label.to_string(),
            etas,
            epsilons,
            reports,
            sigma_trend,
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.reports.iter().all(|r| r.satisfied)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eta", "eps", "sigma_hat", "margin", "satisfied"])?;
        for r in &self.reports {
            let sigma = match r.sigma_hat {
                SpectralAbscissa::Finite { sigma, .. } => format!("{sigma:.12}"),
                SpectralAbscissa::NegInfinity => "-inf".to_string(),
            };
            w.write_record([
                r.params.eta.to_string(),
                r.params.eps.to_string(),
                sigma,
                format!("{:.12}", r.margin_target()),
                r.satisfied.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn trend<I: Iterator<Item = f64>>(values: I) -> Trend {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    let (mut up, mut down) = (false, false);
    for pair in v.windows(2) {
        if pair[1] > pair[0] {
            up = true;
        } else if pair[1] < pair[0] {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    }
}

/// Spectrum of one variant on one window, judged against a criterion.
pub fn evaluate(
    variant: Variant,
    params: SystemParams,
    window: &SearchWindow,
    criterion: Criterion,
    kind: ReportKind,
    opts: &RootOptions,
) -> Result<StabilityReport, ModelError> {
    let f = CharFn::new(variant, params)?;
    Ok(match find_roots(&f, window, opts) {
        Ok(spec) => {
            let sigma_hat = spec.abscissa();
            StabilityReport {
                variant,
                params,
                window: spec.window,
                sigma_hat,
                criterion,
                kind,
                satisfied: criterion.holds(sigma_hat.sigma()),
                roots_in_rhp: spec.roots.iter().filter(|r| r.s.re > 0.0).count(),
                root_count: spec.counted_total,
                error: None,
            }
        }
        Err(e) => failed_report(variant, params, window, criterion, kind, e),
    })
}

fn failed_report(
    variant: Variant,
    params: SystemParams,
    window: &SearchWindow,
    criterion: Criterion,
    kind: ReportKind,
    err: RootError,
) -> StabilityReport {
    StabilityReport {
        variant,
        params,
        window: *window,
        sigma_hat: SpectralAbscissa::NegInfinity,
        criterion,
        kind,
        satisfied: false,
        roots_in_rhp: 0,
        root_count: 0,
        error: Some(err.to_string()),
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Runs `points` in parallel on a pool sized by `opts.threads`, keeping
/// grid order.
fn sweep_points(
    points: Vec<(Variant, SystemParams)>,
    window: &SearchWindow,
    criterion: Criterion,
    kind: ReportKind,
    opts: &RootOptions,
) -> Result<Vec<StabilityReport>, ModelError> {
    let inner = RootOptions {
        threads: None,
        ..*opts
    };
    let job = || {
        points
            .into_par_iter()
            .map(|(v, p)| evaluate(v, p, window, criterion, kind, &inner))
            .collect::<Result<Vec<_>, _>>()
    };
    match opts.threads {
        None => job(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(job),
            Err(_) => job(),
        },
    }
}

fn viscous_points(variant: Variant, etas: &[f64]) -> Result<Vec<(Variant, SystemParams)>, ModelError> {
    etas.iter()
        .map(|&eta| Ok((variant, SystemParams::unit().eta(eta)?)))
        .collect()
}

/// `σ̂ ≤ -ln 2 + δ` for the dead-beat viscous loop at each `η`.
pub fn theorem1_check(
    etas: &[f64],
    delta: f64,
    window: &SearchWindow,
    opts: &RootOptions,
) -> Result<SweepResult, ModelError> {
    let etas = sorted(etas);
    let points = viscous_points(Variant::DeadbeatViscous, &etas)?;
    let criterion = Criterion::AtMost {
        target: DEADBEAT_MARGIN + delta,
    };
    let reports = sweep_points(points, window, criterion, ReportKind::Check, opts)?;
    Ok(SweepResult::new("theorem1", etas, vec![0.0], reports))
}

/// Whether `σ̂ ∈ [-ln 2 - δ, -ln 2 + δ]`, i.e. whether the `ln 2` decay
/// margin looks sharp.
pub fn conjecture1_probe(
    etas: &[f64],
    delta: f64,
    window: &SearchWindow,
    opts: &RootOptions,
) -> Result<SweepResult, ModelError> {
    conjecture1_band(etas, delta, delta, window, opts)
}

/// Band probe with separate lower and upper slack.
pub fn conjecture1_band(
    etas: &[f64],
    below: f64,
    above: f64,
    window: &SearchWindow,
    opts: &RootOptions,
) -> Result<SweepResult, ModelError> {
    let etas = sorted(etas);
    let points = viscous_points(Variant::DeadbeatViscous, &etas)?;
    let criterion = Criterion::Within {
        lo: DEADBEAT_MARGIN - below,
        hi: DEADBEAT_MARGIN + above,
    };
    let reports = sweep_points(points, window, criterion, ReportKind::Probe, opts)?;
    Ok(SweepResult::new("conjecture1", etas, vec![0.0], reports))
}

/// `σ̂ ≤ -ln 2 + 2δ` for the velocity-perturbed loop at fixed `η` and each
/// `ε`. With `η = 0` the inviscid perturbed loop is used instead.
pub fn theorem2_sweep(
    eta: f64,
    epsilons: &[f64],
    delta: f64,
    window: &SearchWindow,
    opts: &RootOptions,
) -> Result<SweepResult, ModelError> {
    let epsilons = sorted(epsilons);
    let variant = if eta > 0.0 {
        Variant::DeadbeatViscousPerturbed
    } else {
        Variant::DeadbeatInviscidPerturbed
    };
    let base = if eta > 0.0 {
        SystemParams::unit().eta(eta)?
    } else {
        SystemParams::unit()
    };
    let points = epsilons
        .iter()
        .map(|&eps| Ok((variant, base.eps(eps)?)))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let criterion = Criterion::AtMost {
        target: DEADBEAT_MARGIN + 2.0 * delta,
    };
    let reports = sweep_points(points, window, criterion, ReportKind::Check, opts)?;
    Ok(SweepResult::new("theorem2", vec![eta], epsilons, reports))
}

/// Whether `σ̂ > -bound` for the one-viscous-channel loop at each `η`.
pub fn conjecture3_probe(
    etas: &[f64],
    bound: f64,
    window: &SearchWindow,
    opts: &RootOptions,
) -> Result<SweepResult, ModelError> {
    let etas = sorted(etas);
    let points = viscous_points(Variant::SimplerSystem, &etas)?;
    let criterion = Criterion::Above { bound: -bound };
    let reports = sweep_points(points, window, criterion, ReportKind::Probe, opts)?;
    Ok(SweepResult::new("conjecture3", etas, vec![0.0], reports))
}

/// Exponential rate `ln(max |w|)/τ` of the sampled recurrence
/// `Y(t) + 2k₁Y(t-τ) + (k₂-1)Y(t-2τ) = 0`; `-∞` when both roots vanish.
pub fn difference_recurrence_rate(k1: f64, k2: f64, tau: f64) -> f64 {
    let (w1, w2, _) = schur_poly_roots(k1, k2);
    let m = w1.norm().max(w2.norm());
    if m == 0.0 {
        f64::NEG_INFINITY
    } else {
        m.ln() / tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_window() -> SearchWindow {
        SearchWindow::new(-3.0, 1.0, -20.0, 20.0).unwrap()
    }

    #[test]
    fn criterion_semantics() {
        assert!(Criterion::AtMost { target: 0.0 }.holds(0.0));
        assert!(!Criterion::Above { bound: 0.0 }.holds(0.0));
        assert!(Criterion::Within { lo: -1.0, hi: -1.0 }.holds(-1.0));
        assert!(!Criterion::Within { lo: -1.0, hi: -1.0 }.holds(-1.0 + 1e-15));
        assert!(Criterion::AtMost { target: 0.0 }.holds(f64::NEG_INFINITY));
        assert!(!Criterion::Above { bound: -10.0 }.holds(f64::NEG_INFINITY));
    }

    #[test]
    fn recurrence_rates() {
        assert_eq!(difference_recurrence_rate(0.0, 1.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(difference_recurrence_rate(0.0, 0.0, 1.0), 0.0);
        assert!(difference_recurrence_rate(0.5, 1.0, 1.0).abs() < 1e-15);
        assert!((difference_recurrence_rate(0.25, 1.0, 1.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((difference_recurrence_rate(0.25, 1.0, 2.0) - 0.5f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn theorem1_single_point() {
        let r = theorem1_check(&[0.1], 0.1, &quick_window(), &RootOptions::default()).unwrap();
        assert_eq!(r.reports.len(), 1);
        let rep = &r.reports[0];
        assert!(rep.satisfied, "{rep:?}");
        assert_eq!(rep.kind, ReportKind::Check);
        assert_eq!(rep.roots_in_rhp, 0);
        assert!((rep.margin_target() - (0.1 - LN_2)).abs() < 1e-15);
        let loose = theorem1_check(&[0.1], 10.0, &quick_window(), &RootOptions::default()).unwrap();
        assert!(loose.all_satisfied());
    }

    #[test]
    fn zero_eps_sweep_matches_theorem1() {
        let w = quick_window();
        let opts = RootOptions::default();
        let t1 = theorem1_check(&[0.1], 0.1, &w, &opts).unwrap();
        let t2 = theorem2_sweep(0.1, &[0.0], 0.1, &w, &opts).unwrap();
        let a = t1.reports[0].sigma_hat.sigma();
        let b = t2.reports[0].sigma_hat.sigma();
        assert!((a - b).abs() <= 1e-10, "{a} {b}");
    }

    #[test]
    fn inviscid_perturbation_destabilizes() {
        let r = theorem2_sweep(0.0, &[0.1], 0.1, &SearchWindow::perturbed(), &RootOptions::default())
            .unwrap();
        let rep = &r.reports[0];
        assert!(rep.sigma_hat.sigma() > 0.0);
        assert!(rep.roots_in_rhp > 0);
        assert!(!rep.satisfied);
    }

    #[test]
    fn degenerate_band_is_unsatisfiable() {
        let r = conjecture1_probe(&[0.1], 0.0, &quick_window(), &RootOptions::default()).unwrap();
        assert!(!r.reports[0].satisfied);
        assert_eq!(r.reports[0].kind, ReportKind::Probe);
    }

    #[test]
    fn grid_is_sorted_and_csv_has_header() {
        let r = conjecture3_probe(&[0.1, 0.05], 10.0, &SearchWindow::simpler(), &RootOptions::default())
            .unwrap();
        assert_eq!(r.etas, vec![0.05, 0.1]);
        assert!(r.all_satisfied());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("eta,eps,sigma_hat,margin,satisfied\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn invalid_eta_is_rejected() {
        assert!(theorem1_check(&[0.0], 0.1, &quick_window(), &RootOptions::default()).is_err());
    }

    #[test]
    fn trends() {
        assert_eq!(trend([1.0, 2.0, 3.0].into_iter()), Trend::Increasing);
        assert_eq!(trend([3.0, f64::NEG_INFINITY, 1.0].into_iter()), Trend::Decreasing);
        assert_eq!(trend([1.0, 3.0, 2.0].into_iter()), Trend::Mixed);
        assert_eq!(trend([1.0].into_iter()), Trend::Constant);
    }
}
