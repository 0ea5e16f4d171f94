//! Delay-robustness margin of a boundary coupling matrix.
//!
//! * `ρ₂(K) = inf_D ‖D K D⁻¹‖₂` over positive diagonal `D`,
//! * `ρ̄(K) = max_θ ρ(diag(e^{-iθ}) K)`.
//!
//! The two coincide for the matrices of interest. `log ‖e^X K e^{-X}‖₂` is
//! convex in the diagonal `X`, so the scaling search cannot get trapped, but
//! it is not smooth where the top singular value is double. Coordinate
//! descent stalls on such ridges, hence the simplex polish afterwards.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MarginError;
use crate::linalg::{char_poly, spectral_norm, spectral_radius, symmetric_eigenvalues};

/// Bound on `|log dᵢ|` for the scaling search.
pub const LOG_SCALE_CAP: f64 = 30.0;

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const PHASE_GRID: usize = 64;
const PHASE_BUDGET: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl BoundaryMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MarginError> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MarginError::NotSquare {
                    rows: n,
                    row: i,
                    len: r.len(),
                });
            }
        }
        Self::from_row_major(n, rows.into_iter().flatten().collect())
    }

    pub fn from_row_major(n: usize, entries: Vec<f64>) -> Result<Self, MarginError> {
        if !(2..=8).contains(&n) {
            return Err(MarginError::Dimension(n));
        }
        if entries.len() != n * n {
            return Err(MarginError::NotSquare {
                rows: n,
                row: 0,
                len: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(MarginError::NonFinite);
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Result<Self, MarginError> {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = 1.0;
        }
        Self::from_row_major(n, e)
    }

    /// Coupling of the two-channel loop under `U = -2k₁Y(t) - k₂Y(t-τ)`,
    /// with the delayed output realized as a third transport channel.
    pub fn delayed_feedback(k1: f64, k2: f64) -> Result<Self, MarginError> {
        Self::new(vec![
            vec![-2.0 * k1, 1.0, -k2],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
    }

    /// `((1, -1), (1, -1))`, the one-viscous-channel loop.
    pub fn simpler() -> Self {
        Self::new(vec![vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap()
    }

    /// `identityN`, `simpler`, or rows separated by `;` with comma-separated
    /// entries.
    pub fn parse(text: &str) -> Result<Self, MarginError> {
        let t = text.trim();
        if let Some(n) = t.strip_prefix("identity") {
            let n: usize = n.parse().map_err(|_| MarginError::Dimension(0))?;
            return Self::identity(n);
        }
        if t == "simpler" {
            return Ok(Self::simpler());
        }
        let rows: Result<Vec<Vec<f64>>, _> = t
            .split(';')
            .map(|r| r.split(',').map(|x| x.trim().parse::<f64>()).collect())
            .collect();
        Self::new(rows.map_err(|_| MarginError::NonFinite)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `D K D⁻¹` for `D = diag(d)`.
    pub fn scaled(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .map(|k| d[k / n] * self.entries[k] / d[k % n])
            .collect()
    }

    /// `diag(e^{-iθ}) K`.
    pub fn rotated(&self, theta: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n * n)
            .map(|k| Complex64::from_polar(1.0, -theta[k / n]) * self.entries[k])
            .collect()
    }
}

/// `|k₁| + √(1 + k₁² + |k₂|)`.
pub fn rho2_closed_form(k1: f64, k2: f64) -> f64 {
    k1.abs() + (1.0 + k1 * k1 + k2.abs()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rho2 {
    pub value: f64,
    /// Optimal diagonal, normalized so that `d₁ = 1`.
    pub scaling: Vec<f64>,
    /// Some `|log dᵢ|` reached the cap: the infimum is not attained.
    pub degenerate: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoBar {
    pub value: f64,
    /// Maximizing phases, `θ₁ = 0`.
    pub phases: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginResult {
    pub n: usize,
    pub rho2: f64,
    pub rho_bar: f64,
    pub optimal_scaling: Vec<f64>,
    pub optimal_phases: Vec<f64>,
    pub degenerate: bool,
    pub converged: bool,
    /// Agreement required between `rho2` and `rho_bar`.
    pub tolerance: f64,
    pub consistent: bool,
    /// Closed form when the matrix comes from feedback gains.
    pub closed_form: Option<f64>,
}

impl MarginResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

fn log_scaled_norm(k: &BoundaryMatrix, x: &[f64]) -> f64 {
    let mut d = Vec::with_capacity(k.n);
    d.push(1.0);
    d.extend(x.iter().map(|v| v.clamp(-LOG_SCALE_CAP, LOG_SCALE_CAP).exp()));
    spectral_norm(&k.scaled(&d), k.n)
}

/// Minimizes a unimodal function on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Nelder–Mead minimization with restarts; returns the best point, value
/// and whether the simplex collapsed below `tol`.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    tol: f64,
    max_evals: usize,
) -> (Vec<f64>, f64, bool) {
    let dim = start.len();
    let mut best = start.to_vec();
    let mut best_val = f(&best);
    let mut evals = 1;
    let mut converged = false;
    let mut scale = step;
    for _restart in 0..6 {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((best.clone(), best_val));
        for i in 0..dim {
            let mut p = best.clone();
            p[i] += scale;
            let v = f(&p);
            evals += 1;
            simplex.push((p, v));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let size = simplex
                .iter()
                .skip(1)
                .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < tol || evals >= max_evals {
                converged = size < tol;
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|i| simplex[..dim].iter().map(|(p, _)| p[i]).sum::<f64>() / dim as f64)
                .collect();
            let worst = simplex[dim].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(1.0);
            let fr = f(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = f(&xe);
                evals += 1;
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let x = along(0.5);
                    let v = f(&x);
                    (x, v)
                } else {
                    let x = along(-0.5);
                    let v = f(&x);
                    (x, v)
                };
                evals += 1;
                if fc < worst.1.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    let b0 = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let p: Vec<f64> = item.0.iter().zip(&b0).map(|(x, b)| b + 0.5 * (x - b)).collect();
                        let v = f(&p);
                        *item = (p, v);
                        evals += 1;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best_val;
        if improved {
            best = simplex[0].0.clone();
            best_val = simplex[0].1;
        }
        if (!improved && converged) || evals >= max_evals {
            break;
        }
        scale = (scale * 0.1).max(tol * 10.0);
    }
    (best, best_val, converged)
}

fn coordinate_descent(f: &dyn Fn(&[f64]) -> f64, start: &[f64], lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut val = f(&x);
    for _ in 0..200 {
        let before = val;
        for i in 0..x.len() {
            let (xi, v) = golden_min(lo, hi, 1e-11, |t| {
                let mut y = x.clone();
                y[i] = t;
                f(&y)
            });
            if v <= val {
                x[i] = xi;
                val = v;
            }
        }
        if before - val <= 1e-15 * before.abs().max(1.0) {
            break;
        }
    }
    (x, val)
}

/// `inf_D ‖D K D⁻¹‖₂`.
pub fn rho2_numeric(k: &BoundaryMatrix) -> Result<Rho2, MarginError> {
    let dim = k.n - 1;
    let f = |x: &[f64]| log_scaled_norm(k, x);
    // convex objective: a handful of starts guards against flat plateaus
    let mut starts = vec![vec![0.0; dim]];
    for i in 0..dim {
        for s in [-4.0, 4.0] {
            let mut p = vec![0.0; dim];
            p[i] = s;
            starts.push(p);
        }
    }
    starts.sort_by(|a, b| f(a).total_cmp(&f(b)));
    starts.truncate(3);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let (x, v) = coordinate_descent(&f, s, -LOG_SCALE_CAP, LOG_SCALE_CAP);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((x, v));
        }
    }
    let (x, v) = best.expect("at least one start");
    let clamped = |y: &[f64]| {
        let c: Vec<f64> = y.iter().map(|t| t.clamp(-LOG_SCALE_CAP, LOG_SCALE_CAP)).collect();
        f(&c)
    };
    let (xp, vp, converged) = nelder_mead(&clamped, &x, 0.05, 1e-10, 20_000);
    let (x, value) = if vp < v { (xp, vp) } else { (x, v) };
    let mut x: Vec<f64> = x.iter().map(|t| t.clamp(-LOG_SCALE_CAP, LOG_SCALE_CAP)).collect();
    // flat directions (e.g. diagonal K) leave the optimizer anywhere; reset
    // a coordinate to 1 when that costs nothing beyond rounding. Asymptotic
    // optima still gain a little at the cap and stay there.
    let slack = value * (1.0 + 1e-14);
    for i in 0..dim {
        let mut y = x.clone();
        y[i] = 0.0;
        if f(&y) <= slack {
            x = y;
        }
    }
    let degenerate = x.iter().any(|t| t.abs() >= LOG_SCALE_CAP - 1e-3);
    let mut scaling = vec![1.0];
    scaling.extend(x.iter().map(|t| t.exp()));
    if !value.is_finite() {
        return Err(MarginError::NonFinite);
    }
    Ok(Rho2 {
        value,
        scaling,
        degenerate,
        converged,
    })
}

/// `max_θ ρ(diag(e^{-iθ}) K)` with `θ₁ = 0`.
pub fn rho_bar_numeric(k: &BoundaryMatrix) -> Result<RhoBar, MarginError> {
    let n = k.n;
    let dim = n - 1;
    let f = |th: &[f64]| {
        let mut theta = Vec::with_capacity(n);
        theta.push(0.0);
        theta.extend_from_slice(th);
        spectral_radius(&k.rotated(&theta), n)
    };
    let per_axis = if dim <= 2 {
        PHASE_GRID
    } else {
        ((PHASE_BUDGET as f64).powf(1.0 / dim as f64).floor() as usize).clamp(4, PHASE_GRID)
    };
    let total = per_axis.pow(dim as u32);
    let h = std::f64::consts::TAU / per_axis as f64;
    let point = |idx: usize| -> Vec<f64> {
        let mut r = idx;
        (0..dim)
            .map(|_| {
                let v = (r % per_axis) as f64 * h;
                r /= per_axis;
                v
            })
            .collect()
    };
    let values: Vec<f64> = (0..total).into_par_iter().map(|i| f(&point(i))).collect();
    // first index wins ties, which is the lexicographically smallest θ
    let mut best_idx = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best_idx] {
            best_idx = i;
        }
    }
    let mut theta = point(best_idx);
    let mut val = values[best_idx];
    // golden refinement inside one grid cell around the best point
    for _ in 0..50 {
        let before = val;
        for i in 0..dim {
            let c = theta[i];
            let (t, v) = golden_min(c - h, c + h, 1e-12, |t| {
                let mut y = theta.clone();
                y[i] = t;
                -f(&y)
            });
            if -v >= val {
                theta[i] = t;
                val = -v;
            }
        }
        if val - before <= 1e-15 * val.max(1.0) {
            break;
        }
    }
    let neg = |y: &[f64]| -f(y);
    let (tp, vp, converged) = nelder_mead(&neg, &theta, 0.25 * h, 1e-10, 20_000);
    if -vp > val {
        theta = tp;
        val = -vp;
    }
    let theta: Vec<f64> = theta.iter().map(|t| t.rem_euclid(std::f64::consts::TAU)).collect();
    let mut phases = vec![0.0];
    phases.extend(theta);
    if !val.is_finite() {
        return Err(MarginError::NonFinite);
    }
    Ok(RhoBar {
        value: val,
        phases,
        converged,
    })
}

/// Both margins plus their agreement.
pub fn margin(k: &BoundaryMatrix) -> Result<MarginResult, MarginError> {
    let r2 = rho2_numeric(k)?;
    let rb = rho_bar_numeric(k)?;
    let tolerance = 1e-4;
    Ok(MarginResult {
        n: k.n,
        rho2: r2.value,
        rho_bar: rb.value,
        consistent: r2.value >= rb.value - tolerance,
        optimal_scaling: r2.scaling,
        optimal_phases: rb.phases,
        degenerate: r2.degenerate,
        converged: r2.converged && rb.converged,
        tolerance,
        closed_form: None,
    })
}

/// Margin of the delayed-feedback coupling, with the closed form attached.
pub fn margin_for_gains(k1: f64, k2: f64) -> Result<MarginResult, MarginError> {
    let mut m = margin(&BoundaryMatrix::delayed_feedback(k1, k2)?)?;
    m.closed_form = Some(rho2_closed_form(k1, k2));
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    pub beta: f64,
    pub gamma: f64,
    pub lambda_max: f64,
}

/// `M = (DKD⁻¹)ᵀ(DKD⁻¹)` for the delayed-feedback coupling with
/// `D = diag(1, θ₂, θ₃)`.
pub fn gram_m(k1: f64, k2: f64, t2: f64, t3: f64) -> [f64; 9] {
    [
        4.0 * k1 * k1 + t2 * t2 + t3 * t3,
        -2.0 * k1 / t2,
        2.0 * k1 * k2 / t3,
        -2.0 * k1 / t2,
        1.0 / (t2 * t2),
        -k2 / (t2 * t3),
        2.0 * k1 * k2 / t3,
        -k2 / (t2 * t3),
        k2 * k2 / (t3 * t3),
    ]
}

/// `β`, `γ` of `det(λI - M) = λ(λ² - βλ + γ)` and the top eigenvalue
/// `(β + √(β² - 4γ))/2`, cross-checked against an explicit eigen-solve.
pub fn eigen_check_m(k1: f64, k2: f64, t2: f64, t3: f64) -> Result<EigenCheck, MarginError> {
    if !(t2 > 0.0 && t3 > 0.0) {
        return Err(MarginError::Consistency(format!(
            "scalings must be positive (θ₂ = {t2}, θ₃ = {t3})"
        )));
    }
    let beta = 4.0 * k1 * k1 + (t2 * t2 + 1.0 / (t2 * t2)) + (t3 * t3 + k2 * k2 / (t3 * t3));
    let gamma = 1.0 + t3 * t3 / (t2 * t2) + k2 * k2 + k2 * k2 * t2 * t2 / (t3 * t3);
    let disc = beta * beta - 4.0 * gamma;
    if disc < -1e-10 * beta * beta.max(1.0) {
        return Err(MarginError::Consistency(format!(
            "negative discriminant {disc} for a symmetric matrix"
        )));
    }
    let lambda_max = 0.5 * (beta + disc.max(0.0).sqrt());
    let m = gram_m(k1, k2, t2, t3);
    let eig = symmetric_eigenvalues(&m, 3);
    let top = eig[2];
    if (top - lambda_max).abs() > 1e-10 * lambda_max.max(1.0) {
        return Err(MarginError::Consistency(format!(
            "explicit top eigenvalue {top} differs from {lambda_max}"
        )));
    }
    let cm: Vec<Complex64> = m.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let p = char_poly(&cm, 3);
    let expect = [0.0, gamma, -beta, 1.0];
    for (c, e) in p.iter().zip(expect) {
        if (c.re - e).abs() > 1e-10 * beta.max(1.0).powi(3) || c.im != 0.0 {
            return Err(MarginError::Consistency(format!(
                "characteristic polynomial coefficient {c} differs from {e}"
            )));
        }
    }
    Ok(EigenCheck {
        beta,
        gamma,
        lambda_max,
    })
}

/// Table over a `(k₁, k₂)` grid, one row per pair.
pub fn write_grid_csv<W: Write>(rows: &[(f64, f64, MarginResult)], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k1", "k2", "rho2", "rho_bar", "closed_form", "degenerate"])?;
    for (k1, k2, m) in rows {
        w.write_record([
            k1.to_string(),
            k2.to_string(),
            format!("{:.12}", m.rho2),
            format!("{:.12}", m.rho_bar),
            m.closed_form.map(|c| format!("{c:.12}")).unwrap_or_default(),
            m.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
