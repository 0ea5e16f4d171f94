//! Zero counting and location for entire residuals on rectangles.
//!
//! Counting uses the argument principle: the phase of `f` is tracked along
//! the boundary and each segment is bisected until its phase increment is
//! below π/2 and its log-magnitude change is below 2, so the unwrapped total
//! is an exact multiple of 2π. Location subdivides cells with nonzero count
//! and polishes each isolated zero with Newton's method using a central
//! difference derivative.
//!
//! Cells are independent and processed on a rayon pool; results are merged
//! in a fixed order and sorted by `(Re, Im)`, so the output does not depend
//! on the number of worker threads.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfun::{CharFn, Residual};
use crate::error::RootError;

/// Anything that can be evaluated as a residual with a term scale.
pub trait Residue: Sync {
    fn residual(&self, s: Complex64) -> Residual;
}

impl Residue for CharFn {
    fn residual(&self, s: Complex64) -> Residual {
        self.eval(s)
    }
}

impl<F> Residue for F
where
    F: Fn(Complex64) -> Residual + Sync,
{
    fn residual(&self, s: Complex64) -> Residual {
        self(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Bisection depth allowed on a boundary segment before a zero on the
    /// boundary is suspected.
    pub max_depth: u32,
    /// Minimum number of boundary samples of the outer contour.
    pub boundary_samples: usize,
}

impl SearchWindow {
    pub const DEFAULT_DEPTH: u32 = 24;
    pub const DEFAULT_SAMPLES: usize = 64;

    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, RootError> {
        let w = Self {
            re_min,
            re_max,
            im_min,
            im_max,
            max_depth: Self::DEFAULT_DEPTH,
            boundary_samples: Self::DEFAULT_SAMPLES,
        };
        w.validate()?;
        Ok(w)
    }

    /// `[-8, 1] × [-60, 60]`, the dead-beat viscous spectra.
    pub fn deadbeat() -> Self {
        Self::new(-8.0, 1.0, -60.0, 60.0).unwrap()
    }

    /// `[-3, 0.5] × [-40, 40]`, close-up of the dead-beat abscissa.
    pub fn deadbeat_closeup() -> Self {
        Self::new(-3.0, 0.5, -40.0, 40.0).unwrap()
    }

    /// `[-2, 1] × [-40, 40]`, velocity-perturbed loops.
    pub fn perturbed() -> Self {
        Self::new(-2.0, 1.0, -40.0, 40.0).unwrap()
    }

    /// `[-1.5, 0.5] × [-40, 40]`, the one-viscous-channel loop.
    pub fn simpler() -> Self {
        Self::new(-1.5, 0.5, -40.0, 40.0).unwrap()
    }

    pub fn with_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_samples(mut self, boundary_samples: usize) -> Result<Self, RootError> {
        self.boundary_samples = boundary_samples;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), RootError> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(RootError::InvalidWindow("non-finite bound".into()));
        }
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(RootError::InvalidWindow(format!(
                "empty rectangle [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.boundary_samples < 64 {
            return Err(RootError::InvalidWindow(format!(
                "boundary_samples = {} (need at least 64)",
                self.boundary_samples
            )));
        }
        Ok(())
    }

    /// Strict interior test.
    pub fn contains(&self, s: Complex64) -> bool {
        s.re > self.re_min && s.re < self.re_max && s.im > self.im_min && s.im < self.im_max
    }

    pub fn contains_window(&self, other: &SearchWindow) -> bool {
        other.re_min >= self.re_min
            && other.re_max <= self.re_max
            && other.im_min >= self.im_min
            && other.im_max <= self.im_max
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        self.im_min == -self.im_max
    }

    /// Parses `re_min,re_max,im_min,im_max`.
    pub fn parse(text: &str) -> Result<Self, RootError> {
        let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
        match parts {
            Ok(v) if v.len() == 4 => Self::new(v[0], v[1], v[2], v[3]),
            _ => Err(RootError::InvalidWindow(format!(
                "expected re_min,re_max,im_min,im_max, got '{text}'"
            ))),
        }
    }

    fn grown(&self, by: f64) -> Self {
        Self {
            re_min: self.re_min - by,
            re_max: self.re_max + by,
            im_min: self.im_min - by,
            im_max: self.im_max + by,
            ..*self
        }
    }

    fn cell(&self) -> Cell {
        Cell {
            re0: self.re_min,
            re1: self.re_max,
            im0: self.im_min,
            im1: self.im_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootOptions {
    /// Newton stops once `|Δs| < tol · max(1, |s|)`.
    pub tol: f64,
    /// Worker threads; `None` runs on the ambient rayon pool.
    pub threads: Option<usize>,
    /// Largest spacing of the initial boundary samples.
    pub max_sample_spacing: f64,
    /// Cells with a diagonal below `min_cell · max(1, |center|)` are not
    /// subdivided further.
    pub min_cell: f64,
    pub newton_max_iter: usize,
    /// Total outward nudge allowed when a zero sits on the outer boundary.
    pub max_nudge: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            threads: None,
            max_sample_spacing: 0.05,
            min_cell: 1e-7,
            newton_max_iter: 80,
            max_nudge: 1e-3,
        }
    }
}

impl RootOptions {
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    #[serde(with = "complex_parts")]
    pub s: Complex64,
    /// `|f(s)|` relative to the largest term of `f` at `s`.
    pub residual: f64,
    pub multiplicity: u32,
    /// False when Newton failed to converge inside the isolating cell; `s`
    /// is then the cell center.
    pub resolved: bool,
}

mod complex_parts {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, ser: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Complex64, D::Error> {
        let p = Parts::deserialize(de)?;
        Ok(Complex64::new(p.re, p.im))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub roots: Vec<Root>,
    /// Window the count refers to; differs from `requested` only when the
    /// boundary had to be nudged off a zero.
    pub window: SearchWindow,
    pub requested: SearchWindow,
    pub counted_total: u64,
}

impl Spectrum {
    pub fn unresolved(&self) -> usize {
        self.roots.iter().filter(|r| !r.resolved).count()
    }

    pub fn multiplicity_total(&self) -> u64 {
        self.roots.iter().map(|r| r.multiplicity as u64).sum()
    }

    pub fn abscissa(&self) -> SpectralAbscissa {
        SpectralAbscissa::from_roots(self.roots.iter().map(|r| r.s))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im", "residual", "multiplicity"])?;
        for r in &self.roots {
            w.write_record([
                format!("{:.17e}", r.s.re),
                format!("{:.17e}", r.s.im),
                format!("{:.6e}", r.residual),
                r.multiplicity.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "window": self.window,
            "requested_window": self.requested,
            "counted_total": self.counted_total,
            "abscissa": self.abscissa(),
            "roots": self.roots,
        })
    }
}

/// Window-limited spectral abscissa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralAbscissa {
    Finite { sigma: f64, attained_at: Complex64 },
    /// No roots in the window.
    NegInfinity,
}

impl SpectralAbscissa {
    /// Largest real part; ties within 1e-10 go to the smallest `|Im|`.
    pub fn from_roots<I: IntoIterator<Item = Complex64>>(roots: I) -> Self {
        let mut best: Option<Complex64> = None;
        for s in roots {
            best = Some(match best {
                None => s,
                Some(b) if s.re > b.re + 1e-10 => s,
                Some(b) if (s.re - b.re).abs() <= 1e-10 => {
                    if s.im.abs() < b.im.abs() || (s.im.abs() == b.im.abs() && s.im > b.im) {
                        s
                    } else {
                        b
                    }
                }
                Some(b) => b,
            });
        }
        match best {
            Some(s) => SpectralAbscissa::Finite {
                sigma: s.re,
                attained_at: s,
            },
            None => SpectralAbscissa::NegInfinity,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            SpectralAbscissa::Finite { sigma, .. } => *sigma,
            SpectralAbscissa::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SpectralAbscissa::Finite { .. })
    }
}

impl Serialize for SpectralAbscissa {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("SpectralAbscissa", 4)?;
        match self {
            SpectralAbscissa::Finite { sigma, attained_at } => {
                st.serialize_field("sigma", sigma)?;
                st.serialize_field("finite", &true)?;
                st.serialize_field("attained_re", &attained_at.re)?;
                st.serialize_field("attained_im", &attained_at.im)?;
            }
            SpectralAbscissa::NegInfinity => {
                st.serialize_field("sigma", &Option::<f64>::None)?;
                st.serialize_field("finite", &false)?;
                st.serialize_field("attained_re", &Option::<f64>::None)?;
                st.serialize_field("attained_im", &Option::<f64>::None)?;
            }
        }
        st.end()
    }
}

impl<'de> Deserialize<'de> for SpectralAbscissa {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            sigma: Option<f64>,
            finite: bool,
            attained_re: Option<f64>,
            attained_im: Option<f64>,
        }
        let raw = Raw::deserialize(de)?;
        match (raw.finite, raw.sigma, raw.attained_re, raw.attained_im) {
            (true, Some(sigma), Some(re), Some(im)) => Ok(SpectralAbscissa::Finite {
                sigma,
                attained_at: Complex64::new(re, im),
            }),
            (false, _, _, _) => Ok(SpectralAbscissa::NegInfinity),
            _ => Err(serde::de::Error::custom("finite abscissa without a value")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Cell {
    re0: f64,
    re1: f64,
    im0: f64,
    im1: f64,
}

impl Cell {
    fn diag(&self) -> f64 {
        (self.re1 - self.re0).hypot(self.im1 - self.im0)
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    fn as_array(&self) -> [f64; 4] {
        [self.re0, self.re1, self.im0, self.im1]
    }

    fn contains_with_margin(&self, s: Complex64, margin: f64) -> bool {
        s.re >= self.re0 - margin
            && s.re <= self.re1 + margin
            && s.im >= self.im0 - margin
            && s.im <= self.im1 + margin
    }

    /// Splits at fractions `fx`, `fy` of the extent; a side is only split
    /// when it is not much shorter than the other.
    fn split(&self, fx: f64, fy: f64) -> Vec<Cell> {
        let w = self.re1 - self.re0;
        let h = self.im1 - self.im0;
        let split_x = w >= 0.5 * h;
        let split_y = h >= 0.5 * w;
        let xs: Vec<f64> = if split_x {
            vec![self.re0, self.re0 + fx * w, self.re1]
        } else {
            vec![self.re0, self.re1]
        };
        let ys: Vec<f64> = if split_y {
            vec![self.im0, self.im0 + fy * h, self.im1]
        } else {
            vec![self.im0, self.im1]
        };
        let mut out = Vec::with_capacity(4);
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                out.push(Cell {
                    re0: xs[i],
                    re1: xs[i + 1],
                    im0: ys[j],
                    im1: ys[j + 1],
                });
            }
        }
        out
    }

    /// Near-square tiles covering the cell, offset by `shift` of a tile.
    fn tiles(&self, shift: f64) -> Vec<Cell> {
        let w = self.re1 - self.re0;
        let h = self.im1 - self.im0;
        let side = w.min(h);
        let nx = (w / side).round().max(1.0) as usize;
        let ny = (h / side).round().max(1.0) as usize;
        let cuts = |lo: f64, len: f64, n: usize| -> Vec<f64> {
            let mut v = vec![lo];
            for k in 1..n {
                v.push(lo + len * (k as f64 + shift) / n as f64);
            }
            v.push(lo + len);
            v
        };
        let xs = cuts(self.re0, w, nx);
        let ys = cuts(self.im0, h, ny);
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(Cell {
                    re0: xs[i],
                    re1: xs[i + 1],
                    im0: ys[j],
                    im1: ys[j + 1],
                });
            }
        }
        out
    }
}

struct Counter<'a, F: Residue + ?Sized> {
    f: &'a F,
    max_depth: u32,
    spacing: f64,
    min_segments: usize,
}

impl<'a, F: Residue + ?Sized> Counter<'a, F> {
    fn eval(&self, s: Complex64) -> Result<Residual, RootError> {
        let r = self.f.residual(s);
        if !r.value.is_finite() {
            return Err(RootError::NonFinite(s));
        }
        Ok(r)
    }

    /// Unwrapped phase change of `f` along the straight segment `a → b`.
    fn segment_phase(&self, a: Complex64, b: Complex64, segments: usize) -> Result<f64, RootError> {
        let mut total = 0.0;
        let mut prev_s = a;
        let mut prev = self.eval(a)?;
        if prev.value.is_zero() {
            return Err(RootError::BoundaryZero { from: a, to: b });
        }
        for k in 1..=segments {
            let s = if k == segments {
                b
            } else {
                a + (b - a) * (k as f64 / segments as f64)
            };
            let next = self.eval(s)?;
            total += self.refine(prev_s, &prev, s, &next, 0)?;
            prev_s = s;
            prev = next;
        }
        Ok(total)
    }

    fn refine(
        &self,
        a: Complex64,
        fa: &Residual,
        b: Complex64,
        fb: &Residual,
        depth: u32,
    ) -> Result<f64, RootError> {
        if fb.value.is_zero() {
            return Err(RootError::BoundaryZero { from: a, to: b });
        }
        let step = fa.value.phase_step_to(&fb.value);
        let dmag = (fb.value.ln_abs() - fa.value.ln_abs()).abs();
        if step.abs() <= FRAC_PI_2 && dmag <= 2.0 {
            return Ok(step);
        }
        if depth >= self.max_depth {
            return Err(RootError::BoundaryZero { from: a, to: b });
        }
        let m = 0.5 * (a + b);
        let fm = self.eval(m)?;
        if fm.value.is_zero() {
            return Err(RootError::BoundaryZero { from: a, to: b });
        }
        Ok(self.refine(a, fa, m, &fm, depth + 1)? + self.refine(m, &fm, b, fb, depth + 1)?)
    }

    fn count(&self, c: &Cell) -> Result<i64, RootError> {
        let corners = [
            Complex64::new(c.re0, c.im0),
            Complex64::new(c.re1, c.im0),
            Complex64::new(c.re1, c.im1),
            Complex64::new(c.re0, c.im1),
        ];
        let perimeter = 2.0 * ((c.re1 - c.re0) + (c.im1 - c.im0));
        let mut total = 0.0;
        for k in 0..4 {
            let a = corners[k];
            let b = corners[(k + 1) % 4];
            let len = (b - a).norm();
            let by_share = (self.min_segments as f64 * len / perimeter).ceil() as usize;
            let by_spacing = (len / self.spacing).ceil() as usize;
            total += self.segment_phase(a, b, by_share.max(by_spacing).max(1))?;
        }
        let winding = total / TAU;
        let n = winding.round();
        if (winding - n).abs() > 0.25 {
            return Err(RootError::BoundaryZero {
                from: corners[0],
                to: corners[2],
            });
        }
        Ok(n as i64)
    }
}

fn with_pool<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> Result<T, RootError> + Send,
) -> Result<T, RootError> {
    match threads {
        None => job(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| RootError::ThreadPool(e.to_string()))?;
            pool.install(job)
        }
    }
}

/// Counts the top-level window, nudging it outward when a zero sits on the
/// boundary. Returns the effective window and its count.
fn count_outer<F: Residue + ?Sized>(
    f: &F,
    w: &SearchWindow,
    opts: &RootOptions,
) -> Result<(SearchWindow, i64), RootError> {
    w.validate()?;
    let steps = 4;
    let step = opts.max_nudge / steps as f64;
    let mut last = None;
    for k in 0..=steps {
        let eff = w.grown(step * k as f64);
        let counter = Counter {
            f,
            max_depth: eff.max_depth,
            spacing: opts.max_sample_spacing,
            min_segments: eff.boundary_samples,
        };
        match counter.count(&eff.cell()) {
            Ok(n) if n >= 0 => return Ok((eff, n)),
            Ok(n) => {
                return Err(RootError::CountMismatch {
                    cell: eff.cell().as_array(),
                    parent: n,
                    children: 0,
                })
            }
            Err(e @ RootError::BoundaryZero { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Number of zeros (with multiplicity) of `f` inside `w`.
pub fn count_zeros<F: Residue + ?Sized>(f: &F, w: &SearchWindow) -> Result<u64, RootError> {
    count_zeros_with(f, w, &RootOptions::default()).map(|(_, n)| n)
}

/// Like [`count_zeros`], also returning the effective (possibly nudged)
/// window.
pub fn count_zeros_with<F: Residue + ?Sized>(
    f: &F,
    w: &SearchWindow,
    opts: &RootOptions,
) -> Result<(SearchWindow, u64), RootError> {
    let (eff, n) = count_outer(f, w, opts)?;
    Ok((eff, n as u64))
}

const SPLIT_SHIFTS: [f64; 7] = [0.5, 0.4637, 0.5371, 0.4211, 0.5813, 0.3779, 0.6247];

struct Locator<'a, F: Residue + ?Sized> {
    counter: Counter<'a, F>,
    opts: &'a RootOptions,
}

impl<'a, F: Residue + ?Sized> Locator<'a, F> {
    fn min_diag(&self, c: &Cell) -> f64 {
        self.opts.min_cell * c.center().norm().max(1.0)
    }

    /// Roots inside a cell already known to hold `count` zeros.
    fn locate(&self, cell: Cell, count: i64) -> Result<Vec<Root>, RootError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if count == 1 {
            if let Some(root) = self.newton(&cell, 1) {
                return Ok(vec![root]);
            }
        }
        if cell.diag() < self.min_diag(&cell) {
            return Ok(vec![self.cluster(&cell, count)]);
        }
        let mut last_err = None;
        for (k, &fx) in SPLIT_SHIFTS.iter().enumerate() {
            let fy = SPLIT_SHIFTS[(k * 3) % SPLIT_SHIFTS.len()];
            let children = cell.split(fx, fy);
            let counts: Result<Vec<i64>, RootError> = children
                .par_iter()
                .map(|c| self.counter.count(c))
                .collect();
            let counts = match counts {
                Ok(c) => c,
                Err(e @ RootError::BoundaryZero { .. }) => {
                    last_err = Some(e);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let sum: i64 = counts.iter().sum();
            if sum != count || counts.iter().any(|&c| c < 0) {
                last_err = Some(RootError::CountMismatch {
                    cell: cell.as_array(),
                    parent: count,
                    children: sum,
                });
                continue;
            }
            let found: Result<Vec<Vec<Root>>, RootError> = children
                .into_par_iter()
                .zip(counts)
                .map(|(c, n)| self.locate(c, n))
                .collect();
            return Ok(found?.into_iter().flatten().collect());
        }
        Err(last_err.expect("split attempted"))
    }

    /// Cell too small to split further: report a multiple root.
    fn cluster(&self, cell: &Cell, count: i64) -> Root {
        self.newton(cell, count as u32).unwrap_or_else(|| {
            let s = cell.center();
            Root {
                s,
                residual: self.counter.f.residual(s).relative(),
                multiplicity: count as u32,
                resolved: false,
            }
        })
    }

    fn newton(&self, cell: &Cell, multiplicity: u32) -> Option<Root> {
        let f = self.counter.f;
        let diag = cell.diag();
        let margin = 1e-9 * diag.max(1e-300);
        let mut s = cell.center();
        for _ in 0..self.opts.newton_max_iter {
            let h = (1e-6 * diag).max(1e-9 * s.norm().max(1.0));
            let fs = f.residual(s).value;
            if fs.is_zero() {
                break;
            }
            let fp = f.residual(s + h).value;
            let fm = f.residual(s - h).value;
            let deriv = (fp - fm).scale(0.5 / h);
            let step = fs.checked_div(&deriv)?.to_complex() * multiplicity as f64;
            if !step.is_finite() {
                return None;
            }
            s -= step;
            if !cell.contains_with_margin(s, margin.max(2.0 * diag)) {
                return None;
            }
            if step.norm() < self.opts.tol * s.norm().max(1.0) {
                break;
            }
        }
        if !cell.contains_with_margin(s, margin) {
            return None;
        }
        let res = f.residual(s);
        if !(res.relative() < 1e-6) {
            return None;
        }
        Some(Root {
            s,
            residual: res.relative(),
            multiplicity,
            resolved: true,
        })
    }
}

/// Newton restricted to the real axis, for snapping near-real roots.
fn real_newton<F: Residue + ?Sized>(f: &F, x0: f64, tol: f64) -> Option<f64> {
    let mut x = x0;
    for _ in 0..40 {
        let s = Complex64::new(x, 0.0);
        let fs = f.residual(s).value;
        if fs.is_zero() {
            return Some(x);
        }
        let h = 1e-7 * x.abs().max(1.0);
        let d = (f.residual(s + h).value - f.residual(s - h).value).scale(0.5 / h);
        let step = fs.checked_div(&d)?.to_complex();
        if !step.re.is_finite() {
            return None;
        }
        x -= step.re;
        if step.re.abs() < tol * x.abs().max(1.0) {
            return Some(x);
        }
    }
    None
}

/// Makes the root set exactly closed under conjugation: near-real roots are
/// put on the axis and lower-half roots are replaced by the conjugates of
/// their upper-half partners.
fn symmetrize<F: Residue + ?Sized>(f: &F, roots: &mut [Root], window: &SearchWindow, tol: f64) {
    for r in roots.iter_mut() {
        if r.resolved && r.s.im.abs() < 1e-7 * r.s.norm().max(1.0) {
            if let Some(x) = real_newton(f, r.s.re, tol) {
                if (x - r.s.re).abs() < 1e-6 * r.s.norm().max(1.0) {
                    r.s = Complex64::new(x, 0.0);
                    r.residual = f.residual(r.s).relative();
                }
            }
        }
    }
    let mut taken = vec![false; roots.len()];
    for i in 0..roots.len() {
        if roots[i].s.im <= 0.0 || !roots[i].resolved {
            continue;
        }
        let target = roots[i].s.conj();
        if !window.contains(target) {
            continue;
        }
        let partner = (0..roots.len())
            .filter(|&j| !taken[j] && roots[j].s.im < 0.0 && roots[j].resolved)
            .map(|j| (j, (roots[j].s - target).norm()))
            .filter(|&(_, d)| d < 1e-6 * target.norm().max(1.0))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = partner {
            taken[j] = true;
            roots[j].s = target;
            roots[j].residual = roots[i].residual;
        }
    }
}

fn sort_roots(roots: &mut [Root]) {
    roots.sort_by(|a, b| a.s.re.total_cmp(&b.s.re).then(a.s.im.total_cmp(&b.s.im)));
}

/// All zeros of `f` inside `w`, with residuals and multiplicities.
pub fn find_roots<F: Residue + ?Sized>(
    f: &F,
    w: &SearchWindow,
    opts: &RootOptions,
) -> Result<Spectrum, RootError> {
    with_pool(opts.threads, || find_roots_inner(f, w, opts))
}

fn find_roots_inner<F: Residue + ?Sized>(
    f: &F,
    w: &SearchWindow,
    opts: &RootOptions,
) -> Result<Spectrum, RootError> {
    let (eff, total) = count_outer(f, w, opts)?;
    let locator = Locator {
        counter: Counter {
            f,
            max_depth: eff.max_depth,
            spacing: opts.max_sample_spacing,
            min_segments: 16,
        },
        opts,
    };
    let mut roots = Vec::new();
    if total > 0 {
        let outer = eff.cell();
        let mut last_err = None;
        let mut done = false;
        for &shift in &[0.0, 0.173, -0.241, 0.311] {
            let tiles = outer.tiles(shift);
            let counts: Result<Vec<i64>, RootError> =
                tiles.par_iter().map(|c| locator.counter.count(c)).collect();
            let counts = match counts {
                Ok(c) => c,
                Err(e @ RootError::BoundaryZero { .. }) => {
                    last_err = Some(e);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let sum: i64 = counts.iter().sum();
            if sum != total {
                last_err = Some(RootError::CountMismatch {
                    cell: outer.as_array(),
                    parent: total,
                    children: sum,
                });
                continue;
            }
            let found: Result<Vec<Vec<Root>>, RootError> = tiles
                .into_par_iter()
                .zip(counts)
                .map(|(c, n)| locator.locate(c, n))
                .collect();
            roots = found?.into_iter().flatten().collect();
            done = true;
            break;
        }
        if !done {
            return Err(last_err.expect("tiling attempted"));
        }
    }
    if eff.is_conjugate_symmetric() {
        symmetrize(f, &mut roots, &eff, opts.tol);
    }
    sort_roots(&mut roots);
    Ok(Spectrum {
        roots,
        window: eff,
        requested: *w,
        counted_total: total as u64,
    })
}

/// Largest real part of the zeros inside `w`.
pub fn spectral_abscissa<F: Residue + ?Sized>(
    f: &F,
    w: &SearchWindow,
    opts: &RootOptions,
) -> Result<SpectralAbscissa, RootError> {
    Ok(find_roots(f, w, opts)?.abscissa())
}
