//! Grids and single-step updates for the transport and advection-diffusion
//! subsystems on `[0, 1]`.
//!
//! A state is the vector of nodal values `y_0 … y_N` with `Δx = 1/N`.
//! Steps never touch node 0: the inflow value is set by the boundary
//! coupling after each step.

use crate::error::SimError;

/// Courant numbers this close to 1 select the exact shift.
const EXACT_CFL: f64 = 1e-12;
/// Largest admissible diffusion number `ηΔt/Δx²`.
pub const MAX_DIFFUSION_NUMBER: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub cells: usize,
    pub dx: f64,
    pub dt: f64,
    /// Courant number `speed·Δt/Δx`.
    pub cfl: f64,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 32;

    /// Time step from the requested Courant number, reduced if needed so
    /// that the diffusion number stays at most [`MAX_DIFFUSION_NUMBER`].
    pub fn new(cells: usize, speed: f64, cfl: f64, eta: f64) -> Result<Self, SimError> {
        if cells < Self::MIN_CELLS {
            return Err(SimError::Config(format!(
                "need at least {} cells, got {cells}",
                Self::MIN_CELLS
            )));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(SimError::Config(format!("speed must be positive, got {speed}")));
        }
        if !(cfl.is_finite() && cfl > 0.0) {
            return Err(SimError::Config(format!("cfl must be positive, got {cfl}")));
        }
        if cfl > 1.0 + EXACT_CFL {
            return Err(SimError::Cfl(cfl));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(SimError::Config(format!("eta must be nonnegative, got {eta}")));
        }
        let dx = 1.0 / cells as f64;
        let mut dt = cfl * dx / speed;
        let mut cfl = cfl;
        if eta > 0.0 {
            let cap = MAX_DIFFUSION_NUMBER * dx * dx / eta;
            if cap < dt {
                dt = cap;
                cfl = speed * dt / dx;
            }
        }
        Ok(Self { cells, dx, dt, cfl })
    }

    pub fn diffusion_number(&self, eta: f64) -> f64 {
        eta * self.dt / (self.dx * self.dx)
    }

    /// Node coordinates `x_j = j Δx`.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(move |j| j as f64 * self.dx)
    }
}

/// One upwind step of `∂_t y + v ∂_x y = 0`; at Courant number 1 this is
/// the exact shift by one node.
pub fn step_transport(state: &mut [f64], dt: f64, velocity: f64) -> Result<(), SimError> {
    let n = state.len().saturating_sub(1);
    if n == 0 {
        return Err(SimError::Config("state needs at least two nodes".into()));
    }
    let c = velocity * dt * n as f64;
    if !(c.is_finite() && c >= 0.0) {
        return Err(SimError::Config(format!("invalid Courant number {c}")));
    }
    if c > 1.0 + EXACT_CFL {
        return Err(SimError::Cfl(c));
    }
    if (c - 1.0).abs() <= EXACT_CFL {
        state.copy_within(0..n, 1);
    } else {
        for j in (1..=n).rev() {
            state[j] -= c * (state[j] - state[j - 1]);
        }
    }
    Ok(())
}

/// Backward-Euler diffusion with node 0 held fixed and a mirror ghost node
/// at `x = 1`. The tridiagonal factorisation depends only on
/// `r = ηΔt/Δx²`, so it is computed once.
#[derive(Clone, Debug)]
pub struct ImplicitDiffusion {
    r: f64,
    /// Modified super-diagonal of the forward sweep.
    cp: Vec<f64>,
    /// Reciprocal pivots.
    inv: Vec<f64>,
    sub: Vec<f64>,
}

impl ImplicitDiffusion {
    /// Operator for `cells` unknowns `y_1 … y_N`.
    pub fn new(cells: usize, r: f64) -> Self {
        assert!(cells >= 2 && r >= 0.0 && r.is_finite());
        let diag = 1.0 + 2.0 * r;
        let mut sub = vec![-r; cells];
        sub[0] = 0.0;
        sub[cells - 1] = -2.0 * r;
        let mut cp = vec![0.0; cells];
        let mut inv = vec![0.0; cells];
        let mut prev = 0.0;
        for i in 0..cells {
            let pivot = diag - sub[i] * prev;
            // strict diagonal dominance keeps the pivot ≥ 1
            debug_assert!(pivot >= 1.0 - 1e-12);
            inv[i] = 1.0 / pivot;
            let sup = if i + 1 < cells { -r } else { 0.0 };
            cp[i] = sup * inv[i];
            prev = cp[i];
        }
        Self { r, cp, inv, sub }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Solve in place; `state[0]` is the Dirichlet value.
    pub fn apply(&self, state: &mut [f64]) {
        let n = self.cp.len();
        assert_eq!(state.len(), n + 1, "state length does not match operator");
        let left = state[0];
        let y = &mut state[1..];
        // forward sweep
        y[0] += self.r * left;
        let mut prev = 0.0;
        for ((yi, sub), inv) in y.iter_mut().zip(&self.sub).zip(&self.inv) {
            *yi = (*yi - sub * prev) * inv;
            prev = *yi;
        }
        // back substitution
        for i in (0..n - 1).rev() {
            y[i] -= self.cp[i] * y[i + 1];
        }
    }
}

/// Viscosity left for the implicit sub-step once the upwind scheme's own
/// numerical diffusion `v Δx (1 − c) / 2` is accounted for.
///
/// Without this the leading error is first order in `Δx` with a Courant
/// number that itself depends on the mesh, and refinement does not
/// converge monotonically.
pub fn compensated_viscosity(eta: f64, velocity: f64, dx: f64, cfl: f64) -> f64 {
    (eta - 0.5 * velocity * dx * (1.0 - cfl)).max(0.0)
}

/// Operator-split step of `∂_t y + v ∂_x y − η ∂²_x y = 0`: upwind advection
/// followed by implicit diffusion with [`compensated_viscosity`].
pub fn step_advdiff(
    state: &mut [f64],
    dt: f64,
    velocity: f64,
    eta: f64,
) -> Result<(), SimError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(SimError::Config(format!("advection-diffusion needs eta > 0, got {eta}")));
    }
    let n = state.len().saturating_sub(1);
    step_transport(state, dt, velocity)?;
    let dx = 1.0 / n as f64;
    let eta = compensated_viscosity(eta, velocity, dx, velocity * dt / dx);
    let r = eta * dt / (dx * dx);
    ImplicitDiffusion::new(n, r).apply(state);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(n: usize, center: f64, width: f64) -> Vec<f64> {
        (0..=n)
            .map(|j| {
                let x = j as f64 / n as f64;
                (-(x - center).powi(2) / (2.0 * width * width)).exp()
            })
            .collect()
    }

    #[test]
    fn exact_shift_moves_square_pulse() {
        let n = 40;
        let mut y = vec![0.0; n + 1];
        y[5..10].fill(1.0);
        let dt = 1.0 / n as f64;
        for _ in 0..7 {
            step_transport(&mut y, dt, 1.0).unwrap();
        }
        let expect: Vec<f64> = (0..=n).map(|j| if (12..17).contains(&j) { 1.0 } else { 0.0 }).collect();
        assert_eq!(y, expect);
    }

    #[test]
    fn zero_stays_zero() {
        let mut y = vec![0.0; 65];
        step_transport(&mut y, 0.5 / 64.0, 1.0).unwrap();
        step_advdiff(&mut y, 0.5 / 64.0, 1.0, 0.1).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn courant_above_one_is_rejected() {
        let mut y = vec![0.0; 33];
        assert!(matches!(
            step_transport(&mut y, 2.0 / 32.0, 1.0),
            Err(SimError::Cfl(c)) if (c - 2.0).abs() < 1e-12
        ));
        assert!(matches!(Grid1D::new(64, 1.0, 1.5, 0.0), Err(SimError::Cfl(_))));
        assert!(Grid1D::new(16, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn upwind_half_courant_is_dissipative() {
        let n = 64;
        let mut y: Vec<f64> = (0..=n)
            .map(|j| (std::f64::consts::TAU * j as f64 / n as f64).sin())
            .collect();
        let before = y.iter().map(|v| v * v).sum::<f64>();
        let dt = 0.5 / n as f64;
        for _ in 0..2 * n {
            // periodic inflow keeps the wave intact apart from dissipation
            step_transport(&mut y, dt, 1.0).unwrap();
            y[0] = y[n];
        }
        let after = y.iter().map(|v| v * v).sum::<f64>();
        assert!(after < before);
    }

    #[test]
    fn grid_caps_the_diffusion_number() {
        let g = Grid1D::new(512, 1.0, 1.0, 0.1).unwrap();
        assert!((g.diffusion_number(0.1) - 10.0).abs() < 1e-9);
        assert!(g.cfl < 1.0);
        let g = Grid1D::new(64, 1.1, 1.0, 0.0).unwrap();
        assert!((g.dt * 1.1 * 64.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_viscosity_matches_transport() {
        // feed a pulse through the inflow for one traversal so that the
        // profile is flat at both ends when compared
        let n = 128;
        let dt = 1.0 / n as f64;
        let pulse = |t: f64| (-((t - 0.5) / 0.12).powi(2) / 2.0).exp();
        let mut a = vec![0.0; n + 1];
        let mut b = a.clone();
        for k in 1..=n {
            step_transport(&mut a, dt, 1.0).unwrap();
            step_advdiff(&mut b, dt, 1.0, 1e-6).unwrap();
            a[0] = pulse(k as f64 * dt);
            b[0] = a[0];
        }
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn compensation_vanishes_at_unit_courant() {
        assert_eq!(compensated_viscosity(0.1, 1.0, 0.01, 1.0), 0.1);
        assert!((compensated_viscosity(0.1, 1.0, 0.01, 0.5) - 0.0975).abs() < 1e-15);
        assert_eq!(compensated_viscosity(1e-6, 1.0, 0.01, 0.5), 0.0);
    }

    #[test]
    fn constant_state_is_preserved() {
        let n = 64;
        let mut y = vec![1.0; n + 1];
        for _ in 0..50 {
            step_advdiff(&mut y, 0.7 / n as f64, 1.0, 0.1).unwrap();
        }
        for v in &y {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn diffusion_is_nonexpansive() {
        // the mirror ghost makes the operator symmetric in the trapezoid norm
        let n = 50;
        let norm = |y: &[f64]| {
            y.iter()
                .enumerate()
                .map(|(j, v)| if j == n { 0.5 * v * v } else { v * v })
                .sum::<f64>()
        };
        let mut y = bump(n, 0.8, 0.05);
        y[0] = 0.0;
        let op = ImplicitDiffusion::new(n, 3.0);
        let mut last = norm(&y);
        for _ in 0..20 {
            op.apply(&mut y);
            let now = norm(&y);
            assert!(now <= last * (1.0 + 1e-14));
            last = now;
        }
    }

    #[test]
    fn tridiagonal_solution_satisfies_the_system() {
        let n = 9;
        let r = 0.7;
        let rhs: Vec<f64> = (0..=n).map(|j| (j as f64).sin() + 2.0).collect();
        let mut y = rhs.clone();
        ImplicitDiffusion::new(n, r).apply(&mut y);
        for j in 1..=n {
            let right = if j == n { y[n - 1] } else { y[j + 1] };
            let lhs = (1.0 + 2.0 * r) * y[j] - r * y[j - 1] - r * right;
            assert!((lhs - rhs[j]).abs() < 1e-13, "row {j}");
        }
    }
}
