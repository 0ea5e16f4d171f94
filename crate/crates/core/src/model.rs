//! System parameters and the transfer functions of the transport and
//! advection-diffusion subsystems.
//!
//! The loop is made of two identical subsystems, each mapping its inflow
//! value `y(s, 0)` to its outflow value `y(s, 1)`:
//!
//! * pure transport at velocity `υ`: `f(s) = e^{-sτ}`, `τ = 1/υ`;
//! * advection-diffusion with viscosity `η > 0`, velocity `1 + ε` and a
//!   homogeneous Neumann condition at the outflow:
//!   `f(s) = (λ₁ - λ₂) / (λ₁ e^{-λ₂} - λ₂ e^{-λ₁})`, where `λ₁, λ₂` are the
//!   roots of `ηλ² - (1 + ε)λ - s = 0`.
//!
//! Everything that can overflow is returned as a [`ScaledComplex`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scaled::ScaledComplex;

/// `|√((1+ε)² + 4ηs)|` below this fraction of `1 + ε` is treated as the
/// confluent point `λ₁ = λ₂`.
pub const CONFLUENCE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Nominal transport velocity `υ`.
    pub velocity: f64,
    /// Nominal delay `τ = 1/υ`, derived at construction.
    pub tau: f64,
    /// Viscosity `η`; zero selects the pure transport model.
    pub eta: f64,
    /// Relative velocity perturbation: the plant travels at `(1 + ε)·υ`.
    pub eps: f64,
    pub k1: f64,
    pub k2: f64,
    /// Proportional gain, `U = -2 k_p Y`.
    pub kp: f64,
}

impl SystemParams {
    /// Unit-velocity parameters with the dead-beat gains `k₁ = 0, k₂ = 1`.
    pub fn unit() -> Self {
        Self {
            velocity: 1.0,
            tau: 1.0,
            eta: 0.0,
            eps: 0.0,
            k1: 0.0,
            k2: 1.0,
            kp: 0.0,
        }
    }

    pub fn with_velocity(velocity: f64) -> Result<Self, ModelError> {
        Self::unit().velocity(velocity)
    }

    pub fn velocity(mut self, velocity: f64) -> Result<Self, ModelError> {
        if !(velocity.is_finite() && velocity > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "velocity",
                value: velocity,
                reason: "must be positive and finite",
            });
        }
        self.velocity = velocity;
        self.tau = 1.0 / velocity;
        Ok(self)
    }

    pub fn eta(mut self, eta: f64) -> Result<Self, ModelError> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must be nonnegative and finite",
            });
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn eps(mut self, eps: f64) -> Result<Self, ModelError> {
        if !(eps.is_finite() && 1.0 + eps > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "1 + eps must be positive",
            });
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn gains(mut self, k1: f64, k2: f64) -> Result<Self, ModelError> {
        for (name, v) in [("k1", k1), ("k2", k2)] {
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        self.k1 = k1;
        self.k2 = k2;
        Ok(self)
    }

    pub fn kp(mut self, kp: f64) -> Result<Self, ModelError> {
        if !kp.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "kp",
                value: kp,
                reason: "must be finite",
            });
        }
        self.kp = kp;
        Ok(self)
    }

    /// Actual plant velocity factor `1 + ε`.
    pub fn speed_factor(&self) -> f64 {
        1.0 + self.eps
    }

    pub fn is_viscous(&self) -> bool {
        self.eta > 0.0
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::unit()
    }
}

/// Roots of `ηλ² - (1+ε)λ - s = 0`; `l1` carries the `+√` branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaPair {
    pub l1: Complex64,
    pub l2: Complex64,
    /// Principal square root `√((1+ε)² + 4ηs)`.
    pub root: Complex64,
}

impl LambdaPair {
    pub fn sum(&self) -> Complex64 {
        self.l1 + self.l2
    }

    pub fn product(&self) -> Complex64 {
        self.l1 * self.l2
    }

    pub fn difference(&self) -> Complex64 {
        self.l1 - self.l2
    }
}

/// Principal-branch characteristic roots of the viscous subsystem.
///
/// `λ₂` is obtained from `λ₁λ₂ = -s/η` rather than from the difference
/// formula, which cancels catastrophically when `η` is small.
pub fn lambda_pair(s: Complex64, params: &SystemParams) -> Result<LambdaPair, ModelError> {
    if params.eta <= 0.0 {
        return Err(ModelError::Inviscid(params.eta));
    }
    let c = params.speed_factor();
    let eta = params.eta;
    let root = (c * c + 4.0 * eta * s).sqrt();
    // Re(root) >= 0 and c > 0, so c + root never vanishes
    let l1 = (c + root) / (2.0 * eta);
    let l2 = -2.0 * s / (c + root);
    Ok(LambdaPair { l1, l2, root })
}

/// Transfer function `e^{-sτ}` of a pure transport subsystem.
pub fn f_transport(s: Complex64, tau: f64) -> Complex64 {
    (-s * tau).exp()
}

/// Numerator `N = λ₁ - λ₂` and denominator `D = λ₁e^{-λ₂} - λ₂e^{-λ₁}` of
/// the viscous transfer function.
pub(crate) fn viscous_num_den(pair: &LambdaPair, eta: f64) -> (ScaledComplex, ScaledComplex) {
    let num = ScaledComplex::from_complex(pair.root / eta);
    let den = ScaledComplex::exp(-pair.l2).mul_complex(pair.l1)
        - ScaledComplex::exp(-pair.l1).mul_complex(pair.l2);
    (num, den)
}

/// Transfer function of one advection-diffusion subsystem, with the
/// confluent limit `e^λ / (1 + λ)`, `λ = (1+ε)/(2η)`, substituted when
/// `λ₁ ≈ λ₂`.
pub fn f_viscous(s: Complex64, params: &SystemParams) -> Result<ScaledComplex, ModelError> {
    let pair = lambda_pair(s, params)?;
    let c = params.speed_factor();
    if pair.root.norm() < CONFLUENCE_THRESHOLD * c {
        let lambda = c / (2.0 * params.eta);
        return Ok(ScaledComplex::exp(Complex64::new(lambda, 0.0)).scale(1.0 / (1.0 + lambda)));
    }
    let (num, den) = viscous_num_den(&pair, params.eta);
    num.checked_div(&den).ok_or(ModelError::Pole(s))
}

/// Subsystem transfer function: transport when `η = 0`, viscous otherwise.
/// The transport branch uses the perturbed delay `τ/(1+ε)`.
pub fn subsystem_transfer(s: Complex64, params: &SystemParams) -> Result<ScaledComplex, ModelError> {
    if params.is_viscous() {
        f_viscous(s, params)
    } else {
        let delay = params.tau / params.speed_factor();
        Ok(ScaledComplex::exp(-s * delay))
    }
}

/// Open-loop input/output transfer `G = f / (1 - f²)`.
pub fn open_loop_g(s: Complex64, params: &SystemParams) -> Result<ScaledComplex, ModelError> {
    let f = subsystem_transfer(s, params)?;
    let f2 = f.square();
    let den = ScaledComplex::ONE - f2;
    let scale = f2.ln_abs().max(0.0);
    if den.is_zero() || den.ln_abs() < scale + (1e-14f64).ln() {
        return Err(ModelError::Pole(s));
    }
    Ok(f / den)
}

/// `X_η(z) = (1+z)/2 · e^{-(1-z)/2η} - (1-z)/2 · e^{-(1+z)/2η}`.
pub fn x_eta(z: Complex64, eta: f64) -> Result<ScaledComplex, ModelError> {
    if !(eta > 0.0) {
        return Err(ModelError::Inviscid(eta));
    }
    let one = Complex64::new(1.0, 0.0);
    let first = ScaledComplex::exp(-(one - z) / (2.0 * eta)).mul_complex((one + z) / 2.0);
    let second = ScaledComplex::exp(-(one + z) / (2.0 * eta)).mul_complex((one - z) / 2.0);
    Ok(first - second)
}
