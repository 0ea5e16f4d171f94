//! Characteristic functions of every loop, in entire (pole-free,
//! branch-free) form so that the argument principle counts zeros only.
//!
//! Notation for the viscous variants: `c = 1 + ε`, `r = √(c² + 4ηs)`,
//! `N = λ₁ - λ₂ = r/η`, `D = λ₁e^{-λ₂} - λ₂e^{-λ₁}` and `f = N/D`.
//!
//! * dead-beat loop: `f² - f e^{-sτ} - 1 = 0` is cleared of its double
//!   pole to `P = N² - N D e^{-sτ} - D²`. Swapping `λ₁ ↔ λ₂` flips the signs
//!   of both `N` and `D`, so `P` is even in `r` and therefore entire in `s`.
//!   `P` vanishes at the confluent point `r = 0`.
//! * simpler loop: `F - 1 = 0` with
//!   `F = (λ₁e^{λ₁} - λ₂e^{λ₂})(1 + e^{-sτ}) / (N e^{λ₁+λ₂})`. With
//!   `λ = c/2η` and `δ = r/2η` the ratio `(λ₁e^{λ₁} - λ₂e^{λ₂}) / N` equals
//!   `e^λ (λ sinh(δ)/δ + cosh δ)`, which is even in `δ`. The residual is
//!   `e^{2λ}(F - 1)`, a positive multiple of `F - 1`.
//!
//! Every residual carries the logarithm of its largest term so callers can
//! judge cancellation.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{lambda_pair, viscous_num_den, x_eta, SystemParams};
use crate::scaled::ScaledComplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `e^{2sτ'} - 1`, uncontrolled inviscid loop.
    OpenLoopInviscid,
    /// `e^{2sτ'} + 2k_p e^{sτ'} - 1`, proportional output feedback.
    PropInviscid,
    /// `e^{2sτ'} + 2k₁e^{sτ'} + k₂e^{s(τ'-τ)} - 1`, delayed output feedback.
    DynInviscid,
    /// `N² - D²`, uncontrolled viscous loop.
    OpenLoopViscous,
    /// Dead-beat feedback on the viscous loop, nominal velocity.
    DeadbeatViscous,
    /// Dead-beat feedback on the viscous loop with velocity `1 + ε`.
    DeadbeatViscousPerturbed,
    /// Dead-beat feedback on the inviscid loop with velocity `1 + ε`.
    DeadbeatInviscidPerturbed,
    /// The one-viscous-channel loop closed by `K = ((1, -1), (1, -1))`.
    SimplerSystem,
    /// Dead-beat viscous loop in the variable `z = √(1 + 4ηs)`.
    ZForm,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::OpenLoopInviscid,
        Variant::PropInviscid,
        Variant::DynInviscid,
        Variant::OpenLoopViscous,
        Variant::DeadbeatViscous,
        Variant::DeadbeatViscousPerturbed,
        Variant::DeadbeatInviscidPerturbed,
        Variant::SimplerSystem,
        Variant::ZForm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::OpenLoopInviscid => "open-inviscid",
            Variant::PropInviscid => "prop-inviscid",
            Variant::DynInviscid => "dyn-inviscid",
            Variant::OpenLoopViscous => "open-viscous",
            Variant::DeadbeatViscous => "deadbeat-viscous",
            Variant::DeadbeatViscousPerturbed => "deadbeat-viscous-perturbed",
            Variant::DeadbeatInviscidPerturbed => "deadbeat-inviscid-perturbed",
            Variant::SimplerSystem => "simpler",
            Variant::ZForm => "zform",
        }
    }

    pub fn requires_viscosity(&self) -> bool {
        matches!(
            self,
            Variant::OpenLoopViscous
                | Variant::DeadbeatViscous
                | Variant::DeadbeatViscousPerturbed
                | Variant::SimplerSystem
                | Variant::ZForm
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
                format!("unknown variant '{s}', expected one of {}", names.join(", "))
            })
    }
}

/// A residual value together with the log-magnitude of its largest term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub value: ScaledComplex,
    pub ln_scale: f64,
}

impl Residual {
    /// `|value|` relative to the largest term that produced it, or absolute
    /// when every term is below one (all terms vanish together at the
    /// confluent point).
    pub fn relative(&self) -> f64 {
        if self.value.is_zero() {
            0.0
        } else {
            (self.value.ln_abs() - self.ln_scale.max(0.0)).exp()
        }
    }
}

/// Sum of terms that remembers its largest summand.
struct TermSum {
    value: ScaledComplex,
    ln_scale: f64,
}

impl TermSum {
    fn new() -> Self {
        Self {
            value: ScaledComplex::ZERO,
            ln_scale: f64::NEG_INFINITY,
        }
    }

    fn add(mut self, term: ScaledComplex) -> Self {
        self.ln_scale = self.ln_scale.max(term.ln_abs());
        self.value = self.value + term;
        self
    }

    fn finish(self) -> Residual {
        Residual {
            value: self.value,
            ln_scale: self.ln_scale,
        }
    }
}

/// Characteristic function handle: variant plus parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharFn {
    pub variant: Variant,
    pub params: SystemParams,
}

impl CharFn {
    pub fn new(variant: Variant, params: SystemParams) -> Result<Self, ModelError> {
        if variant.requires_viscosity() {
            if !params.is_viscous() {
                return Err(ModelError::Inviscid(params.eta));
            }
            if params.velocity != 1.0 {
                return Err(ModelError::InvalidParameter {
                    name: "velocity",
                    value: params.velocity,
                    reason: "viscous loops are normalized to unit nominal velocity",
                });
            }
        }
        Ok(Self { variant, params })
    }

    pub fn eval(&self, s: Complex64) -> Residual {
        let p = &self.params;
        match self.variant {
            Variant::OpenLoopInviscid => open_inviscid_terms(s, p),
            Variant::PropInviscid => prop_inviscid_terms(s, p),
            Variant::DynInviscid => dyn_inviscid_terms(s, p),
            Variant::OpenLoopViscous => open_viscous_terms(s, p),
            Variant::DeadbeatViscous => {
                let nominal = SystemParams { eps: 0.0, ..*p };
                deadbeat_viscous_terms(s, &nominal)
            }
            Variant::DeadbeatViscousPerturbed => deadbeat_viscous_terms(s, p),
            Variant::DeadbeatInviscidPerturbed => deadbeat_inviscid_perturbed_terms(s, p),
            Variant::SimplerSystem => simpler_terms(s, p),
            Variant::ZForm => zform_terms(s, p.eta),
        }
    }

    pub fn value(&self, s: Complex64) -> ScaledComplex {
        self.eval(s).value
    }
}

fn plant_delay(p: &SystemParams) -> f64 {
    p.tau / p.speed_factor()
}

fn open_inviscid_terms(s: Complex64, p: &SystemParams) -> Residual {
    let tp = plant_delay(p);
    TermSum::new()
        .add(ScaledComplex::exp(2.0 * s * tp))
        .add(-ScaledComplex::ONE)
        .finish()
}

fn prop_inviscid_terms(s: Complex64, p: &SystemParams) -> Residual {
    let tp = plant_delay(p);
    TermSum::new()
        .add(ScaledComplex::exp(2.0 * s * tp))
        .add(ScaledComplex::exp(s * tp).scale(2.0 * p.kp))
        .add(-ScaledComplex::ONE)
        .finish()
}

fn dyn_inviscid_terms(s: Complex64, p: &SystemParams) -> Residual {
    let tp = plant_delay(p);
    TermSum::new()
        .add(ScaledComplex::exp(2.0 * s * tp))
        .add(ScaledComplex::exp(s * tp).scale(2.0 * p.k1))
        .add(ScaledComplex::exp(s * (tp - p.tau)).scale(p.k2))
        .add(-ScaledComplex::ONE)
        .finish()
}

fn open_viscous_terms(s: Complex64, p: &SystemParams) -> Residual {
    let pair = lambda_pair(s, p).expect("validated viscous parameters");
    let (n, d) = viscous_num_den(&pair, p.eta);
    TermSum::new().add(n.square()).add(-d.square()).finish()
}

fn deadbeat_viscous_terms(s: Complex64, p: &SystemParams) -> Residual {
    let pair = lambda_pair(s, p).expect("validated viscous parameters");
    let (n, d) = viscous_num_den(&pair, p.eta);
    let delay = ScaledComplex::exp(-s * p.tau);
    TermSum::new()
        .add(n.square())
        .add(-(n * d * delay))
        .add(-d.square())
        .finish()
}

fn deadbeat_inviscid_perturbed_terms(s: Complex64, p: &SystemParams) -> Residual {
    let tp = plant_delay(p);
    TermSum::new()
        .add(ScaledComplex::exp(-2.0 * s * tp))
        .add(-ScaledComplex::exp(-s * (tp + p.tau)))
        .add(-ScaledComplex::ONE)
        .finish()
}

/// `sinh(δ)/δ` and `cosh δ` in scaled arithmetic.
fn sinhc_cosh(delta: Complex64) -> (ScaledComplex, ScaledComplex) {
    if delta.norm() < 1e-3 {
        let d2 = delta * delta;
        let sinhc = 1.0 + d2 / 6.0 * (1.0 + d2 / 20.0 * (1.0 + d2 / 42.0));
        let cosh = 1.0 + d2 / 2.0 * (1.0 + d2 / 12.0 * (1.0 + d2 / 30.0));
        return (ScaledComplex::from_complex(sinhc), ScaledComplex::from_complex(cosh));
    }
    let ep = ScaledComplex::exp(delta);
    let em = ScaledComplex::exp(-delta);
    let sinhc = (ep - em).mul_complex(0.5 / delta);
    let cosh = (ep + em).scale(0.5);
    (sinhc, cosh)
}

fn simpler_terms(s: Complex64, p: &SystemParams) -> Residual {
    let c = p.speed_factor();
    let eta = p.eta;
    let lambda = c / (2.0 * eta);
    let delta = (c * c + 4.0 * eta * s).sqrt() / (2.0 * eta);
    let (sinhc, cosh) = sinhc_cosh(delta);
    let ratio = ScaledComplex::exp(Complex64::new(lambda, 0.0)) * (sinhc.scale(lambda) + cosh);
    let delay = ScaledComplex::exp(-s * p.tau);
    TermSum::new()
        .add(ratio)
        .add(ratio * delay)
        .add(-ScaledComplex::exp(Complex64::new(c / eta, 0.0)))
        .finish()
}

fn zform_terms(z: Complex64, eta: f64) -> Residual {
    let x = x_eta(z, eta).expect("validated viscous parameters");
    let decay = ScaledComplex::exp(-(z * z - 1.0) / (4.0 * eta));
    TermSum::new()
        .add(x.square())
        .add((decay * x).mul_complex(z))
        .add(-ScaledComplex::from_complex(z * z))
        .finish()
}

/// Open-loop inviscid residual `e^{2sτ} - 1`.
pub fn char_open_inviscid(s: Complex64, params: &SystemParams) -> ScaledComplex {
    open_inviscid_terms(s, params).value
}

/// Proportional-feedback inviscid residual `e^{2sτ} + 2k_p e^{sτ} - 1`.
pub fn char_prop_inviscid(s: Complex64, params: &SystemParams) -> ScaledComplex {
    prop_inviscid_terms(s, params).value
}

/// Pole-cleared dead-beat viscous residual `N² - N D e^{-sτ} - D²`, using
/// the perturbed velocity `1 + ε` from `params`.
pub fn char_deadbeat_viscous(s: Complex64, params: &SystemParams) -> Result<ScaledComplex, ModelError> {
    Ok(CharFn::new(Variant::DeadbeatViscousPerturbed, *params)?.value(s))
}

/// `X_η(z)² + z e^{-(z²-1)/4η} X_η(z) - z²`.
pub fn char_zform(z: Complex64, eta: f64) -> Result<ScaledComplex, ModelError> {
    if !(eta > 0.0) {
        return Err(ModelError::Inviscid(eta));
    }
    Ok(zform_terms(z, eta).value)
}

/// Simpler-loop residual `e^{c/η}(F_η(s) - 1)`.
pub fn char_simpler(s: Complex64, params: &SystemParams) -> Result<ScaledComplex, ModelError> {
    Ok(CharFn::new(Variant::SimplerSystem, *params)?.value(s))
}

/// `e^{-2s/(1+ε)} - e^{-s(1/(1+ε)+1)} - 1` for unit nominal velocity.
pub fn char_deadbeat_inviscid_perturbed(s: Complex64, eps: f64) -> Result<ScaledComplex, ModelError> {
    let params = SystemParams::unit().eps(eps)?;
    Ok(deadbeat_inviscid_perturbed_terms(s, &params).value)
}

/// Roots of `w² + 2k₁w + (k₂ - 1)` and whether both lie strictly inside
/// the unit circle.
pub fn schur_poly_roots(k1: f64, k2: f64) -> (Complex64, Complex64, bool) {
    let disc = Complex64::new(k1 * k1 - k2 + 1.0, 0.0).sqrt();
    let b = Complex64::new(k1, 0.0);
    // pick the sign that avoids cancellation, recover the other root from
    // the product k2 - 1
    let big = if k1 >= 0.0 { -b - disc } else { -b + disc };
    let (w1, w2) = if big.norm() == 0.0 {
        (big, big)
    } else {
        (big, Complex64::new(k2 - 1.0, 0.0) / big)
    };
    let stable = w1.norm() < 1.0 && w2.norm() < 1.0;
    (w1, w2, stable)
}
