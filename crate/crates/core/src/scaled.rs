//! Complex numbers with a detached exponent.
//!
//! Characteristic functions of the viscous loops contain factors such as
//! `exp(λ₁)` whose real part reaches several hundred for moderate `|s|`, so
//! plain `f64` arithmetic overflows long before the phase stops being
//! meaningful. [`ScaledComplex`] keeps `value = mantissa · e^exponent` with
//! `|mantissa| ∈ [1, 2)`, which preserves the phase exactly and keeps the
//! magnitude representable as a logarithm.

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Below this exponent gap the smaller operand of a sum no longer changes a
/// single bit of the larger one.
const NEGLIGIBLE_GAP: f64 = -800.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exponent: f64,
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: 0.0,
    };

    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(1.0, 0.0),
        exponent: 0.0,
    };

    /// Builds `mantissa · e^exponent` and normalizes it.
    pub fn new(mantissa: Complex64, exponent: f64) -> Self {
        Self { mantissa, exponent }.normalized()
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z, 0.0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), 0.0)
    }

    /// `e^z` without ever forming `e^{Re z}` as a float.
    pub fn exp(z: Complex64) -> Self {
        let (sin, cos) = z.im.sin_cos();
        Self::new(Complex64::new(cos, sin), z.re)
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite() && self.exponent.is_finite()
    }

    /// Phase in `(-π, π]`; zero for the zero value.
    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// `ln |value|`, `-∞` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().ln() + self.exponent
        }
    }

    /// Converts back to an ordinary complex number. Overflows to infinity or
    /// underflows to zero when the magnitude leaves the `f64` range.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        // split the exponent so a large mantissa-free factor does not
        // overflow before multiplication by a mantissa below one
        let half = 0.5 * self.exponent;
        let scale = half.exp();
        self.mantissa * scale * scale
    }

    pub fn conj(&self) -> Self {
        Self {
            mantissa: self.mantissa.conj(),
            exponent: self.exponent,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.mantissa * factor, self.exponent)
    }

    pub fn mul_complex(&self, z: Complex64) -> Self {
        Self::new(self.mantissa * z, self.exponent)
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    /// `self / other`; `None` when `other` is exactly zero.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            None
        } else {
            Some(Self::new(
                self.mantissa / other.mantissa,
                self.exponent - other.exponent,
            ))
        }
    }

    /// Phase increment `arg(other / self)` in `(-π, π]`.
    pub fn phase_step_to(&self, other: &Self) -> f64 {
        (other.mantissa * self.mantissa.conj()).arg()
    }

    fn normalized(self) -> Self {
        let m = self.mantissa;
        if !(m.re.is_finite() && m.im.is_finite()) || !self.exponent.is_finite() {
            return self;
        }
        let r = m.norm();
        if r == 0.0 {
            return Self::ZERO;
        }
        let mut k = r.log2().floor();
        let mut mantissa = m * (-k).exp2();
        // log2 rounding can land one binade off
        let rn = mantissa.norm();
        if rn >= 2.0 {
            mantissa *= 0.5;
            k += 1.0;
        } else if rn < 1.0 {
            mantissa *= 2.0;
            k -= 1.0;
        }
        Self {
            mantissa,
            exponent: self.exponent + k * LN_2,
        }
    }
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl From<f64> for ScaledComplex {
    fn from(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Mul for ScaledComplex {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for ScaledComplex {
    type Output = Self;

    /// Panics on division by exact zero; use [`ScaledComplex::checked_div`]
    /// where that can happen.
    fn div(self, rhs: Self) -> Self {
        self.checked_div(&rhs)
            .expect("ScaledComplex division by zero")
    }
}

impl Add for ScaledComplex {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = small.exponent - big.exponent;
        if gap < NEGLIGIBLE_GAP {
            return big;
        }
        Self::new(big.mantissa + small.mantissa * gap.exp(), big.exponent)
    }
}

impl Neg for ScaledComplex {
    type Output = Self;

    fn neg(self) -> Self {
        if self.is_zero() {
            return self;
        }
        Self {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Sub for ScaledComplex {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl fmt::Display for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} {:+}i)·e^{}",
            self.mantissa.re, self.mantissa.im, self.exponent
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_is_canonical() {
        let z = ScaledComplex::new(c(0.0, 0.0), 17.0);
        assert_eq!(z, ScaledComplex::ZERO);
        assert_eq!((z * ScaledComplex::from_real(3.0)).exponent(), 0.0);
        assert_eq!(ScaledComplex::ONE - ScaledComplex::ONE, ScaledComplex::ZERO);
    }

    #[test]
    fn mantissa_is_normalized() {
        for v in [1e-300, 0.3, 1.0, 1.999_999, 2.0, 7.5e10, 1e300] {
            let s = ScaledComplex::from_complex(c(v, -v / 3.0));
            let r = s.mantissa().norm();
            assert!((1.0..2.0).contains(&r), "{v}: {r}");
        }
    }

    #[test]
    fn exp_keeps_huge_values() {
        let z = ScaledComplex::exp(c(5000.0, 1.25));
        assert!((z.ln_abs() - 5000.0).abs() < 1e-9);
        assert!((z.arg() - 1.25).abs() < 1e-15);
        let w = z * ScaledComplex::exp(c(-4999.0, 0.0));
        let expect = Complex64::new(0.0, 1.25).exp() * std::f64::consts::E;
        assert!((w.to_complex() - expect).norm() < 1e-12);
    }

    #[test]
    fn negligible_addend_is_dropped() {
        let big = ScaledComplex::exp(c(1000.0, 0.0));
        let small = ScaledComplex::exp(c(-1000.0, 0.0));
        assert_eq!(big + small, big);
    }

    fn scaled_operand() -> impl Strategy<Value = (Complex64, f64)> {
        (-10.0f64..10.0, -10.0f64..10.0, -300.0f64..300.0)
            .prop_filter("nonzero", |(a, b, _)| a.abs() + b.abs() > 1e-3)
            .prop_map(|(a, b, e)| (c(a, b), e))
    }

    fn phase_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d)
    }

    proptest! {
        #[test]
        fn product_phase_matches_plain((a, ea) in scaled_operand(), (b, eb) in scaled_operand()) {
            let sa = ScaledComplex::new(a, ea);
            let sb = ScaledComplex::new(b, eb);
            let plain = a * b;
            prop_assert!(phase_diff((sa * sb).arg(), plain.arg()) < 1e-12);
            prop_assert!(phase_diff((sa / sb).arg(), (a / b).arg()) < 1e-12);
        }

        #[test]
        fn sum_phase_matches_plain(a in scaled_operand(), b in scaled_operand(), shift in -300.0f64..300.0) {
            // use a shared exponent so the plain computation stays finite
            let (za, zb) = (a.0 * (a.1 / 100.0).exp(), b.0 * (b.1 / 100.0).exp());
            let sa = ScaledComplex::new(za, shift);
            let sb = ScaledComplex::new(zb, shift);
            let plain = za + zb;
            prop_assume!(plain.norm() > 1e-3 * (za.norm() + zb.norm()));
            let sum = sa + sb;
            prop_assert!(phase_diff(sum.arg(), plain.arg()) < 1e-12);
            prop_assert!((sum.ln_abs() - shift - plain.norm().ln()).abs() < 1e-10);
        }
    }
}
