//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point type the simulator can run on: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Tolerance used for structural invariants (normalization, hermiticity).
    fn tight_tolerance() -> Self;

    /// Tolerance used for preconditions on states produced by approximate methods.
    fn loose_tolerance() -> Self;
}

impl Real for f64 {
    fn tight_tolerance() -> Self {
        1e-12
    }

    fn loose_tolerance() -> Self {
        1e-6
    }
}

impl Real for f32 {
    fn tight_tolerance() -> Self {
        1e-5
    }

    fn loose_tolerance() -> Self {
        1e-3
    }
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count or index into the working scalar type.
#[inline]
pub fn from_usize<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("usize representable in scalar type")
}

/// Lossy conversion used for diagnostics and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// The imaginary unit.
#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = theta % two_pi;
    if w <= -T::PI() {
        w += two_pi;
    } else if w > T::PI() {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_stays_in_principal_range() {
        for k in -20..20 {
            let theta = 0.3 + k as f64 * std::f64::consts::PI;
            let w = wrap_angle(theta);
            assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
            assert!(
                ((theta - w) / (2.0 * std::f64::consts::PI)).fract().abs() < 1e-9
                    || (((theta - w) / (2.0 * std::f64::consts::PI)).fract().abs() - 1.0).abs()
                        < 1e-9
            );
        }
    }

    #[test]
    fn literals_round_trip_for_both_widths() {
        assert_eq!(lit::<f64>(0.25), 0.25);
        assert_eq!(lit::<f32>(0.25), 0.25f32);
        assert_eq!(from_usize::<f32>(7), 7.0);
    }
}
