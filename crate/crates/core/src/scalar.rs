//! Scalar abstraction shared by every numerical module.
//!
//! All signal-processing and optimization code is written against [`Scalar`]
//! so that the same routines run in `f32` (fast previews) and `f64`
//! (reference accuracy).

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point type usable by the simulator: `f32` or `f64`.
pub trait Scalar: RealField + Copy + FftNum + FromPrimitive + ToPrimitive {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    nalgebra::convert(n as f64)
}

/// Lossy conversion back to `f64` (exact for `f32`/`f64`).
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

/// Absolute value without the `Signed`/`ComplexField` method ambiguity.
#[inline]
pub fn abs<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

/// `exp(j·phase)`.
#[inline]
pub fn cis<T: Scalar>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Modulus of a complex number.
#[inline]
pub fn modulus<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Argument of a complex number in `(-π, π]`.
#[inline]
pub fn arg<T: Scalar>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

#[inline]
pub fn cplx<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Scalar>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// Real scalar lifted to the complex plane.
#[inline]
pub fn creal<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}
