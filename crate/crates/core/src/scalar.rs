//! Scalar abstraction shared by every numerical module.
//!
//! Numerical code is written once against [`Real`] and instantiated for
//! `f32` and `f64`. Mask coefficients, scale matrices and Jordan data are
//! complex-valued over the chosen real type. Purely algebraic code (the
//! lifted-matrix calculus) is generic over any `num_traits::Num` ring so it
//! can run in exact rational arithmetic.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point type usable by the numerical modules: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;
/// Dense complex matrix over `T`.
pub type CMat<T> = DMatrix<Complex<T>>;
/// Dense complex vector over `T`.
pub type CVec<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    <T as FromPrimitive>::from_f64(x).expect("f64 literal representable in target type")
}

/// Converts `T` back to `f64` (for reporting and serialization).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    <T as ToPrimitive>::to_f64(&x).unwrap_or(f64::NAN)
}

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cre<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// Largest entry modulus of a complex slice (0 for an empty slice).
pub fn max_abs<T: Real>(values: &[Complex<T>]) -> T {
    values
        .iter()
        .map(|z| cabs(*z))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Machine epsilon of `T`.
#[inline]
pub fn eps<T: Real>() -> T {
    T::default_epsilon()
}
