//! Scalar abstraction: every numerical kernel is generic over the float width.

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Real scalar type for all kernels. Implemented by `f32` and `f64`.
///
/// Algorithms take tolerances relative to [`FloatScalar::eps`], so the same
/// code paths run at both widths; acceptance-grade accuracy targets assume
/// `f64`.
pub trait FloatScalar:
    Float
    + FromPrimitive
    + NumAssignOps
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
    + 'static
{
    /// Lifts an `f64` constant baked into an algorithm (Pade coefficients,
    /// safety factors) into `Self`.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("algorithm constant must be representable")
    }

    /// Machine epsilon of the width.
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl FloatScalar for f32 {}
impl FloatScalar for f64 {}

/// Complex number over the generic scalar, re-exported so downstream modules
/// name one type.
pub type C<T> = num_complex::Complex<T>;

/// Complex constant from two `f64` parts.
pub fn cpx<T: FloatScalar>(re: f64, im: f64) -> C<T> {
    C::new(T::c(re), T::c(im))
}
