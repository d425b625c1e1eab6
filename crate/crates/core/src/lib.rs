//! Numerical laboratory for the stability of nonautonomous linear ODEs
//! x' = A(t)x + B(t)x on finite-dimensional truncations.
//!
//! The crate certifies exponential bounds on evolution operators against
//! sampled evidence: robustness of stability under integrally small
//! perturbations, stabilization by rapid oscillation, stabilization by
//! large-period pulses, and stabilization of an unstable weighted-shift
//! system by arbitrarily small static or scheduled perturbations.
//!
//! Modules:
//! - [`linalg`]: dense kernels (norms, eigenvalues, exp, log, projections)
//! - [`shifts`]: weighted shifts, the ruler weight sequence, masked shifts
//! - [`signals`]: scalar coefficient signals, mean values, integral smallness
//! - [`evolution`]: propagators and certification of exponential bounds
//! - [`bounds`]: closed-form bound calculators and hypothesis checkers
//! - [`floquet`]: the planar large-period pulse example
//! - [`kakutani`]: ruler-shift stabilization, static and scheduled
//!
//! All numerical kernels are generic over the scalar width through
//! [`scalar::FloatScalar`]; the concrete aliases below fix `f64`, the width
//! every accuracy target is stated for.

pub mod bounds;
pub mod error;
pub mod evolution;
pub mod floquet;
pub mod kakutani;
pub mod linalg;
pub mod scalar;
pub mod shifts;
pub mod signals;

pub use error::{Error, Result};

/// Crate version, echoed into experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense matrix at the default width.
pub type Matrix64 = linalg::Matrix<f64>;
/// Dense matrix at single precision (smoke-test width).
pub type Matrix32 = linalg::Matrix<f32>;
/// Scalar coefficient signal at the default width.
pub type Signal64 = signals::Signal<f64>;
/// Time-dependent coefficient at the default width.
pub type Operator64 = evolution::TimeVaryingOperator<f64>;
