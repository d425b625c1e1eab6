//! Dense linear-algebra kernels: the operator representation after
//! truncation, spectral norms, eigenvalues, exponential, principal
//! logarithm, and Riesz spectral projections.
//!
//! Everything is a pure function of immutable inputs; all iterations are
//! deterministic (no randomized starts), so repeated runs reproduce results
//! bit for bit.

pub mod eig;
pub mod expm;
pub mod logm;
pub mod lu;
pub mod matrix;
pub mod norm;
pub mod riesz;

pub use eig::{eigenvalues, spectral_radius};
pub use expm::matrix_exp;
pub use logm::matrix_log;
pub use lu::Lu;
pub use matrix::{abs_c, vec_norm, Matrix};
pub use norm::operator_norm;
pub use riesz::{riesz_projection, Contour};
