//! The experiment implementations behind every subcommand.
//!
//! Each runner takes the flat parameter map plus the shared context, writes
//! a manifest and one CSV per result table into the output directory, and
//! returns whether the run's verdict passed.  A `false` return is not an
//! error: it maps to exit code 1 (certification fail).

use std::path::PathBuf;

pub mod bounds;
pub mod certify;
pub mod floquet;
pub mod kakutani;
pub mod shifts;
pub mod signals;
pub mod sweep;

/// Flags shared by every command.
pub struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
    pub svg: bool,
    /// Global integration-tolerance override; each experiment has its own
    /// default when unset.
    pub tol: Option<f64>,
}

impl Ctx {
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}
