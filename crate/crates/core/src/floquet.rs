//! The planar pulse-stabilization example: a constant coefficient with one
//! growing direction, interrupted once per period by a brief quarter-turn
//! rotation.  The period map has an explicit closed form, so this module is
//! both an end in itself and a sharp test of the propagator.

use crate::error::{Error, Result};
use crate::evolution::TimeVaryingOperator;
use crate::linalg::Matrix;
use crate::scalar::{C, FloatScalar};

// ── Parameters ──────────────────────────────────────────────────────────────

/// Rates and timing of the pulsed planar system: off-pulse coefficient
/// diag(alpha_f, -beta_f) with 0 < alpha_f < beta_f, period `period`, and a
/// rotation pulse filling the final `width` of each period.
#[derive(Clone, Copy, Debug)]
pub struct FloquetParams<T> {
    pub alpha_f: T,
    pub beta_f: T,
    pub period: T,
    pub width: T,
}

impl<T: FloatScalar> FloquetParams<T> {
    pub fn new(alpha_f: T, beta_f: T, period: T, width: T) -> Result<Self> {
        let p = FloquetParams { alpha_f, beta_f, period, width };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_f > T::zero()) || !(self.beta_f > self.alpha_f) {
            return Err(Error::Parameter(format!(
                "rates must satisfy 0 < alpha_f < beta_f, got alpha_f = {}, beta_f = {}",
                self.alpha_f, self.beta_f
            )));
        }
        if !(self.width > T::zero()) || !(self.width < self.period) {
            return Err(Error::Parameter(format!(
                "pulse width must satisfy 0 < width < period, got width = {}, period = {}",
                self.width, self.period
            )));
        }
        for v in [self.alpha_f, self.beta_f, self.period, self.width] {
            if !v.is_finite() {
                return Err(Error::Parameter("parameters must be finite".into()));
            }
        }
        Ok(())
    }

    /// The off-pulse coefficient diag(alpha_f, -beta_f).
    pub fn drift(&self) -> Matrix<T> {
        Matrix::diag_real(&[self.alpha_f, -self.beta_f])
    }

    /// The on-pulse coefficient: the rotation generator with entries
    /// +-pi/(2 width), turning the plane a quarter turn over one pulse.
    pub fn rotation(&self) -> Matrix<T> {
        let rate = T::c(std::f64::consts::FRAC_PI_2) / self.width;
        let mut r = Matrix::zeros(2);
        r.set(0, 1, C::new(rate, T::zero()));
        r.set(1, 0, C::new(-rate, T::zero()));
        r
    }
}

// ── Operations ──────────────────────────────────────────────────────────────

/// The periodic coefficient: drift on [0, period - width), rotation on the
/// half-open pulse [period - width, period), repeating.
pub fn pulse_operator<T: FloatScalar>(p: &FloquetParams<T>) -> Result<TimeVaryingOperator<T>> {
    p.validate()?;
    TimeVaryingOperator::periodic_pulse(vec![
        (p.period - p.width, p.drift()),
        (p.width, p.rotation()),
    ])
}

/// The period map in closed form: the quarter turn composed with the diagonal
/// stretch, [[0, e^{-beta_f (period - width)}], [-e^{alpha_f (period - width)}, 0]].
pub fn monodromy_closed_form<T: FloatScalar>(p: &FloquetParams<T>) -> Result<Matrix<T>> {
    p.validate()?;
    let hold = p.period - p.width;
    let mut y = Matrix::zeros(2);
    y.set(0, 1, C::new((-p.beta_f * hold).exp(), T::zero()));
    y.set(1, 0, C::new(-(p.alpha_f * hold).exp(), T::zero()));
    Ok(y)
}

/// The period map's eigenvalues, +-i e^{(alpha_f - beta_f)(period - width)/2}.
/// Their common modulus is strictly below 1 for every valid parameter choice.
pub fn multipliers<T: FloatScalar>(p: &FloquetParams<T>) -> Result<(C<T>, C<T>)> {
    p.validate()?;
    let hold = p.period - p.width;
    let modulus = ((p.alpha_f - p.beta_f) * hold * T::c(0.5)).exp();
    Ok((
        C::new(T::zero(), modulus),
        C::new(T::zero(), -modulus),
    ))
}

/// The common multiplier modulus, sqrt(e^{(alpha_f - beta_f)(period - width)}).
pub fn multiplier_modulus<T: FloatScalar>(p: &FloquetParams<T>) -> Result<T> {
    p.validate()?;
    Ok(((p.alpha_f - p.beta_f) * (p.period - p.width) * T::c(0.5)).exp())
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{certify_bound, propagator, Propagator};
    use crate::linalg::{eigenvalues, matrix_exp, operator_norm};

    fn params(alpha: f64, beta: f64, period: f64, width: f64) -> FloquetParams<f64> {
        FloquetParams::new(alpha, beta, period, width).unwrap()
    }

    #[test]
    fn coefficient_is_drift_off_pulse_and_rotation_on_pulse() {
        let p = params(1.0, 2.0, 2.0, 0.5);
        let op = pulse_operator(&p).unwrap();
        assert_eq!(op.eval(0.0), p.drift());
        assert_eq!(op.eval(1.75), p.rotation());
        // And again in the next period.
        assert_eq!(op.eval(2.3), p.drift());
        assert_eq!(op.eval(3.8), p.rotation());
    }

    #[test]
    fn pulse_exponential_is_a_quarter_turn() {
        let p = params(1.0, 2.0, 2.0, 1.0);
        let e = matrix_exp(&p.rotation().scale_real(p.width)).unwrap();
        let want = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        assert!(e.sub(&want).max_abs() < 1e-14);
    }

    #[test]
    fn closed_form_at_the_worked_parameters() {
        let y = monodromy_closed_form(&params(1.0, 2.0, 2.0, 1.0)).unwrap();
        assert!((y[(0, 1)].re - (-2.0f64).exp()).abs() < 1e-15);
        assert!((y[(1, 0)].re + 1.0f64.exp()).abs() < 1e-15);
        assert_eq!(y[(0, 0)].re, 0.0);
        assert_eq!(y[(1, 1)].re, 0.0);
    }

    #[test]
    fn integrated_monodromy_matches_the_closed_form() {
        for (a, b, t, d) in [(1.0, 2.0, 2.0, 0.5), (0.5, 3.0, 5.0, 1.0)] {
            let p = params(a, b, t, d);
            let op = pulse_operator(&p).unwrap();
            let num = propagator(&op, 0.0, p.period, 1e-12).unwrap();
            let closed = monodromy_closed_form(&p).unwrap();
            let rel = num.sub(&closed).max_abs() / closed.max_abs();
            assert!(rel < 1e-8, "relative error {rel}");
        }
    }

    #[test]
    fn multiplier_modulus_evaluates_and_bounds() {
        let m = multiplier_modulus(&params(1.0, 2.0, 10.0, 1.0)).unwrap();
        assert!((m - (-4.5f64).exp()).abs() < 1e-15);
        // Approaching alpha = beta from below pushes the modulus toward 1.
        let close = multiplier_modulus(&params(2.0 - 1e-9, 2.0, 10.0, 1.0)).unwrap();
        assert!(close < 1.0 && close > 1.0 - 1e-7);
    }

    #[test]
    fn multipliers_match_a_dense_eigenvalue_oracle() {
        let p = params(0.5, 2.0, 5.0, 0.5);
        let y = monodromy_closed_form(&p).unwrap();
        let mut eigs = eigenvalues(&y).unwrap();
        eigs.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        let (lp, lm) = multipliers(&p).unwrap();
        assert!((eigs[1] - lp).norm() < 1e-10);
        assert!((eigs[0] - lm).norm() < 1e-10);
    }

    #[test]
    fn pulsed_system_certifies_decay_at_the_multiplier_rate() {
        let p = params(1.0, 2.0, 2.0, 0.5);
        let op = pulse_operator(&p).unwrap();
        let prop = Propagator::new(&op, 1e-10).unwrap();
        let rate = multiplier_modulus(&p).unwrap().ln() / p.period;
        // Fit the prefactor to the measured transient, then certify.
        let mut c = 1.0f64;
        let horizon = 5.0 * p.period;
        let mut pairs = Vec::new();
        let mut t = 0.25f64;
        while t <= horizon {
            pairs.push((0.0, t));
            t += 0.25;
        }
        for &(s, t) in &pairs {
            let n = operator_norm(&prop.matrix(s, t).unwrap()).unwrap();
            c = c.max(1.05 * n / (rate * (t - s)).exp());
        }
        let cert = certify_bound(&prop, c, rate, &pairs, 1e-6).unwrap();
        assert!(cert.passed(), "max ratio {}", cert.max_ratio);
    }

    #[test]
    fn unpulsed_drift_grows() {
        let p = params(1.0, 2.0, 2.0, 0.5);
        let op = TimeVaryingOperator::constant(p.drift()).unwrap();
        let n = operator_norm(&propagator(&op, 0.0, 3.0, 1e-10).unwrap()).unwrap();
        assert!((n - 3.0f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(FloquetParams::new(2.0, 1.0, 5.0, 1.0).is_err());
        assert!(FloquetParams::new(0.0, 1.0, 5.0, 1.0).is_err());
        assert!(FloquetParams::new(0.5, 1.0, 1.0, 1.0).is_err());
        assert!(FloquetParams::new(0.5, 1.0, 1.0, 0.0).is_err());
    }
}
