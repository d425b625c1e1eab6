//! Closed-form bound calculators and hypothesis checkers for the robustness
//! machinery: the perturbed exponent formula, stability regions in the
//! (h, delta) plane, the rapid-oscillation frequency threshold, the weighted
//! shift example's constraints, and the averaged-smallness triple.

use crate::error::{Error, Result};
use crate::evolution::TimeVaryingOperator;
use crate::linalg::{operator_norm, Matrix};
use crate::scalar::FloatScalar;

// ── Parameter bundles ───────────────────────────────────────────────────────

/// Inputs to the perturbed-exponent formula: the unperturbed system satisfies
/// `||T(t, s)|| <= K e^{alpha (t - s)}`, the perturbation is bounded by M in
/// norm, and its integrals over windows of length at most h stay below delta.
#[derive(Clone, Copy, Debug)]
pub struct RobustnessParams<T> {
    pub alpha: T,
    pub k: T,
    pub m: T,
    pub delta: T,
    pub h: T,
}

impl<T: FloatScalar> RobustnessParams<T> {
    pub fn new(alpha: T, k: T, m: T, delta: T, h: T) -> Result<Self> {
        let p = RobustnessParams { alpha, k, m, delta, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Parameter(format!(
                "exponent alpha must be finite, got {}",
                self.alpha
            )));
        }
        if !(self.k >= T::one()) || !self.k.is_finite() {
            return Err(Error::Parameter(format!(
                "prefactor K must be at least 1, got {}",
                self.k
            )));
        }
        if !(self.m > T::zero()) || !self.m.is_finite() {
            return Err(Error::Parameter(format!(
                "norm bound M must be positive, got {}",
                self.m
            )));
        }
        if !(self.delta >= T::zero()) || !self.delta.is_finite() {
            return Err(Error::Parameter(format!(
                "smallness delta must be nonnegative, got {}",
                self.delta
            )));
        }
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(Error::Parameter(format!(
                "window length h must be positive, got {}",
                self.h
            )));
        }
        Ok(())
    }
}

/// Parameters of the weighted-shift example on the N-dimensional truncation:
/// diagonal a, first subdiagonal weight nu.
#[derive(Clone, Copy, Debug)]
pub struct L2ExampleParams<T> {
    pub a: T,
    pub nu: T,
    pub n: usize,
}

impl<T: FloatScalar> L2ExampleParams<T> {
    pub fn new(a: T, nu: T, n: usize) -> Result<Self> {
        if !(a > T::zero() && a < T::one()) {
            return Err(Error::Parameter(format!(
                "diagonal parameter a must lie strictly inside (0, 1), got {a}"
            )));
        }
        if !(nu > T::zero()) || !nu.is_finite() {
            return Err(Error::Parameter(format!(
                "shift weight nu must be positive, got {nu}"
            )));
        }
        if n < 2 {
            return Err(Error::Parameter(format!(
                "truncation dimension must be at least 2, got {n}"
            )));
        }
        Ok(L2ExampleParams { a, nu, n })
    }
}

// ── The perturbed exponent ──────────────────────────────────────────────────

/// The perturbed decay exponent `alpha + 3 M K delta + log((1 + delta) K) / h`,
/// evaluated exactly as written.
pub fn beta_bound<T: FloatScalar>(p: &RobustnessParams<T>) -> Result<T> {
    p.validate()?;
    Ok(p.alpha
        + T::c(3.0) * p.m * p.k * p.delta
        + ((T::one() + p.delta) * p.k).ln() / p.h)
}

/// One column of the stability region: for a window length h, how much
/// averaged perturbation the exponent formula tolerates before turning
/// nonnegative.
#[derive(Clone, Copy, Debug)]
pub struct RegionSample<T> {
    pub h: T,
    /// Largest delta from the query grid keeping the exponent negative, if any.
    pub grid_delta: Option<T>,
    /// The feasibility boundary refined by bisection to 1e-10, reported from
    /// the feasible side (the exponent is strictly negative there), if the
    /// region at this h is nonempty.
    pub boundary: Option<T>,
}

/// Sweeps the exponent formula over h and delta: for each h the largest grid
/// delta with a negative exponent, plus the bisection-refined boundary.  The
/// formula is strictly increasing in delta, so bisection is exact.  An empty
/// region at some h is a valid result.
pub fn stability_region<T: FloatScalar>(
    alpha: T,
    m: T,
    k: T,
    h_grid: &[T],
    delta_grid: &[T],
) -> Result<Vec<RegionSample<T>>> {
    if !(alpha < T::zero()) {
        return Err(Error::Parameter(format!(
            "stability region requires a negative unperturbed exponent, got {alpha}"
        )));
    }
    if h_grid.is_empty() {
        return Err(Error::InvalidInput("empty h grid".into()));
    }
    let mut out = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let beta_at = |delta: T| -> Result<T> {
            beta_bound(&RobustnessParams { alpha, k, m, delta, h })
        };
        // Feasibility at delta = 0 decides emptiness: beta is increasing in
        // delta, so a nonnegative value at zero closes the whole column.
        if !(beta_at(T::zero())? < T::zero()) {
            out.push(RegionSample { h, grid_delta: None, boundary: None });
            continue;
        }
        let mut grid_delta = None;
        for &d in delta_grid {
            if beta_at(d)? < T::zero() && grid_delta.map_or(true, |g| d > g) {
                grid_delta = Some(d);
            }
        }
        // Bracket the sign change by doubling, then bisect.  lo stays strictly
        // feasible throughout, and is what we report.
        let mut lo = T::zero();
        let mut hi = T::one();
        let mut guard = 0;
        while beta_at(hi)? < T::zero() {
            lo = hi;
            hi = hi * T::c(2.0);
            guard += 1;
            if guard > 600 {
                return Err(Error::Numeric(
                    "stability boundary bracket did not close; exponent never \
                     turns nonnegative"
                        .into(),
                ));
            }
        }
        while hi - lo > T::c(1e-10) {
            let mid = (lo + hi) * T::c(0.5);
            if beta_at(mid)? < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(RegionSample { h, grid_delta, boundary: Some(lo) });
    }
    Ok(out)
}

/// The oscillation-frequency threshold `M T0 / delta`: dilating a zero-mean
/// perturbation by any omega at or above it drives the window integrals below
/// delta.
pub fn omega_threshold<T: FloatScalar>(m: T, t0: T, delta: T) -> Result<T> {
    for (name, v) in [("M", m), ("T0", t0), ("delta", delta)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Parameter(format!(
                "omega threshold requires positive finite {name}, got {v}"
            )));
        }
    }
    Ok(m * t0 / delta)
}

// ── The weighted-shift example's constraints ────────────────────────────────

/// Feasibility report for the weighted-shift example.
#[derive(Clone, Copy, Debug)]
pub struct L2Report<T> {
    /// Whether 0 < nu < min(a, 1 - a) holds.
    pub constraint_ok: bool,
    /// -log(1 - nu/a), the norm bound on the non-diagonal part of the
    /// generator's logarithm (infinite when nu >= a).
    pub log_bound: T,
    /// Whether the decay conclusion applies: log_bound < a / 2.
    pub decay_ok: bool,
    /// The decay rate used downstream when decay_ok: a / 2.
    pub predicted_rate: T,
}

/// Checks the weighted-shift example's parameter constraints and reports the
/// log bound together with the predicted decay rate.
pub fn l2_example_check<T: FloatScalar>(p: &L2ExampleParams<T>) -> Result<L2Report<T>> {
    L2ExampleParams::new(p.a, p.nu, p.n)?;
    let constraint_ok = p.nu < p.a.min(T::one() - p.a);
    let log_bound = if p.nu < p.a {
        -(T::one() - p.nu / p.a).ln()
    } else {
        T::infinity()
    };
    let predicted_rate = p.a * T::c(0.5);
    let decay_ok = constraint_ok && log_bound < predicted_rate;
    Ok(L2Report { constraint_ok, log_bound, decay_ok, predicted_rate })
}

// ── The averaged-smallness triple ───────────────────────────────────────────

/// Worst case found by the smallness-triple check.
#[derive(Clone, Copy, Debug)]
pub struct TripleWorst<T> {
    pub t: T,
    pub u: T,
    /// Which product: 0 for C B(u), 1 for C A, 2 for A C.
    pub which: usize,
    pub norm: T,
}

/// Outcome of the smallness-triple check.
#[derive(Clone, Copy, Debug)]
pub struct TripleReport<T> {
    /// Worst norm divided by M delta (zero when everything vanished).
    pub worst_ratio: T,
    pub pass: bool,
    pub worst: TripleWorst<T>,
}

/// Checks, over a (t, u) grid with |u - t| <= h, that the running integrals
/// C_t(u) of the perturbation keep all three products C B(u), C A, A C below
/// M delta in norm.  C_t(u) is computed by quadrature.
pub fn smallness_triple_check<T: FloatScalar>(
    a: &Matrix<T>,
    bfun: &TimeVaryingOperator<T>,
    h: T,
    m: T,
    delta: T,
    t_grid: &[T],
    offsets_per_side: usize,
) -> Result<TripleReport<T>> {
    a.validate()?;
    if a.dim() != bfun.dim() {
        return Err(Error::InvalidInput(format!(
            "matrix dimension {} does not match perturbation dimension {}",
            a.dim(),
            bfun.dim()
        )));
    }
    if !(h > T::zero()) || t_grid.is_empty() || offsets_per_side == 0 {
        return Err(Error::InvalidInput(
            "triple check needs a positive h, a nonempty t grid, and at least \
             one offset per side"
                .into(),
        ));
    }
    let budget = m * delta;
    let qtol = T::c(1e-11) * T::one().max(budget);
    let mut worst = TripleWorst { t: t_grid[0], u: t_grid[0], which: 0, norm: T::zero() };
    for &t in t_grid {
        for side in [-T::one(), T::one()] {
            for j in 1..=offsets_per_side {
                let u = t + side * h * T::c(j as f64) / T::c(offsets_per_side as f64);
                let c = integrate_operator(bfun, t, u, qtol)?;
                let b_u = bfun.eval(u);
                let candidates = [
                    (0usize, operator_norm(&c.matmul(&b_u))?),
                    (1, operator_norm(&c.matmul(a))?),
                    (2, operator_norm(&a.matmul(&c))?),
                ];
                for (which, norm) in candidates {
                    if norm > worst.norm {
                        worst = TripleWorst { t, u, which, norm };
                    }
                }
            }
        }
    }
    let worst_ratio = if worst.norm == T::zero() {
        T::zero()
    } else if budget == T::zero() {
        T::infinity()
    } else {
        worst.norm / budget
    };
    Ok(TripleReport { worst_ratio, pass: worst_ratio <= T::one(), worst })
}

/// Entrywise integral of a time-varying matrix over [lo, hi], sign-reversed
/// when hi < lo.  Delegates to the operator's structural integral, which is
/// exact except for the scalar quadrature inside signal products.
pub(crate) fn integrate_operator<T: FloatScalar>(
    op: &TimeVaryingOperator<T>,
    lo: T,
    hi: T,
    tol: T,
) -> Result<Matrix<T>> {
    if hi < lo {
        return Ok(op.integral(hi, lo, tol)?.scale_real(-T::one()));
    }
    op.integral(lo, hi, tol)
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Signal;

    fn rp(alpha: f64, k: f64, m: f64, delta: f64, h: f64) -> RobustnessParams<f64> {
        RobustnessParams { alpha, k, m, delta, h }
    }

    #[test]
    fn vanishing_perturbation_returns_the_bare_exponent() {
        let b = beta_bound(&rp(-0.7, 1.0, 2.0, 0.0, 3.0)).unwrap();
        assert_eq!(b, -0.7);
    }

    #[test]
    fn worked_exponent_value() {
        let b = beta_bound(&rp(-1.0, 2.0, 1.0, 0.01, 10.0)).unwrap();
        // -1 + 3 * 0.01 * 2 + ln(2.02) / 10, quoted rounded as -0.86967.
        assert!((b + 0.86967).abs() < 5e-5);
        assert!((b - (-1.0 + 0.06 + 2.02f64.ln() / 10.0)).abs() < 1e-15);
    }

    #[test]
    fn exponent_is_monotone_in_each_parameter() {
        let base = beta_bound(&rp(-1.0, 2.0, 1.0, 0.05, 5.0)).unwrap();
        assert!(beta_bound(&rp(-1.0, 2.0, 1.0, 0.06, 5.0)).unwrap() > base);
        assert!(beta_bound(&rp(-1.0, 2.0, 1.0, 0.05, 6.0)).unwrap() < base);
        assert!(beta_bound(&rp(-1.0, 2.1, 1.0, 0.05, 5.0)).unwrap() > base);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(beta_bound(&rp(-1.0, 0.9, 1.0, 0.0, 1.0)).is_err());
        assert!(beta_bound(&rp(-1.0, 1.0, 0.0, 0.0, 1.0)).is_err());
        assert!(beta_bound(&rp(-1.0, 1.0, 1.0, -0.1, 1.0)).is_err());
        assert!(beta_bound(&rp(-1.0, 1.0, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn boundary_approaches_one_third_for_wide_windows() {
        // With K = 1 the boundary solves 3 M delta + log(1 + delta)/h = -alpha;
        // as h grows the log term dies and delta* -> -alpha / (3 M) = 1/3.
        let samples =
            stability_region::<f64>(-1.0, 1.0, 1.0, &[1e8], &[0.0, 0.1, 0.2, 0.3]).unwrap();
        let b = samples[0].boundary.unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-6);
        assert_eq!(samples[0].grid_delta, Some(0.3));
    }

    #[test]
    fn infeasible_column_reports_empty() {
        // At delta = 0 the exponent is alpha + log(K)/h = -1 + 1 = 0, not
        // negative, so no delta works at h = 1.
        let samples = stability_region(
            -1.0,
            1.0,
            std::f64::consts::E,
            &[1.0],
            &[0.0, 0.01],
        )
        .unwrap();
        assert!(samples[0].boundary.is_none());
        assert!(samples[0].grid_delta.is_none());
    }

    #[test]
    fn region_grows_with_the_window_length() {
        let hs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let samples = stability_region(-1.0, 1.0, 1.5, &hs, &[0.0]).unwrap();
        let mut prev = None;
        for s in &samples {
            let b = s.boundary.unwrap_or(0.0);
            if let Some(p) = prev {
                assert!(b >= p, "boundary shrank as h grew");
            }
            prev = Some(b);
        }
        // The last column is genuinely feasible.
        assert!(samples[4].boundary.unwrap() > 0.0);
    }

    #[test]
    fn boundary_is_reported_from_the_feasible_side() {
        let samples = stability_region(-1.0, 1.0, 2.0, &[5.0], &[0.0]).unwrap();
        let b = samples[0].boundary.unwrap();
        let beta = beta_bound(&rp(-1.0, 2.0, 1.0, b, 5.0)).unwrap();
        assert!(beta < 0.0);
        let beta_past = beta_bound(&rp(-1.0, 2.0, 1.0, b + 1e-9, 5.0)).unwrap();
        assert!(beta_past >= 0.0);
    }

    #[test]
    fn threshold_scales_as_written() {
        assert_eq!(omega_threshold::<f64>(1.0, 10.0, 0.1).unwrap(), 100.0);
        let w1 = omega_threshold::<f64>(2.0, 7.0, 0.05).unwrap();
        let w2 = omega_threshold(2.0, 7.0, 0.1).unwrap();
        assert!((w1 - 2.0 * w2).abs() < 1e-12);
        assert!(omega_threshold(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn shift_example_accepts_the_small_weight() {
        let r = l2_example_check::<f64>(&L2ExampleParams { a: 0.5, nu: 0.1, n: 64 }).unwrap();
        assert!(r.constraint_ok);
        assert!((r.log_bound - 0.22314355131420976).abs() < 1e-15);
        assert!(r.decay_ok);
        assert_eq!(r.predicted_rate, 0.25);
    }

    #[test]
    fn shift_example_flags_the_large_weight() {
        let r = l2_example_check::<f64>(&L2ExampleParams { a: 0.5, nu: 0.25, n: 64 }).unwrap();
        assert!(r.constraint_ok);
        assert!((r.log_bound - std::f64::consts::LN_2).abs() < 1e-14);
        assert!(!r.decay_ok);
    }

    #[test]
    fn shift_example_log_bound_vanishes_with_the_weight() {
        let r = l2_example_check::<f64>(&L2ExampleParams { a: 0.5, nu: 1e-9, n: 8 }).unwrap();
        assert!(r.log_bound < 3e-9);
    }

    #[test]
    fn zero_perturbation_passes_the_triple() {
        let a = Matrix::<f64>::diag_real(&[-1.0, -2.0]);
        let b = TimeVaryingOperator::constant(Matrix::zeros(2)).unwrap();
        let grid = [0.0, 1.0, 2.0];
        let r = smallness_triple_check(&a, &b, 1.0, 1.0, 0.1, &grid, 4).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn fast_oscillation_passes_the_triple() {
        // B(t) = cos(omega t) J has antiderivative bounded by ||J|| / omega,
        // so all three products shrink like 1/omega.
        let a = Matrix::<f64>::diag_real(&[-0.5, -0.5]);
        let j = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let omega = 200.0;
        let b = TimeVaryingOperator::signal_product(
            Signal::cosine(omega, 0.0),
            j,
            Matrix::zeros(2),
        )
        .unwrap();
        let grid = [0.0, 0.7, 1.9];
        let r = smallness_triple_check(&a, &b, 2.0, 1.0, 0.05, &grid, 5).unwrap();
        assert!(r.pass, "worst ratio {}", r.worst_ratio);
    }

    #[test]
    fn constant_perturbation_fails_the_triple_on_wide_windows() {
        let a = Matrix::<f64>::diag_real(&[-1.0, -1.0]);
        let j = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let b = TimeVaryingOperator::constant(j).unwrap();
        let grid = [0.0];
        let r = smallness_triple_check(&a, &b, 10.0, 1.0, 0.1, &grid, 3).unwrap();
        assert!(!r.pass);
        assert!(r.worst_ratio > 10.0);
    }

    #[test]
    fn operator_quadrature_matches_the_scalar_antiderivative() {
        let j = Matrix::<f64>::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let b = TimeVaryingOperator::signal_product(
            Signal::cosine(3.0, 0.0),
            j.clone(),
            Matrix::zeros(2),
        )
        .unwrap();
        let c = integrate_operator(&b, 0.25, 1.75, 1e-12).unwrap();
        let mass = (3.0f64 * 1.75).sin() / 3.0 - (3.0f64 * 0.25).sin() / 3.0;
        assert!(c.sub(&j.scale_real(mass)).max_abs() < 1e-10);
        // Reversed endpoints flip the sign.
        let rev = integrate_operator(&b, 1.75, 0.25, 1e-12).unwrap();
        assert!(rev.add(&c).max_abs() < 1e-12);
    }
}
