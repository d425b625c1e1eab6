//! Principal matrix logarithm.
//!
//! Two routes:
//! - an exact finite-series route for `c·I + N` with `N` strictly triangular
//!   and `c > 0`, where `log(I + N/c)` terminates at the nilpotency index;
//! - inverse scaling and squaring for general input: repeated principal
//!   square roots (Denman-Beavers) until the argument sits close to the
//!   identity, then the alternating series for `log(I + X)`.
//!
//! The spectrum must avoid `(-inf, 0]`; violations are reported as domain
//! errors naming the offending eigenvalue.

use crate::error::{Error, Result};
use crate::linalg::eig::eigenvalues;
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{abs_c, Matrix};
use crate::scalar::{C, FloatScalar};

/// Principal logarithm.
pub fn matrix_log<T: FloatScalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    a.validate()?;
    if let Some(result) = scaled_nilpotent_log(a) {
        return result;
    }
    general_log(a)
}

/// Exact route for `A = c·I + N`, `N` strictly triangular, constant real
/// diagonal `c > 0`. Returns `None` when the structure does not apply.
fn scaled_nilpotent_log<T: FloatScalar>(a: &Matrix<T>) -> Option<Result<Matrix<T>>> {
    let n = a.dim();
    let d0 = a[(0, 0)];
    if d0.im != T::zero() {
        return None;
    }
    let c = d0.re;
    for i in 0..n {
        if a[(i, i)] != d0 {
            return None;
        }
    }
    let mut off = a.clone();
    for i in 0..n {
        off[(i, i)] = C::new(T::zero(), T::zero());
    }
    if !(off.is_lower_triangular() || off.is_upper_triangular()) {
        return None;
    }
    if c <= T::zero() {
        return Some(Err(Error::Domain(format!(
            "spectrum is {{{c}}} on the branch cut of the principal logarithm"
        ))));
    }
    // log(cI + N) = (log c) I + sum_{j>=1} (-1)^{j+1} (N/c)^j / j, finite sum
    let x = off.scale_real(T::one() / c);
    let mut acc = Matrix::scalar(n, C::new(c.ln(), T::zero()));
    let mut xp = x.clone();
    let mut j = 1usize;
    loop {
        if xp.max_abs() == T::zero() {
            break;
        }
        let coef = if j % 2 == 1 { T::one() } else { -T::one() } / T::from_usize(j).unwrap();
        acc = acc.add(&xp.scale_real(coef));
        j += 1;
        if j > n {
            break; // strictly triangular implies nilpotency index <= n
        }
        xp = xp.matmul(&x);
    }
    Some(Ok(acc))
}

/// Inverse scaling and squaring for general matrices.
fn general_log<T: FloatScalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.dim();
    let vals = eigenvalues(a)?;
    let scale = vals.iter().map(|l| abs_c(*l)).fold(T::zero(), T::max).max(T::one());
    for l in &vals {
        if l.re <= T::zero() && l.im.abs() <= T::eps() * T::c(64.0) * scale {
            return Err(Error::Domain(format!(
                "eigenvalue {}{:+}i lies on the branch cut of the principal logarithm",
                l.re, l.im
            )));
        }
    }
    let mut x = a.clone();
    let mut k = 0usize;
    while x.sub(&Matrix::identity(n)).norm1() > T::c(0.25) {
        x = principal_sqrt(&x)?;
        k += 1;
        if k > 60 {
            return Err(Error::Numeric(
                "inverse scaling did not reach the identity after 60 square roots".into(),
            ));
        }
    }
    let e = x.sub(&Matrix::identity(n));
    let mut acc = Matrix::zeros(n);
    let mut ep = e.clone();
    let mut j = 1usize;
    // ||E|| <= 1/4, so about forty terms reach roundoff at either width
    loop {
        let coef = if j % 2 == 1 { T::one() } else { -T::one() } / T::from_usize(j).unwrap();
        acc = acc.add(&ep.scale_real(coef));
        let tail = ep.norm1() / T::from_usize(j).unwrap();
        if tail < T::eps() * acc.norm1().max(T::min_positive_value()) || j > 80 {
            break;
        }
        ep = ep.matmul(&e);
        j += 1;
    }
    Ok(acc.scale_real(T::from_usize(1 << k).unwrap()))
}

/// Principal square root by the Denman-Beavers iteration.
fn principal_sqrt<T: FloatScalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.dim();
    let mut y = a.clone();
    let mut z = Matrix::identity(n);
    let half = T::c(0.5);
    for _ in 0..80 {
        let yinv = Lu::factor(&y)
            .map_err(|_| Error::Numeric("singular iterate in square-root iteration".into()))?
            .inverse();
        let zinv = Lu::factor(&z)
            .map_err(|_| Error::Numeric("singular iterate in square-root iteration".into()))?
            .inverse();
        let y_next = y.add(&zinv).scale_real(half);
        let z_next = z.add(&yinv).scale_real(half);
        let delta = y_next.sub(&y).norm1();
        y = y_next;
        z = z_next;
        if delta <= T::eps() * T::c(4.0) * y.norm1() {
            return Ok(y);
        }
    }
    Err(Error::Numeric("square-root iteration did not converge in 80 steps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm::matrix_exp;

    #[test]
    fn identity_maps_to_zero() {
        let l = matrix_log(&Matrix::<f64>::identity(4)).unwrap();
        assert!(l.max_abs() == 0.0);
    }

    #[test]
    fn nilpotent_route_is_finite_and_exact() {
        // L = a(I - D) with D strictly lower, index 3
        let a = 0.5_f64;
        let mut l = Matrix::scalar(3, C::new(a, 0.0));
        l[(2, 1)] = C::new(0.25, 0.0);
        let lg = matrix_log(&l).unwrap();
        // log = (log a) I + log(I + N/a) with N single entry 0.25
        assert!((lg[(0, 0)].re - a.ln()).abs() < 1e-15);
        assert!((lg[(2, 1)].re - 0.5).abs() < 1e-15);
        let back = matrix_exp(&lg).unwrap();
        assert!(back.sub(&l).max_abs() < 1e-14);
    }

    #[test]
    fn round_trip_through_general_route() {
        let a = Matrix::<f64>::from_real_rows(&[vec![1.2, 0.3], vec![-0.1, 0.9]]);
        let lg = matrix_log(&a).unwrap();
        let back = matrix_exp(&lg).unwrap();
        let rel = back.sub(&a).max_abs() / a.max_abs();
        assert!(rel < 1e-12, "round-trip error {rel}");
    }

    #[test]
    fn branch_cut_is_rejected() {
        let a = Matrix::<f64>::diag_real(&[1.0, -0.5]);
        match matrix_log(&a) {
            Err(Error::Domain(msg)) => assert!(msg.contains("branch cut")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }
}
