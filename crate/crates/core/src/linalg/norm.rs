//! Spectral (2-) norm. The exact shift-norm identities of the weighted-shift
//! machinery are stated for this norm, which is why it is the one norm used
//! across the crate.
//!
//! Route: scale out the largest entry, form the Hermitian Gram matrix,
//! Householder-tridiagonalize, then Sturm bisection for the top eigenvalue.
//! Every step is deterministic; no iteration depends on a random start.

use crate::error::Result;
use crate::linalg::matrix::{abs_c, vec_norm, Matrix};
use crate::scalar::{C, FloatScalar};

/// Spectral norm (largest singular value) within relative tolerance about
/// `1e-12` at `f64` width.
pub fn operator_norm<T: FloatScalar>(a: &Matrix<T>) -> Result<T> {
    a.validate()?;
    let s = a.max_abs();
    if s == T::zero() {
        return Ok(T::zero());
    }
    let b = a.scale_real(T::one() / s);
    let h = b.adjoint().matmul(&b);
    let (d, e) = tridiagonalize_hermitian(&h);
    let lam = sturm_max_eigenvalue(&d, &e).max(T::zero());
    Ok(s * lam.sqrt())
}

/// Power iteration on the Gram matrix with a caller-supplied starting vector.
/// Used by dense time scans where the top singular vector drifts slowly; the
/// returned vector warm-starts the next call. Accuracy is capped near `tol`,
/// so certificates re-measure with [`operator_norm`] where it matters.
pub(crate) fn spectral_norm_warm<T: FloatScalar>(
    a: &Matrix<T>,
    start: &[C<T>],
    tol: T,
) -> (T, Vec<C<T>>) {
    let n = a.dim();
    let mut v: Vec<C<T>> = if start.len() == n && vec_norm(start) > T::zero() {
        start.to_vec()
    } else {
        vec![C::new(T::one() / T::from_usize(n).unwrap().sqrt(), T::zero()); n]
    };
    let nv = vec_norm(&v);
    for x in v.iter_mut() {
        *x = *x / C::new(nv, T::zero());
    }
    let at = a.adjoint();
    let mut sigma_last = T::zero();
    for _ in 0..500 {
        let w = a.matvec(&v);
        let u = at.matvec(&w);
        // Rayleigh quotient of the Gram matrix at the unit vector v. The
        // eigenvalue residual bounds the error directly (Hermitian case), so
        // stopping on it makes `tol` a genuine relative guarantee.
        let mut lam = T::zero();
        for (x, y) in v.iter().zip(&u) {
            lam += (x.conj() * *y).re;
        }
        if lam <= T::zero() {
            return (T::zero(), v);
        }
        let mut rsq = T::zero();
        for (x, y) in v.iter().zip(&u) {
            let d = *y - *x * C::new(lam, T::zero());
            rsq += d.norm_sqr();
        }
        sigma_last = lam.sqrt();
        let nu = vec_norm(&u);
        if nu == T::zero() {
            return (sigma_last, v);
        }
        for (x, y) in v.iter_mut().zip(&u) {
            *x = *y / C::new(nu, T::zero());
        }
        if rsq.sqrt() <= tol * lam {
            return (sigma_last, v);
        }
    }
    (sigma_last, v)
}

// ── Hermitian tridiagonalization ────────────────────────────────────────

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form; returns (diagonal, subdiagonal magnitudes). Transforms are not
/// accumulated, eigenvalues are all that is needed.
fn tridiagonalize_hermitian<T: FloatScalar>(h: &Matrix<T>) -> (Vec<T>, Vec<T>) {
    let n = h.dim();
    let mut a = h.clone();
    for k in 0..n.saturating_sub(2) {
        // column below the diagonal
        let mut x = vec![C::new(T::zero(), T::zero()); n - k - 1];
        for i in k + 1..n {
            x[i - k - 1] = a[(i, k)];
        }
        let xnorm = vec_norm(&x);
        if xnorm == T::zero() {
            continue;
        }
        // alpha = -sign(x0) * |x|, with complex sign e^{i arg(x0)}
        let x0 = x[0];
        let phase = if abs_c(x0) == T::zero() {
            C::new(T::one(), T::zero())
        } else {
            x0 / C::new(abs_c(x0), T::zero())
        };
        let alpha = -phase * C::new(xnorm, T::zero());
        let mut v = x;
        v[0] = v[0] - alpha;
        let vnorm = vec_norm(&v);
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / C::new(vnorm, T::zero());
        }
        // two-sided update of the trailing block: p = 2 H v, mu = 2 v^H p,
        // H <- H - v p^H - p v^H + mu v v^H  (restricted to rows/cols > k)
        let m = n - k - 1;
        let mut p = vec![C::new(T::zero(), T::zero()); m];
        for i in 0..m {
            let mut acc = C::new(T::zero(), T::zero());
            for j in 0..m {
                acc += a[(k + 1 + i, k + 1 + j)] * v[j];
            }
            p[i] = acc * C::new(T::c(2.0), T::zero());
        }
        let mut mu = C::new(T::zero(), T::zero());
        for i in 0..m {
            mu += v[i].conj() * p[i];
        }
        mu = mu * C::new(T::c(2.0), T::zero());
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * p[j].conj() + p[i] * v[j].conj()
                    - v[i] * mu * v[j].conj();
                let cur = a[(k + 1 + i, k + 1 + j)];
                a[(k + 1 + i, k + 1 + j)] = cur - upd;
            }
        }
        // the eliminated column reduces to a single subdiagonal entry
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = C::new(T::zero(), T::zero());
        }
    }
    let d: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let e: Vec<T> = (0..n - 1).map(|i| abs_c(a[(i + 1, i)])).collect();
    (d, e)
}

// ── Sturm bisection ─────────────────────────────────────────────────────

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x,
/// by the classic negative-count recurrence.
fn sturm_count_below<T: FloatScalar>(d: &[T], e: &[T], x: T) -> usize {
    let n = d.len();
    let tiny = T::min_positive_value() / T::eps();
    let mut count = 0usize;
    let mut q = d[0] - x;
    if q < T::zero() {
        count += 1;
    }
    for i in 1..n {
        let denom = if q.abs() < tiny {
            if q >= T::zero() { tiny } else { -tiny }
        } else {
            q
        };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of the symmetric tridiagonal (d, e) by bisection inside
/// Gershgorin bounds.
fn sturm_max_eigenvalue<T: FloatScalar>(d: &[T], e: &[T]) -> T {
    let n = d.len();
    if n == 1 {
        return d[0];
    }
    let mut lo = d[0];
    let mut hi = d[0];
    for i in 0..n {
        let r_left = if i > 0 { e[i - 1] } else { T::zero() };
        let r_right = if i < n - 1 { e[i] } else { T::zero() };
        let r = r_left + r_right;
        if d[i] + r > hi {
            hi = d[i] + r;
        }
        if d[i] - r < lo {
            lo = d[i] - r;
        }
    }
    let scale = hi.abs().max(lo.abs()).max(T::one());
    let tol = T::eps() * T::c(4.0) * scale;
    let mut iter = 0;
    while hi - lo > tol && iter < 200 {
        let mid = (lo + hi) / T::c(2.0);
        if sturm_count_below(d, e, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
        iter += 1;
    }
    (lo + hi) / T::c(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_norm() {
        let a = Matrix::<f64>::identity(4);
        assert!((operator_norm(&a).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn diagonal_norm_is_max_abs_entry() {
        let a = Matrix::<f64>::diag_real(&[3.0, -4.0]);
        assert!((operator_norm(&a).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn shift_norm_is_sup_of_weights() {
        let mut w = Matrix::<f64>::zeros(8);
        let weights = [1.0, 0.5, 1.0, 0.25, 1.0, 0.5, 1.0];
        for (i, &a) in weights.iter().enumerate() {
            w[(i + 1, i)] = C::new(a, 0.0);
        }
        assert!((operator_norm(&w).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_rotation_is_isometric() {
        let a = Matrix::<f64>::from_rows(&[
            vec![C::new(0.0, 0.6), C::new(0.8, 0.0)],
            vec![C::new(-0.8, 0.0), C::new(0.0, -0.6)],
        ]);
        assert!((operator_norm(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warm_estimate_tracks_exact_norm() {
        let a = Matrix::<f64>::from_real_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.0, -1.0, 3.0],
            vec![0.5, 0.0, 2.0],
        ]);
        let exact = operator_norm(&a).unwrap();
        let (est, v) = spectral_norm_warm(&a, &[], 1e-12);
        assert!((est - exact).abs() < 1e-8 * exact);
        let (est2, _) = spectral_norm_warm(&a, &v, 1e-12);
        assert!((est2 - exact).abs() < 1e-10 * exact);
    }
}
