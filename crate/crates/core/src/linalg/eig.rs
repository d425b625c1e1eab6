//! Dense eigenvalues: exact reads for triangular structure, complex
//! Hessenberg QR with shifts for everything else.
//!
//! The structural path matters: truncated weighted shifts are strictly
//! triangular and exactly nilpotent, and a backward-stable QR sweep on them
//! would report spurious eigenvalues of magnitude about eps^(1/n). Reading
//! the diagonal of a triangular matrix is exact and is the honest answer.

use crate::error::{Error, Result};
use crate::linalg::matrix::{abs_c, Matrix};
use crate::scalar::{C, FloatScalar};

/// All eigenvalues, sorted by descending modulus (ties by real then imaginary
/// part, descending). Deterministic.
pub fn eigenvalues<T: FloatScalar>(a: &Matrix<T>) -> Result<Vec<C<T>>> {
    a.validate()?;
    let n = a.dim();
    let mut vals = if n == 1 {
        vec![a[(0, 0)]]
    } else if a.is_upper_triangular() || a.is_lower_triangular() {
        a.diagonal()
    } else if n == 2 {
        let (l1, l2) = eig2(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        vec![l1, l2]
    } else {
        hessenberg_qr(a)?
    };
    vals.sort_by(|x, y| {
        let (mx, my) = (abs_c(*x), abs_c(*y));
        my.partial_cmp(&mx)
            .unwrap()
            .then(y.re.partial_cmp(&x.re).unwrap())
            .then(y.im.partial_cmp(&x.im).unwrap())
    });
    Ok(vals)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: FloatScalar>(a: &Matrix<T>) -> Result<T> {
    let vals = eigenvalues(a)?;
    Ok(vals.into_iter().map(abs_c).fold(T::zero(), |m, v| if v > m { v } else { m }))
}

/// Eigenvalues of a 2x2 block by the quadratic formula.
fn eig2<T: FloatScalar>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> (C<T>, C<T>) {
    let half = C::new(T::c(0.5), T::zero());
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - C::new(T::c(4.0), T::zero()) * det).sqrt();
    ((tr + disc) * half, (tr - disc) * half)
}

// ── Hessenberg QR ───────────────────────────────────────────────────────

/// Householder reduction to upper Hessenberg form (similarity transform,
/// transforms not accumulated).
fn to_hessenberg<T: FloatScalar>(a: &Matrix<T>) -> Matrix<T> {
    let n = a.dim();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let mut x: Vec<C<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if abs_c(x0) == T::zero() {
            C::new(T::one(), T::zero())
        } else {
            x0 / C::new(abs_c(x0), T::zero())
        };
        let alpha = -phase * C::new(xnorm, T::zero());
        x[0] = x[0] - alpha;
        let vnorm = x.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt();
        if vnorm == T::zero() {
            continue;
        }
        let v: Vec<C<T>> = x.into_iter().map(|z| z / C::new(vnorm, T::zero())).collect();
        let two = C::new(T::c(2.0), T::zero());
        // left: rows k+1..n of columns k..n
        for j in k..n {
            let mut dot = C::new(T::zero(), T::zero());
            for i in 0..v.len() {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            for i in 0..v.len() {
                let upd = two * v[i] * dot;
                h[(k + 1 + i, j)] = h[(k + 1 + i, j)] - upd;
            }
        }
        // right: columns k+1..n of all rows
        for i in 0..n {
            let mut dot = C::new(T::zero(), T::zero());
            for j in 0..v.len() {
                dot += h[(i, k + 1 + j)] * v[j];
            }
            for j in 0..v.len() {
                let upd = two * dot * v[j].conj();
                h[(i, k + 1 + j)] = h[(i, k + 1 + j)] - upd;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = C::new(T::zero(), T::zero());
        }
    }
    h
}

/// Complex Givens rotation (c real, s complex) with G [f, g]^T = [r, 0]^T.
fn givens<T: FloatScalar>(f: C<T>, g: C<T>) -> (T, C<T>, C<T>) {
    let af = abs_c(f);
    let ag = abs_c(g);
    if ag == T::zero() {
        return (T::one(), C::new(T::zero(), T::zero()), f);
    }
    if af == T::zero() {
        return (T::zero(), C::new(T::one(), T::zero()), g);
    }
    let l = af.hypot(ag);
    let c = af / l;
    let s = (f / C::new(af, T::zero())) * g.conj() / C::new(l, T::zero());
    let r = f / C::new(af, T::zero()) * C::new(l, T::zero());
    (c, s, r)
}

/// Shifted explicit QR iteration on an upper Hessenberg matrix.
fn hessenberg_qr<T: FloatScalar>(a: &Matrix<T>) -> Result<Vec<C<T>>> {
    let n = a.dim();
    let mut h = to_hessenberg(a);
    let mut vals: Vec<C<T>> = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols [0, hi)
    let mut stall = 0usize;
    let mut total_iter = 0usize;
    let max_iter = 120 * n;
    let eps = T::eps();
    while hi > 0 {
        if total_iter > max_iter {
            return Err(Error::Numeric(format!(
                "eigenvalue iteration exceeded {max_iter} sweeps with {} values unresolved",
                hi
            )));
        }
        // deflate converged subdiagonal entries at the bottom of the block
        if hi == 1 {
            vals.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        let sub = abs_c(h[(hi - 1, hi - 2)]);
        let local = abs_c(h[(hi - 1, hi - 1)]) + abs_c(h[(hi - 2, hi - 2)]);
        if sub <= eps * local.max(T::min_positive_value()) {
            vals.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            stall = 0;
            continue;
        }
        if hi == 2 {
            let (l1, l2) = eig2(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
            vals.push(l1);
            vals.push(l2);
            hi = 0;
            continue;
        }
        // start of the unreduced block containing hi-1
        let mut lo = hi - 1;
        while lo > 0 {
            let s = abs_c(h[(lo, lo - 1)]);
            let loc = abs_c(h[(lo, lo)]) + abs_c(h[(lo - 1, lo - 1)]);
            if s <= eps * loc.max(T::min_positive_value()) {
                h[(lo, lo - 1)] = C::new(T::zero(), T::zero());
                break;
            }
            lo -= 1;
        }
        // Wilkinson shift from the trailing 2x2, exceptional shift on stall
        let mu = if stall > 0 && stall % 12 == 0 {
            h[(hi - 1, hi - 1)] + C::new(T::c(0.75) * abs_c(h[(hi - 1, hi - 2)]), T::zero())
        } else {
            let (l1, l2) = eig2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            let d = h[(hi - 1, hi - 1)];
            if abs_c(l1 - d) < abs_c(l2 - d) {
                l1
            } else {
                l2
            }
        };
        // implicit single-shift sweep on [lo, hi): each rotation is applied
        // as an immediate similarity, chasing the bulge down the subdiagonal
        let mut f = h[(lo, lo)] - mu;
        let mut g = h[(lo + 1, lo)];
        for i in lo..hi - 1 {
            let (c, s, _r) = givens(f, g);
            let cc = C::new(c, T::zero());
            // left: rows i, i+1 over columns max(lo, i-1)..hi
            let jstart = if i > lo { i - 1 } else { lo };
            for j in jstart..hi {
                let a0 = h[(i, j)];
                let a1 = h[(i + 1, j)];
                h[(i, j)] = cc * a0 + s * a1;
                h[(i + 1, j)] = -s.conj() * a0 + cc * a1;
            }
            // right: columns i, i+1 over rows lo..min(i+3, hi)
            let rend = (i + 3).min(hi);
            for r in lo..rend {
                let a0 = h[(r, i)];
                let a1 = h[(r, i + 1)];
                h[(r, i)] = a0 * cc + a1 * s.conj();
                h[(r, i + 1)] = -a0 * s + a1 * cc;
            }
            if i + 2 < hi {
                f = h[(i + 1, i)];
                g = h[(i + 2, i)];
            }
        }
        stall += 1;
        total_iter += 1;
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_reads_exactly() {
        let a = Matrix::<f64>::diag_real(&[0.3, -0.9]);
        assert_eq!(spectral_radius(&a).unwrap(), 0.9);
    }

    #[test]
    fn strictly_lower_triangular_is_nilpotent() {
        let mut w = Matrix::<f64>::zeros(16);
        for i in 1..16 {
            w[(i, i - 1)] = C::new(1.0 / i as f64, 0.0);
        }
        assert_eq!(spectral_radius(&w).unwrap(), 0.0);
        assert!(eigenvalues(&w).unwrap().iter().all(|l| abs_c(*l) == 0.0));
    }

    #[test]
    fn known_symmetric_spectrum() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = Matrix::<f64>::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let vals = eigenvalues(&a).unwrap();
        assert!((vals[0].re - 3.0).abs() < 1e-12 && vals[0].im.abs() < 1e-12);
        assert!((vals[1].re - 1.0).abs() < 1e-12 && vals[1].im.abs() < 1e-12);
    }

    #[test]
    fn rotation_block_has_imaginary_pair() {
        let a = Matrix::<f64>::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let vals = eigenvalues(&a).unwrap();
        assert!((vals[0].im.abs() - 1.0).abs() < 1e-12);
        assert!(vals[0].re.abs() < 1e-12);
    }

    #[test]
    fn qr_path_matches_known_spectrum() {
        // companion-style matrix of (x-1)(x-2)(x-3)(x-4)
        // x^4 - 10x^3 + 35x^2 - 50x + 24
        let a = Matrix::<f64>::from_real_rows(&[
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        let vals = eigenvalues(&a).unwrap();
        let mut res: Vec<f64> = vals.iter().map(|l| l.re).collect();
        res.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (got, want) in res.iter().zip(&[4.0, 3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
        }
        assert!(vals.iter().all(|l| l.im.abs() < 1e-9));
    }
}
