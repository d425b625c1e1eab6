//! Matrix exponential by scaling and squaring with diagonal Pade kernels.
//! Degree selection follows the standard 1-norm thresholds; the backward
//! error is at unit-roundoff level for norms up to the largest threshold,
//! and scaling covers the rest.

use crate::error::{Error, Result};
use crate::linalg::lu::Lu;
use crate::linalg::matrix::Matrix;
use crate::scalar::{C, FloatScalar};

// 1-norm thresholds for Pade degrees 3, 5, 7, 9, 13 (double precision).
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// e^A for a square matrix.
pub fn matrix_exp<T: FloatScalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    a.validate()?;
    let norm = a.norm1();
    if !norm.is_finite() {
        return Err(Error::Numeric("matrix 1-norm overflowed".into()));
    }
    for &(deg, theta) in THETA.iter().take(4) {
        if norm <= T::c(theta) {
            return pade_exp(a, deg);
        }
    }
    let theta13 = T::c(THETA[4].1);
    if norm <= theta13 {
        return pade_exp(a, 13);
    }
    // scale down by a power of two, exponentiate, square back up
    let ratio = (norm / theta13).log2().ceil();
    let s = ratio
        .to_usize()
        .ok_or_else(|| Error::Numeric(format!("matrix norm {norm} too large for exponential")))?;
    if s > 64 {
        return Err(Error::Numeric(format!(
            "matrix norm {norm} needs {s} squarings, beyond overflow safety"
        )));
    }
    let factor = T::c(0.5).powi(s as i32);
    let mut e = pade_exp(&a.scale_real(factor), 13)?;
    for _ in 0..s {
        e = e.matmul(&e);
    }
    if e.validate().is_err() {
        return Err(Error::Numeric("exponential overflowed during squaring".into()));
    }
    Ok(e)
}

/// Diagonal Pade approximant of degree `deg` at the origin.
fn pade_exp<T: FloatScalar>(a: &Matrix<T>, deg: usize) -> Result<Matrix<T>> {
    let n = a.dim();
    let b: &[f64] = match deg {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        13 => &B13,
        _ => unreachable!("unsupported Pade degree"),
    };
    let a2 = a.matmul(a);
    let (u, v) = if deg == 13 {
        let a4 = a2.matmul(&a2);
        let a6 = a4.matmul(&a2);
        // U = A [ A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I ]
        let inner_u = a6
            .scale_real(T::c(b[13]))
            .add(&a4.scale_real(T::c(b[11])))
            .add(&a2.scale_real(T::c(b[9])));
        let u_poly = a6
            .matmul(&inner_u)
            .add(&a6.scale_real(T::c(b[7])))
            .add(&a4.scale_real(T::c(b[5])))
            .add(&a2.scale_real(T::c(b[3])))
            .add(&Matrix::scalar(n, C::new(T::c(b[1]), T::zero())));
        let u = a.matmul(&u_poly);
        let inner_v = a6
            .scale_real(T::c(b[12]))
            .add(&a4.scale_real(T::c(b[10])))
            .add(&a2.scale_real(T::c(b[8])));
        let v = a6
            .matmul(&inner_v)
            .add(&a6.scale_real(T::c(b[6])))
            .add(&a4.scale_real(T::c(b[4])))
            .add(&a2.scale_real(T::c(b[2])))
            .add(&Matrix::scalar(n, C::new(T::c(b[0]), T::zero())));
        (u, v)
    } else {
        // U = A sum b_{2k+1} A^{2k}, V = sum b_{2k} A^{2k}
        let mut even = Matrix::identity(n);
        let mut u_poly = Matrix::scalar(n, C::new(T::c(b[1]), T::zero()));
        let mut v = Matrix::scalar(n, C::new(T::c(b[0]), T::zero()));
        let mut k = 2;
        while k < b.len() {
            even = even.matmul(&a2);
            v = v.add(&even.scale_real(T::c(b[k])));
            if k + 1 < b.len() {
                u_poly = u_poly.add(&even.scale_real(T::c(b[k + 1])));
            }
            k += 2;
        }
        (a.matmul(&u_poly), v)
    };
    // r = (V - U)^{-1} (V + U)
    let denom = v.sub(&u);
    let numer = v.add(&u);
    let lu = Lu::factor(&denom)
        .map_err(|_| Error::Numeric("Pade denominator singular; norm selection failed".into()))?;
    Ok(lu.solve_mat(&numer))
}
