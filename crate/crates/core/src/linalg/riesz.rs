//! Spectral (Riesz) projection by resolvent quadrature on a circular contour.
//!
//! The projection onto the invariant subspace of the spectrum enclosed by a
//! positively oriented circle is the contour integral of the resolvent,
//! normalized by 2*pi*i. On a circle the periodic trapezoid rule converges
//! geometrically, and node doubling provides the convergence gate.

use crate::error::{Error, Result};
use crate::linalg::eig::eigenvalues;
use crate::linalg::lu::Lu;
use crate::linalg::matrix::{abs_c, Matrix};
use crate::scalar::{C, FloatScalar};

/// Circular integration contour.
#[derive(Debug, Clone)]
pub struct Contour<T: FloatScalar> {
    pub center: C<T>,
    pub radius: T,
    pub nodes: usize,
}

impl<T: FloatScalar> Contour<T> {
    pub fn new(center: C<T>, radius: T, nodes: usize) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::Parameter(format!("contour radius must be positive, got {radius}")));
        }
        if nodes < 8 {
            return Err(Error::Parameter(format!("contour needs at least 8 nodes, got {nodes}")));
        }
        Ok(Contour { center, radius, nodes })
    }

    /// Default node count; doubling this must not change the projection.
    pub fn with_default_nodes(center: C<T>, radius: T) -> Result<Self> {
        Self::new(center, radius, 256)
    }
}

/// Spectral projection onto the eigenvalues strictly inside the contour.
pub fn riesz_projection<T: FloatScalar>(a: &Matrix<T>, contour: &Contour<T>) -> Result<Matrix<T>> {
    a.validate()?;
    let margin = T::c(1e-8);
    let vals = eigenvalues(a)?;
    for l in &vals {
        let dist = (abs_c(l - contour.center) - contour.radius).abs();
        if dist < margin {
            return Err(Error::Domain(format!(
                "eigenvalue {}{:+}i lies within {margin} of the contour",
                l.re, l.im
            )));
        }
    }
    let coarse = trapezoid_resolvent(a, contour, contour.nodes)?;
    let fine = trapezoid_resolvent(a, contour, contour.nodes * 2)?;
    let drift = coarse.sub(&fine).max_abs();
    if drift >= T::c(1e-9) {
        return Err(Error::Numeric(format!(
            "contour quadrature not converged: node doubling moved the result by {drift}"
        )));
    }
    Ok(fine)
}

/// Periodic trapezoid rule for the normalized resolvent integral,
/// counterclockwise orientation.
fn trapezoid_resolvent<T: FloatScalar>(
    a: &Matrix<T>,
    contour: &Contour<T>,
    nodes: usize,
) -> Result<Matrix<T>> {
    let n = a.dim();
    let mut acc = Matrix::zeros(n);
    let two_pi = T::c(std::f64::consts::TAU);
    let nn = T::from_usize(nodes).unwrap();
    for j in 0..nodes {
        let theta = two_pi * T::from_usize(j).unwrap() / nn;
        let dir = C::new(theta.cos(), theta.sin());
        let lambda = contour.center + C::new(contour.radius, T::zero()) * dir;
        let shifted = Matrix::scalar(n, lambda).sub(a);
        let resolvent = Lu::factor(&shifted)
            .map_err(|_| {
                Error::Domain(format!(
                    "resolvent singular at contour node {}{:+}i",
                    lambda.re, lambda.im
                ))
            })?
            .inverse();
        // contribution (r e^{i theta} / nodes) * (lambda I - A)^{-1}
        let weight = C::new(contour.radius, T::zero()) * dir / C::new(nn, T::zero());
        acc = acc.add(&resolvent.scale(weight));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cpx;

    #[test]
    fn splits_a_diagonal_spectrum() {
        let a = Matrix::<f64>::diag_real(&[1.0, -1.0]);
        let contour = Contour::with_default_nodes(cpx(1.0, 0.0), 0.5).unwrap();
        let p = riesz_projection(&a, &contour).unwrap();
        let want = Matrix::<f64>::diag_real(&[1.0, 0.0]);
        assert!(p.sub(&want).max_abs() < 1e-10);
    }

    #[test]
    fn full_enclosure_gives_identity() {
        let a = Matrix::<f64>::from_real_rows(&[vec![0.3, 0.2], vec![0.0, -0.4]]);
        let contour = Contour::with_default_nodes(cpx(0.0, 0.0), 2.0).unwrap();
        let p = riesz_projection(&a, &contour).unwrap();
        assert!(p.sub(&Matrix::identity(2)).max_abs() < 1e-10);
    }

    #[test]
    fn eigenvalue_on_contour_is_rejected() {
        let a = Matrix::<f64>::diag_real(&[1.0, -1.0]);
        let contour = Contour::with_default_nodes(cpx(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(riesz_projection(&a, &contour), Err(Error::Domain(_))));
    }
}
