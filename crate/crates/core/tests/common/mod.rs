//! Shared helpers for the integration tests: an independent Hermitian
//! eigensolver (cyclic Jacobi with explicit 2x2 diagonalizations) used as an
//! oracle for the library's norm and eigenvalue machinery, and seeded random
//! matrix generators.

use linstab::linalg::Matrix;
use linstab::scalar::C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type C64 = C<f64>;

/// All eigenvalues of a Hermitian matrix by cyclic Jacobi, ascending.
/// Completely separate from the library's tridiagonalization path: each
/// rotation is the closed-form diagonalization of one 2x2 Hermitian block.
pub fn hermitian_eigs_jacobi(g: &Matrix<f64>) -> Vec<f64> {
    let n = g.dim();
    let mut a: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| g[(i, j)]).collect())
        .collect();
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p][q].norm());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let c = a[p][q];
                if c.norm() <= 1e-16 * scale {
                    continue;
                }
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                // Factor out the phase of the pivot, then the stable real
                // rotation: tau = (aqq - app) / 2|c|, t the smaller root of
                // t^2 + 2 tau t - 1 = 0.
                let ub = c.conj() / C64::new(c.norm(), 0.0);
                let tau = (aqq - app) / (2.0 * c.norm());
                let t = tau.signum() / (tau.abs() + tau.hypot(1.0));
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                let j00 = C64::new(cs, 0.0);
                let j01 = C64::new(sn, 0.0);
                let j10 = ub * C64::new(-sn, 0.0);
                let j11 = ub * C64::new(cs, 0.0);
                for i in 0..n {
                    let u = a[i][p];
                    let v = a[i][q];
                    a[i][p] = u * j00 + v * j10;
                    a[i][q] = u * j01 + v * j11;
                }
                for i in 0..n {
                    let u = a[p][i];
                    let v = a[q][i];
                    a[p][i] = u * j00.conj() + v * j10.conj();
                    a[q][i] = u * j01.conj() + v * j11.conj();
                }
            }
        }
    }
    let mut final_off = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            final_off = final_off.max(a[p][q].norm());
        }
    }
    assert!(
        final_off <= 1e-12 * scale,
        "jacobi oracle failed to converge: off-diagonal {final_off} at scale {scale}"
    );
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Largest singular value via the Jacobi oracle on the Gram matrix.
pub fn sigma_max_oracle(a: &Matrix<f64>) -> f64 {
    let g = a.adjoint().matmul(a);
    let eigs = hermitian_eigs_jacobi(&g);
    eigs.last().copied().unwrap().max(0.0).sqrt()
}

/// Smallest singular value via the Jacobi oracle on the Gram matrix.
pub fn sigma_min_oracle(a: &Matrix<f64>) -> f64 {
    let g = a.adjoint().matmul(a);
    let eigs = hermitian_eigs_jacobi(&g);
    eigs.first().copied().unwrap().max(0.0).sqrt()
}

/// Dense random complex matrix with entries uniform in the unit square.
pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = C64::new(2.0 * rng.gen::<f64>() - 1.0, 2.0 * rng.gen::<f64>() - 1.0);
        }
    }
    m
}

/// Random real matrix, entries uniform in [-1, 1].
pub fn random_real_matrix(rng: &mut ChaCha8Rng, dim: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = C64::new(2.0 * rng.gen::<f64>() - 1.0, 0.0);
        }
    }
    m
}
