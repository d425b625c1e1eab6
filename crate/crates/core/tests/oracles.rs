//! Cross-checks of the dense kernels against independently implemented
//! oracles: a cyclic-Jacobi Hermitian eigensolver for norms and eigenvalue
//! residuals, and a plain scaled Taylor series for the matrix exponential.

mod common;

use common::{random_matrix, random_real_matrix, sigma_max_oracle, sigma_min_oracle};
use linstab::linalg::{
    eigenvalues, matrix_exp, matrix_log, operator_norm, Matrix,
};
use linstab::scalar::C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = C<f64>;

// ── Oracle self-checks ──────────────────────────────────────────────────────

#[test]
fn jacobi_oracle_reproduces_known_spectra() {
    // Diagonal matrix.
    let d = Matrix::diag_real(&[3.0, -1.0, 0.5]);
    let eigs = common::hermitian_eigs_jacobi(&d);
    assert!((eigs[0] + 1.0).abs() < 1e-12);
    assert!((eigs[1] - 0.5).abs() < 1e-12);
    assert!((eigs[2] - 3.0).abs() < 1e-12);
    // A 2x2 Hermitian block with a complex coupling: [[1, i],[-i, 1]] has
    // eigenvalues 0 and 2.
    let mut h = Matrix::zeros(2);
    h[(0, 0)] = C64::new(1.0, 0.0);
    h[(1, 1)] = C64::new(1.0, 0.0);
    h[(0, 1)] = C64::new(0.0, 1.0);
    h[(1, 0)] = C64::new(0.0, -1.0);
    let eigs = common::hermitian_eigs_jacobi(&h);
    assert!(eigs[0].abs() < 1e-12);
    assert!((eigs[1] - 2.0).abs() < 1e-12);
    // Random Hermitian similarity leaves the trace and Frobenius norm fixed.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let b = random_matrix(&mut rng, 5);
    let g = b.adjoint().matmul(&b);
    let eigs = common::hermitian_eigs_jacobi(&g);
    let trace: f64 = (0..5).map(|i| g[(i, i)].re).sum();
    assert!((eigs.iter().sum::<f64>() - trace).abs() < 1e-10 * trace.abs().max(1.0));
    let frob_sq: f64 = (0..5)
        .flat_map(|i| (0..5).map(move |j| (i, j)))
        .map(|(i, j)| g[(i, j)].norm_sqr())
        .sum();
    let eig_sq: f64 = eigs.iter().map(|e| e * e).sum();
    assert!((frob_sq - eig_sq).abs() < 1e-9 * frob_sq.max(1.0));
}

// ── Operator norm ───────────────────────────────────────────────────────────

#[test]
fn operator_norm_matches_the_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..40 {
        let dim = 1 + (case % 12);
        let a = if case % 3 == 0 {
            random_real_matrix(&mut rng, dim)
        } else {
            random_matrix(&mut rng, dim)
        };
        let ours = operator_norm(&a).unwrap();
        let oracle = sigma_max_oracle(&a);
        assert!(
            (ours - oracle).abs() <= 1e-10 * oracle.max(1.0),
            "case {case}: ours = {ours}, oracle = {oracle}"
        );
    }
}

#[test]
fn operator_norm_handles_graded_scales() {
    // Entries spanning ten orders of magnitude.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let dim = 6;
        let mut a = random_matrix(&mut rng, dim);
        for i in 0..dim {
            for j in 0..dim {
                let sc = 10f64.powi(rng.gen_range(-8..3));
                a[(i, j)] = a[(i, j)] * C64::new(sc, 0.0);
            }
        }
        let ours = operator_norm(&a).unwrap();
        let oracle = sigma_max_oracle(&a);
        assert!((ours - oracle).abs() <= 1e-9 * oracle);
    }
}

// ── Eigenvalues ─────────────────────────────────────────────────────────────

#[test]
fn eigenvalues_have_small_singular_residuals() {
    // lambda is an eigenvalue iff sigma_min(A - lambda I) = 0; the oracle
    // measures that residual independently of the eigensolver.  Going
    // through the Gram matrix floors the measurable residual at about
    // sqrt(eps) * ||A||, so that is the resolution this check works at.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..20 {
        let dim = 2 + (case % 6);
        let a = random_matrix(&mut rng, dim);
        let scale = operator_norm(&a).unwrap();
        for lam in eigenvalues(&a).unwrap() {
            let shifted = a.sub(&Matrix::scalar(dim, lam));
            let res = sigma_min_oracle(&shifted);
            assert!(
                res <= 1e-7 * scale.max(1.0),
                "case {case}: residual {res} at lambda = {lam}"
            );
        }
    }
}

#[test]
fn eigenvalue_sum_matches_the_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10 {
        let dim = 7;
        let a = random_matrix(&mut rng, dim);
        let eigs = eigenvalues(&a).unwrap();
        let sum = eigs.iter().fold(C64::new(0.0, 0.0), |acc, l| acc + *l);
        let trace = (0..dim).fold(C64::new(0.0, 0.0), |acc, i| acc + a[(i, i)]);
        assert!((sum - trace).norm() < 1e-9 * trace.norm().max(1.0));
    }
}

// ── Matrix exponential ──────────────────────────────────────────────────────

/// Plain Taylor series after aggressive halving: independent of the library's
/// rational approximation.
fn expm_taylor_oracle(a: &Matrix<f64>) -> Matrix<f64> {
    let mut norm = a.max_abs() * a.dim() as f64;
    let mut halvings = 0u32;
    while norm > 0.25 {
        norm *= 0.5;
        halvings += 1;
    }
    let s = a.scale_real(0.5f64.powi(halvings as i32));
    let mut sum = Matrix::identity(a.dim());
    let mut term = Matrix::identity(a.dim());
    for k in 1..60 {
        term = term.matmul(&s).scale_real(1.0 / k as f64);
        sum = sum.add(&term);
        if term.max_abs() < 1e-20 {
            break;
        }
    }
    for _ in 0..halvings {
        sum = sum.matmul(&sum);
    }
    sum
}

#[test]
fn matrix_exp_matches_the_taylor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..20 {
        let dim = 1 + (case % 8);
        let mut a = random_matrix(&mut rng, dim);
        if case % 4 == 0 {
            // Occasionally push the norm up to exercise the squaring path.
            a = a.scale_real(10.0);
        }
        let ours = matrix_exp(&a).unwrap();
        let oracle = expm_taylor_oracle(&a);
        let scale = sigma_max_oracle(&oracle);
        let diff = sigma_max_oracle(&ours.sub(&oracle));
        assert!(diff <= 1e-10 * scale, "case {case}: diff {diff}, scale {scale}");
    }
}

#[test]
fn exp_of_log_round_trips_on_triangular_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    for _ in 0..15 {
        let dim = 6;
        let mut t = Matrix::zeros(dim);
        for i in 0..dim {
            t[(i, i)] = C64::new(0.2 + 1.8 * rng.gen::<f64>(), 0.0);
            for j in 0..i {
                t[(i, j)] = C64::new(0.4 * (2.0 * rng.gen::<f64>() - 1.0), 0.0);
            }
        }
        let l = matrix_log(&t).unwrap();
        let back = matrix_exp(&l).unwrap();
        assert!(back.sub(&t).max_abs() < 1e-10, "round trip drifted");
    }
}
