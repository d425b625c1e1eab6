//! Single-precision smoke tests: the kernels are generic over the scalar
//! width, and every path should stay usable (at correspondingly loose
//! tolerances) at f32.

use linstab::bounds::{beta_bound, RobustnessParams};
use linstab::evolution::{propagator, TimeVaryingOperator};
use linstab::linalg::{matrix_exp, operator_norm, Matrix};
use linstab::scalar::C;

type C32 = C<f32>;

#[test]
fn closed_form_bound_evaluates_at_single_precision() {
    let p32 = RobustnessParams::<f32>::new(-1.0, 2.0, 1.0, 0.01, 2.0).unwrap();
    let p64 = RobustnessParams::<f64>::new(-1.0, 2.0, 1.0, 0.01, 2.0).unwrap();
    let b32 = beta_bound(&p32).unwrap();
    let b64 = beta_bound(&p64).unwrap();
    assert!((f64::from(b32) - b64).abs() < 1e-6);
}

#[test]
fn rotation_exponential_matches_cos_sin_at_f32() {
    let mut a = Matrix::<f32>::zeros(2);
    a[(0, 1)] = C32::new(-1.0, 0.0);
    a[(1, 0)] = C32::new(1.0, 0.0);
    let e = matrix_exp(&a.scale_real(0.7)).unwrap();
    assert!((e[(0, 0)].re - 0.7f32.cos()).abs() < 1e-5);
    assert!((e[(1, 0)].re - 0.7f32.sin()).abs() < 1e-5);
    assert!((operator_norm(&e).unwrap() - 1.0).abs() < 1e-5);
}

#[test]
fn constant_propagation_decays_at_f32() {
    let a = Matrix::<f32>::diag_real(&[-0.5, -1.0]);
    let op = TimeVaryingOperator::constant(a).unwrap();
    let s = propagator(&op, 0.0f32, 2.0, 1e-5).unwrap();
    assert!((s[(0, 0)].re - (-1.0f32).exp()).abs() < 1e-4);
    assert!((s[(1, 1)].re - (-2.0f32).exp()).abs() < 1e-4);
}

#[test]
fn ruler_logarithm_round_trips_at_f32() {
    let p = linstab::kakutani::KakutaniParams::<f32>::new(0.9, 1.0, 2.0, 8, 1).unwrap();
    let a = linstab::kakutani::build_unstable(&p).unwrap();
    let t = Matrix::scalar(8, C32::new(0.9, 0.0)).add(&p.weights().unwrap().to_matrix());
    assert!(matrix_exp(&a).unwrap().sub(&t).max_abs() < 1e-4);
}
