//! End-to-end scenarios that cross module boundaries: measured hypotheses
//! feeding the closed-form bound, closed-form solutions checking the
//! integrator, and the planar pulse example checked over many periods.

mod common;

use linstab::bounds::{beta_bound, RobustnessParams};
use linstab::evolution::{
    certify_bound, default_grid, propagator, Propagator, TimeVaryingOperator,
};
use linstab::floquet::{monodromy_closed_form, pulse_operator, FloquetParams};
use linstab::linalg::{matrix_exp, matrix_log, operator_norm, Matrix};
use linstab::scalar::C;
use linstab::signals::{integral_smallness, Signal};

type C64 = C<f64>;

// ── Measured hypotheses into the closed-form bound ──────────────────────────

#[test]
fn a_measured_system_certifies_at_its_closed_form_bound() {
    // Normal stable part: rates -1 and -0.6 mixed by a rotation; measured
    // prefactor 1 at the spectral abscissa.
    let mut q = Matrix::zeros(2);
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    q[(0, 0)] = C64::new(c, 0.0);
    q[(0, 1)] = C64::new(-s, 0.0);
    q[(1, 0)] = C64::new(s, 0.0);
    q[(1, 1)] = C64::new(c, 0.0);
    let a = q
        .matmul(&Matrix::diag_real(&[-1.0, -0.6]))
        .matmul(&q.adjoint());
    let alpha = -0.6;
    let k = 1.0;

    // Perturbation b(t) B0 with a window-integral budget measured, not
    // assumed.
    let b0 = {
        let mut m = Matrix::zeros(2);
        m[(0, 1)] = C64::new(0.4, 0.0);
        m[(1, 0)] = C64::new(-0.3, 0.0);
        m[(0, 0)] = C64::new(0.2, 0.0);
        m
    };
    let sig = Signal::cosine(6.0, 0.0);
    let m_bound = operator_norm(&b0).unwrap() * sig.sup_bound();
    let h = 1.0;
    let t_end = 12.0;
    let delta = {
        let window = integral_smallness(&sig, h, (0.0, t_end)).unwrap().value;
        window * operator_norm(&b0).unwrap()
    };

    let params = RobustnessParams::new(alpha, k, m_bound, delta, h).unwrap();
    let beta = beta_bound(&params).unwrap();
    assert!(beta < 0.0, "perturbation too large for a decay certificate");

    let op = TimeVaryingOperator::signal_product(sig, b0, a).unwrap();
    let prop = Propagator::new(&op, 1e-10).unwrap();
    let pairs = default_grid(t_end, h).unwrap();
    let cert = certify_bound(&prop, (1.0 + delta) * k, beta, &pairs, 1e-8).unwrap();
    assert!(cert.passed(), "max ratio {}", cert.max_ratio);
}

// ── Closed-form solution of a commuting time-varying system ─────────────────

#[test]
fn commuting_signal_product_matches_its_exact_solution() {
    // x' = cos(t) F x with constant F: the solution is exp(sin(t) F).
    let mut f = Matrix::zeros(2);
    f[(0, 0)] = C64::new(0.3, 0.0);
    f[(0, 1)] = C64::new(0.8, 0.0);
    f[(1, 0)] = C64::new(-0.2, 0.0);
    f[(1, 1)] = C64::new(-0.5, 0.0);
    let op = TimeVaryingOperator::signal_product(
        Signal::cosine(1.0, 0.0),
        f.clone(),
        Matrix::zeros(2),
    )
    .unwrap();
    for t in [0.7, 2.0, 5.5] {
        let s = propagator(&op, 0.0, t, 1e-11).unwrap();
        let exact = matrix_exp(&f.scale_real(t.sin())).unwrap();
        let diff = s.sub(&exact).max_abs();
        assert!(diff < 1e-9, "t = {t}: diff {diff}");
    }
}

// ── Pulse example across many periods ───────────────────────────────────────

#[test]
fn pulse_propagation_powers_the_closed_form_monodromy() {
    let p = FloquetParams::new(0.5, 2.0, 5.0, 1.0).unwrap();
    let op = pulse_operator(&p).unwrap();
    let m = monodromy_closed_form(&p).unwrap();
    let k = 7usize;
    let s = propagator(&op, 0.0, 5.0 * k as f64, 1e-10).unwrap();
    let mk = m.pow(k);
    let rel = s.sub(&mk).max_abs() / mk.max_abs();
    assert!(rel < 1e-8, "relative drift {rel} over {k} periods");
}

// ── The ell^2 example decays at the predicted rate ──────────────────────────

#[test]
fn shift_example_decays_at_half_the_diagonal_rate() {
    // L = a(I - D) with ||log(I - D)|| <= -log(1 - nu/a) = 0.223 < a/2; the
    // generator log L then satisfies ||e^{tA}|| <= e^{t(log a + 0.223)},
    // inside the predicted e^{-a t / 2} envelope with prefactor 1.
    let (a, nu, n) = (0.5, 0.1, 32);
    let l = linstab::shifts::scalar_plus_shift(a, nu, n).unwrap();
    let gen = matrix_log(&l).unwrap();
    let op = TimeVaryingOperator::constant(gen).unwrap();
    let prop = Propagator::new(&op, 1e-10).unwrap();
    let pairs = default_grid(24.0, 3.0).unwrap();
    let cert = certify_bound(&prop, 1.0, -a / 2.0, &pairs, 1e-8).unwrap();
    assert!(cert.passed(), "max ratio {}", cert.max_ratio);

    let report = linstab::bounds::l2_example_check::<f64>(
        &linstab::bounds::L2ExampleParams::new(a, nu, n).unwrap(),
    )
    .unwrap();
    assert!(report.constraint_ok && report.decay_ok);
    assert!((report.predicted_rate - 0.25).abs() < 1e-15);
}
