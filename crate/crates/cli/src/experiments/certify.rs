//! Exponential-bound certification: named single systems, and the
//! randomized suite exercising the integral-smallness robustness bound on
//! measured constant systems.

use linstab::bounds::{beta_bound, RobustnessParams};
use linstab::evolution::{certify_bound, default_grid, Propagator, TimeVaryingOperator};
use linstab::floquet::{multiplier_modulus, pulse_operator, FloquetParams};
use linstab::linalg::{eigenvalues, matrix_exp, matrix_log, operator_norm, Matrix};
use linstab::scalar::C;
use linstab::shifts::scalar_plus_shift;
use linstab::signals::{integral_smallness, Signal};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Params;
use crate::errors::{CliError, Result};
use crate::experiments::Ctx;
use crate::output::{fnum, Report};

pub fn run(p: &Params, ctx: &Ctx) -> Result<bool> {
    if p.is_empty() {
        return Err(CliError::Usage(
            "certify needs parameters; try system=constant-diag rates=-1,-2 \
             or suite=20"
                .into(),
        ));
    }
    match p.usize_opt("suite")? {
        Some(count) => run_suite(count, p, ctx),
        None => run_single(p, ctx),
    }
}

// ── Single named systems ────────────────────────────────────────────────────

fn run_single(p: &Params, ctx: &Ctx) -> Result<bool> {
    let system = p.req_str("system")?;
    let t_end = p.f64_or("t-end", 20.0)?;
    let h = p.f64_or("h", 1.0)?;
    let tol_cert = p.f64_or("tol-cert", 1e-6)?;
    let tol = ctx.tol_or(1e-9);

    // the coefficient plus a measured (or closed-form) reference rate
    let (op, rate) = match system.as_str() {
        "constant-diag" => {
            let rates = p.f64_list_or("rates", &[-0.5, -1.5])?;
            if rates.is_empty() {
                return Err(CliError::Usage("rates list is empty".into()));
            }
            let a = Matrix::diag_real(&rates);
            // measured true rate: the norm of e^{tA} at the far end of the
            // window fixes the envelope's slope
            let t_meas = p.f64_or("t-measure", t_end)?;
            let rate = operator_norm(&matrix_exp(&a.scale_real(t_meas))?)?.ln() / t_meas;
            (TimeVaryingOperator::constant(a)?, rate)
        }
        "l2" => {
            let la = p.f64_or("a", 0.5)?;
            let nu = p.f64_or("nu", 0.1)?;
            let n = p.usize_or("N", 64)?;
            let a = matrix_log(&scalar_plus_shift(la, nu, n)?)?;
            (TimeVaryingOperator::constant(a)?, -la / 2.0)
        }
        "pulse" => {
            let alpha_f = p.f64_or("alpha-f", 0.5)?;
            let beta_f = p.f64_or("beta-f", 2.0)?;
            let period = p.f64_or("T", 5.0)?;
            let width = p.f64_or("width", 1.0)?;
            let fp = FloquetParams::new(alpha_f, beta_f, period, width)?;
            let rate = multiplier_modulus(&fp)?.ln() / period;
            (pulse_operator(&fp)?, rate)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown system '{other}'; expected constant-diag, l2, or pulse"
            )))
        }
    };

    // tighten moves beta below the reference rate by the given fraction of
    // its magnitude; an explicit beta key overrides everything
    let beta = match p.f64_opt("beta")? {
        Some(b) => b,
        None => {
            let tighten = p.f64_or("tighten", 0.0)?;
            rate - tighten * rate.abs()
        }
    };
    certify_operator(op, &system, rate, beta, t_end, h, tol, tol_cert, p, ctx)
}

#[allow(clippy::too_many_arguments)]
fn certify_operator(
    op: TimeVaryingOperator<f64>,
    system: &str,
    rate_measured: f64,
    beta: f64,
    t_end: f64,
    h: f64,
    tol: f64,
    tol_cert: f64,
    p: &Params,
    ctx: &Ctx,
) -> Result<bool> {
    let c_given = p.f64_opt("C")?;
    p.finish()?;

    let prop = Propagator::new(&op, tol)?;
    let pairs = default_grid(t_end, h)?;
    // with no explicit prefactor, measure the envelope at the MEASURED rate
    // and publish 5 percent above it (floored at the mandatory 1); the
    // certificate then tests the claimed beta against that fixed constant,
    // so an overtightened beta fails instead of being absorbed into C
    let c = match c_given {
        Some(c) => c,
        None => {
            let probe = certify_bound(&prop, 1.0, rate_measured, &pairs, 1e18)?;
            (1.05 * probe.max_ratio).max(1.0)
        }
    };
    let cert = certify_bound(&prop, c, beta, &pairs, tol_cert)?;

    let mut rep = Report::new(&ctx.out, &format!("certify {system}"), ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put_num("rate_measured", rate_measured);
    rep.put_num("C", c);
    rep.put_num("beta", beta);
    rep.put_num("max_ratio", cert.max_ratio);
    rep.put("verdict", if cert.passed() { "pass" } else { "fail" });
    let rows: Vec<Vec<String>> = cert
        .pairs
        .iter()
        .map(|sp| {
            vec![fnum(sp.s), fnum(sp.t), fnum(sp.norm), fnum(sp.bound), fnum(sp.ratio)]
        })
        .collect();
    rep.csv("cert.csv", &["s", "t", "norm", "bound", "ratio"], &rows)?;
    rep.csv(
        "summary.csv",
        &["system", "C", "beta", "max_ratio", "verdict"],
        &[vec![
            system.to_string(),
            fnum(c),
            fnum(beta),
            fnum(cert.max_ratio),
            if cert.passed() { "pass".into() } else { "fail".into() },
        ]],
    )?;
    rep.finish()?;
    println!(
        "certify {system}: C={} beta={} max ratio {} -> {}",
        fnum(c),
        fnum(beta),
        fnum(cert.max_ratio),
        if cert.passed() { "pass" } else { "fail" }
    );
    Ok(cert.passed())
}

// ── Randomized suite ────────────────────────────────────────────────────────

struct DrawnSystem {
    dim: usize,
    normal: bool,
    a: Matrix<f64>,
    alpha: f64,
    k: f64,
    b0: Matrix<f64>,
    sig: Signal<f64>,
    m: f64,
}

/// Randomized robustness suite: stable constant systems with measured
/// envelopes, perturbed by a scalar cosine times a fixed matrix, certified
/// at the closed-form exponent.
fn run_suite(count: usize, p: &Params, ctx: &Ctx) -> Result<bool> {
    if count == 0 {
        return Err(CliError::Usage("suite size must be positive".into()));
    }
    let dim_max = p.usize_or("dim-max", 8)?;
    if !(2..=24).contains(&dim_max) {
        return Err(CliError::Usage(format!(
            "dim-max must be between 2 and 24, got {dim_max}"
        )));
    }
    let t_end = p.f64_or("t-end", 12.0)?;
    let h = p.f64_or("h", 1.0)?;
    let tol_cert = p.f64_or("tol-cert", 1e-6)?;
    let tol = ctx.tol_or(1e-8);
    p.finish()?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut worst_overall = 0.0_f64;
    for idx in 0..count {
        let sys = draw_system(&mut rng, dim_max, idx)?;

        // the perturbation's window-integral bound, measured on a domain
        // covering every certification window, made safe by adding the
        // discretization slack
        let small = integral_smallness(&sys.sig, h, (0.0, t_end + 4.0 * h))?;
        let b0_norm = operator_norm(&sys.b0)?;
        let delta = (small.value + small.discretization_bound) * b0_norm;

        let rp = RobustnessParams::new(sys.alpha, sys.k, sys.m, delta, h)?;
        let beta = beta_bound(&rp)?;
        let c = (1.0 + delta) * sys.k;

        let op = TimeVaryingOperator::signal_product(
            sys.sig.clone(),
            sys.b0.clone(),
            sys.a.clone(),
        )?;
        let prop = Propagator::new(&op, tol)?;
        let pairs = default_grid(t_end, h)?;
        let cert = certify_bound(&prop, c, beta, &pairs, tol_cert)?;
        if !cert.passed() {
            all_pass = false;
        }
        worst_overall = worst_overall.max(cert.max_ratio);

        rows.push(vec![
            idx.to_string(),
            sys.dim.to_string(),
            sys.normal.to_string(),
            fnum(sys.alpha),
            fnum(sys.k),
            fnum(sys.m),
            fnum(delta),
            fnum(beta),
            fnum(c),
            fnum(cert.max_ratio),
            cert.passed().to_string(),
        ]);
    }

    let mut rep = Report::new(&ctx.out, "certify suite", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put("systems", &count.to_string());
    rep.put_num("worst_ratio", worst_overall);
    rep.put("all_pass", &all_pass.to_string());
    rep.csv(
        "suite.csv",
        &[
            "index", "dim", "normal", "alpha", "K", "M", "delta", "beta", "C",
            "max_ratio", "pass",
        ],
        &rows,
    )?;
    rep.finish()?;
    println!(
        "suite: {count} systems, worst ratio {}, all pass={all_pass}",
        fnum(worst_overall)
    );
    Ok(all_pass)
}

/// Draws one test system.  Even indices are normal (orthogonally conjugated
/// diagonals, envelope K = 1 exact); odd indices add a small triangular bump
/// and measure the envelope numerically.
fn draw_system(rng: &mut ChaCha8Rng, dim_max: usize, idx: usize) -> Result<DrawnSystem> {
    let dim = 2 + rng.gen_range(0..=(dim_max - 2));
    let normal = idx % 2 == 0;

    let rates: Vec<f64> = (0..dim).map(|_| -(0.6 + 1.6 * rng.gen::<f64>())).collect();
    let alpha_spec = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut a = Matrix::diag_real(&rates);
    for _ in 0..3 * dim {
        let i = rng.gen_range(0..dim);
        let mut j = rng.gen_range(0..dim);
        if i == j {
            j = (j + 1) % dim;
        }
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        a = rotate(&a, i, j, theta);
    }

    let (alpha, k) = if normal {
        // exact envelope: the conjugation is orthogonal
        (alpha_spec, 1.0)
    } else {
        let mut bump = Matrix::zeros(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                bump[(i, j)] = C::new(2.0 * rng.gen::<f64>() - 1.0, 0.0);
            }
        }
        let target = 0.05 + 0.1 * rng.gen::<f64>();
        let bn = operator_norm(&bump)?;
        if bn > 0.0 {
            bump = bump.scale_real(target / bn);
        }
        a = a.add(&bump);
        let abscissa = eigenvalues(&a)?
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let alpha = abscissa + 0.02;
        let k = measure_envelope(&a, alpha)?;
        (alpha, k)
    };

    // scalar cosine perturbation times a normalized direction matrix
    let freq = 6.0 + 10.0 * rng.gen::<f64>();
    let phase = rng.gen::<f64>() * std::f64::consts::TAU;
    let amp = 0.2 + 0.4 * rng.gen::<f64>();
    let sig = Signal::cosine(freq, phase).scaled(amp);
    let mut b0 = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            b0[(i, j)] = C::new(2.0 * rng.gen::<f64>() - 1.0, 0.0);
        }
    }
    let bn = operator_norm(&b0)?;
    b0 = b0.scale_real(1.0 / bn);
    let b0_norm = operator_norm(&b0)?;
    let m = sig.sup_bound() * b0_norm * (1.0 + 1e-12);

    Ok(DrawnSystem { dim, normal, a, alpha, k, b0, sig, m })
}

/// Similarity by a plane rotation in coordinates (i, j).
fn rotate(a: &Matrix<f64>, i: usize, j: usize, theta: f64) -> Matrix<f64> {
    let dim = a.dim();
    let mut g = Matrix::identity(dim);
    let (c, s) = (theta.cos(), theta.sin());
    g[(i, i)] = C::new(c, 0.0);
    g[(j, j)] = C::new(c, 0.0);
    g[(i, j)] = C::new(s, 0.0);
    g[(j, i)] = C::new(-s, 0.0);
    g.matmul(a).matmul(&g.adjoint())
}

/// Measured envelope prefactor: sup_t ||e^{tA}|| e^{-alpha t} on a dense
/// grid, each segment inflated by its worst possible inter-sample drift
/// e^{(||A|| + |alpha|) step}, so the result upper-bounds the true
/// supremum on the scanned range.
fn measure_envelope(a: &Matrix<f64>, alpha: f64) -> Result<f64> {
    let lipschitz = operator_norm(a)? + alpha.abs();
    let scan = |t0: f64, t1: f64, step: f64| -> Result<f64> {
        let inc = matrix_exp(&a.scale_real(step))?;
        let mut pw = matrix_exp(&a.scale_real(t0))?;
        let mut t = t0;
        let mut seg_best = 0.0_f64;
        while t <= t1 + 1e-12 {
            let ratio = operator_norm(&pw)? * (-alpha * t).exp();
            seg_best = seg_best.max(ratio);
            pw = pw.matmul(&inc);
            t += step;
        }
        Ok(seg_best * (lipschitz * step).exp())
    };
    let fine = scan(0.0, 8.0, 0.02)?;
    let coarse = scan(8.0, 60.0, 0.25)?;
    Ok(fine.max(coarse).max(1.0))
}
