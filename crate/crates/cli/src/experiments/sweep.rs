//! Rapid-oscillation pipeline on the truncated weighted-shift example.
//!
//! Stage one fixes the hypothesis constants: the decay envelope of the
//! unperturbed generator, the window length h, the window budget delta
//! chosen so the closed-form exponent stays below the target rate, the
//! zero-mean threshold T0, and the frequency floor omega0 = M T0 / delta.
//! Stage two runs one cell per requested frequency multiple: dilate the
//! signal, verify the window bound directly, and certify decay at the
//! target rate with an empirically measured prefactor.  Cells run
//! concurrently; output rows are merged in cell order.

use std::f64::consts::PI;

use linstab::bounds::{
    beta_bound, l2_example_check, omega_threshold, stability_region, L2ExampleParams,
    RobustnessParams,
};
use linstab::evolution::{certify_bound, default_grid, Propagator, TimeVaryingOperator};
use linstab::linalg::{matrix_exp, matrix_log, operator_norm, Matrix};
use linstab::shifts::scalar_plus_shift;
use linstab::signals::{integral_smallness, parse_signal, t0_estimate, Signal};

use crate::config::Params;
use crate::errors::{CliError, Result};
use crate::experiments::bounds::plain_shift;
use crate::experiments::Ctx;
use crate::output::{fnum, Report, Series};

struct Cell {
    mult: f64,
    omega: f64,
    periods_per_quarter: u64,
    window_value: f64,
    window_disc: f64,
    delta_ok: bool,
    sup_ratio: f64,
    k_tilde: f64,
    max_ratio: f64,
    passed: bool,
}

pub fn run(p: &Params, ctx: &Ctx) -> Result<bool> {
    let a = p.f64_or("a", 0.5)?;
    let nu = p.f64_or("nu", 0.1)?;
    let n = p.usize_or("N", 64)?;
    let expr = p.str_or("expr", "sum(bump,cos(1,0))");
    let h = p.f64_or("h", 0.25)?;
    let t_end = p.f64_or("t-end", 50.0)?;
    let mults = p.f64_list_or("omega-mult", &[1.0, 2.0])?;
    let k_cap = p.f64_or("k-cap", 10.0)?;
    let tol_cert = p.f64_or("tol-cert", 1e-6)?;
    let tol = ctx.tol_or(1e-9);

    if mults.iter().any(|&m| m < 1.0) {
        return Err(CliError::Usage(
            "omega-mult entries must be at least 1 (multiples of omega0)".into(),
        ));
    }

    let sig: Signal<f64> = parse_signal(&expr)?;
    let l2 = l2_example_check(&L2ExampleParams::new(a, nu, n)?)?;
    if !l2.decay_ok {
        return Err(CliError::Usage(format!(
            "parameters a={a}, nu={nu} do not yield the closed-form decay \
             envelope; pick nu < a (1 - e^(-a/2))"
        )));
    }
    let alpha = -l2.predicted_rate;
    let rate = p.f64_or("rate", alpha / 2.0)?;
    if !(rate > alpha && rate < 0.0) {
        return Err(CliError::Usage(format!(
            "target rate must lie in ({alpha}, 0), got {rate}"
        )));
    }

    let gen = matrix_log(&scalar_plus_shift(a, nu, n)?)?;
    // the envelope ||e^{tA}|| <= e^{alpha t} holds with prefactor one by
    // the log-bound argument; corroborate on a sample grid before using it
    verify_envelope(&gen, alpha)?;
    let k = 1.0;
    let shift = plain_shift(n);
    let m = sig.sup_bound();

    // delta: the feasibility boundary of the exponent formula, shifted so
    // "exponent below the target rate" becomes "shifted exponent below 0"
    let alpha_shift = alpha - rate;
    let delta_grid: Vec<f64> = (1..=400).map(|i| i as f64 * 2.5e-4).collect();
    let region = stability_region(alpha_shift, m, k, &[h], &delta_grid)?;
    let delta = region[0].boundary.ok_or_else(|| {
        CliError::Usage(format!(
            "no window budget reaches rate {rate} at h={h}; lengthen h or \
             relax the rate"
        ))
    })?;
    let beta = beta_bound(&RobustnessParams::new(alpha, k, m, delta, h)?)?;
    let eps = p.f64_or("eps", delta / m)?;
    let t0 = t0_estimate(&sig, eps)?;
    let omega0 = omega_threshold(m, t0, delta)?;
    p.finish()?;

    // one cell per frequency multiple, concurrently, merged in index order
    let cells: Vec<Cell> = {
        let mut slots: Vec<Option<Result<Cell>>> = Vec::new();
        slots.resize_with(mults.len(), || None);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for &mult in &mults {
                let (sig, gen, shift) = (&sig, &gen, &shift);
                handles.push(scope.spawn(move || {
                    run_cell(
                        mult, omega0, h, t_end, delta, rate, k_cap, tol, tol_cert, sig,
                        gen, shift,
                    )
                }));
            }
            for (slot, handle) in slots.iter_mut().zip(handles) {
                *slot = Some(handle.join().expect("sweep cell panicked"));
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("cell slot unfilled"))
            .collect::<Result<Vec<Cell>>>()?
    };

    let mut rep = Report::new(&ctx.out, "sweep", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put_num("alpha", alpha);
    rep.put_num("K", k);
    rep.put_num("M", m);
    rep.put_num("delta", delta);
    rep.put_num("beta", beta);
    rep.put_num("rate", rate);
    rep.put_num("eps", eps);
    rep.put_num("t0", t0);
    rep.put_num("omega0", omega0);
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                fnum(c.mult),
                fnum(c.omega),
                c.periods_per_quarter.to_string(),
                fnum(c.window_value),
                fnum(c.window_disc),
                c.delta_ok.to_string(),
                fnum(c.sup_ratio),
                fnum(c.k_tilde),
                fnum(c.max_ratio),
                c.passed.to_string(),
            ]
        })
        .collect();
    rep.csv(
        "sweep.csv",
        &[
            "mult", "omega", "periods_per_quarter", "window_value", "window_disc",
            "delta_ok", "sup_ratio", "k_tilde", "max_ratio", "pass",
        ],
        &rows,
    )?;
    if ctx.svg {
        let pts: Vec<(f64, f64)> =
            cells.iter().map(|c| (c.omega, c.sup_ratio)).collect();
        rep.svg(
            "sweep.svg",
            "envelope ratio at the target rate versus omega",
            &[Series { label: "sup ratio".into(), points: pts }],
        )?;
    }
    rep.finish()?;

    let pass = cells.iter().all(|c| c.passed);
    for c in &cells {
        println!(
            "omega {} -> window {} (<= {}), K~ {}, pass={}",
            fnum(c.omega),
            fnum(c.window_value),
            fnum(delta),
            fnum(c.k_tilde),
            c.passed
        );
    }
    Ok(pass)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    mult: f64,
    omega0: f64,
    h: f64,
    t_end: f64,
    delta: f64,
    rate: f64,
    k_cap: f64,
    tol: f64,
    tol_cert: f64,
    sig: &Signal<f64>,
    gen: &Matrix<f64>,
    shift: &Matrix<f64>,
) -> Result<Cell> {
    // snap omega upward so the certification step h spans an exact whole
    // number of oscillation periods: omega h = 8 pi k, i.e. h = 4k (2pi/omega);
    // every grid span is then an integer period count and the propagator's
    // monodromy powering applies throughout
    let target = omega0 * mult;
    let periods_per_quarter = ((target * h) / (8.0 * PI)).ceil().max(1.0);
    let omega = 8.0 * PI * periods_per_quarter / h;
    let dil = sig.clone().dilated(omega);

    // direct window-integral verification; past the (dilated) compact
    // features the signal repeats, so a domain of a few windows plus a
    // cushion of oscillation periods sees every window shape
    let full_len = t_end + 4.0 * h;
    let reduced_len = 2.0 * h + 64.0 * (2.0 * PI / omega);
    let step = (h / 1000.0).min(0.0625 / dil.freq_scale());
    let dom_len = if full_len / step <= 8e6 { full_len } else { reduced_len.min(full_len) };
    let small = integral_smallness(&dil, h, (0.0, dom_len))?;
    let delta_ok = small.value + small.discretization_bound <= delta;

    let op = TimeVaryingOperator::signal_product(dil, shift.clone(), gen.clone())?;
    let prop = Propagator::new(&op, tol)?;
    let pairs = default_grid(t_end, h)?;
    // measure the envelope at the target rate, then publish 5 percent above
    // the measured prefactor (floored at the mandatory 1)
    let probe = certify_bound(&prop, 1.0, rate, &pairs, 1e18)?;
    let sup_ratio = probe.max_ratio;
    let k_tilde = (1.05 * sup_ratio).max(1.0);
    let cert = certify_bound(&prop, k_tilde, rate, &pairs, tol_cert)?;

    Ok(Cell {
        mult,
        omega,
        periods_per_quarter: periods_per_quarter as u64,
        window_value: small.value,
        window_disc: small.discretization_bound,
        delta_ok,
        sup_ratio,
        k_tilde,
        max_ratio: cert.max_ratio,
        passed: delta_ok && cert.passed() && k_tilde <= k_cap,
    })
}

/// Corroborates the closed-form envelope ||e^{t gen}|| <= e^{alpha t} on a
/// sample grid; a violation means the generator was built wrong.
fn verify_envelope(gen: &Matrix<f64>, alpha: f64) -> Result<()> {
    let step = 0.5;
    let inc = matrix_exp(&gen.scale_real(step))?;
    let mut pw = Matrix::identity(gen.dim());
    for i in 0..=80 {
        let t = i as f64 * step;
        let ratio = operator_norm(&pw)? * (-alpha * t).exp();
        if ratio > 1.0 + 1e-9 {
            return Err(CliError::Core(linstab::Error::Numeric(format!(
                "measured envelope exceeds the closed form at t={t}: ratio {ratio}"
            ))));
        }
        pw = pw.matmul(&inc);
    }
    Ok(())
}
