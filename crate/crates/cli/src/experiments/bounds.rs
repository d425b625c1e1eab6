//! Closed-form bound calculators: the perturbation exponent, the stability
//! region, the oscillation threshold, and the weighted-shift example checks.

use linstab::bounds::{
    beta_bound, l2_example_check, omega_threshold, smallness_triple_check, stability_region,
    L2ExampleParams, RobustnessParams,
};
use linstab::evolution::TimeVaryingOperator;
use linstab::linalg::{matrix_log, Matrix};
use linstab::shifts::{scalar_plus_shift, WeightSequence};
use linstab::signals::{integral_smallness, parse_signal, Signal};

use crate::config::Params;
use crate::errors::Result;
use crate::experiments::Ctx;
use crate::output::{fnum, Report, Series};

/// One-row experiment evaluating the perturbation exponent
/// beta = alpha + 3 M K delta + log((1 + delta) K) / h.
pub fn run_beta(p: &Params, ctx: &Ctx) -> Result<bool> {
    let alpha = p.req_f64("alpha")?;
    let k = p.req_f64("K")?;
    let m = p.req_f64("M")?;
    let delta = p.req_f64("delta")?;
    let h = p.req_f64("h")?;
    p.finish()?;

    let beta = beta_bound(&RobustnessParams::new(alpha, k, m, delta, h)?)?;

    let mut rep = Report::new(&ctx.out, "bounds beta", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put_num("beta", beta);
    rep.csv(
        "beta.csv",
        &["alpha", "K", "M", "delta", "h", "beta"],
        &[vec![fnum(alpha), fnum(k), fnum(m), fnum(delta), fnum(h), fnum(beta)]],
    )?;
    rep.finish()?;
    println!("beta = {}", fnum(beta));
    Ok(true)
}

const DEFAULT_H_GRID: [f64; 11] =
    [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];

/// Stability region sweep: for each h, the largest delta keeping the
/// exponent negative, on the query grid and refined by bisection.
pub fn run_region(p: &Params, ctx: &Ctx) -> Result<bool> {
    let alpha = p.req_f64("alpha")?;
    let k = p.req_f64("K")?;
    let m = p.req_f64("M")?;
    let h_grid = p.f64_list_or("h-grid", &DEFAULT_H_GRID)?;
    let default_deltas: Vec<f64> = (1..=200).map(|i| i as f64 * 0.005).collect();
    let delta_grid = p.f64_list_or("delta-grid", &default_deltas)?;
    p.finish()?;

    let samples = stability_region(alpha, m, k, &h_grid, &delta_grid)?;

    let mut rep = Report::new(&ctx.out, "bounds region", ctx.seed)?;
    rep.echo_params(&p.echo());
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            vec![
                fnum(s.h),
                s.grid_delta.map(fnum).unwrap_or_default(),
                s.boundary.map(fnum).unwrap_or_default(),
            ]
        })
        .collect();
    rep.csv("region.csv", &["h", "grid_delta", "boundary"], &rows)?;
    if ctx.svg {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter_map(|s| s.boundary.map(|b| (s.h, b)))
            .collect();
        rep.svg(
            "region.svg",
            "delta boundary versus window length h",
            &[Series { label: "boundary".into(), points: pts }],
        )?;
    }
    rep.finish()?;
    println!("region: {} h columns", samples.len());
    Ok(true)
}

/// The frequency threshold omega0 = M T0 / delta.
pub fn run_omega0(p: &Params, ctx: &Ctx) -> Result<bool> {
    let m = p.req_f64("M")?;
    let t0 = p.req_f64("T0")?;
    let delta = p.req_f64("delta")?;
    p.finish()?;

    let omega0 = omega_threshold(m, t0, delta)?;

    let mut rep = Report::new(&ctx.out, "bounds omega0", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put_num("omega0", omega0);
    rep.csv(
        "omega0.csv",
        &["M", "T0", "delta", "omega0"],
        &[vec![fnum(m), fnum(t0), fnum(delta), fnum(omega0)]],
    )?;
    rep.finish()?;
    println!("omega0 = {}", fnum(omega0));
    Ok(true)
}

/// Parameter check for the weighted-shift example; passes when the decay
/// conclusion applies.
pub fn run_l2check(p: &Params, ctx: &Ctx) -> Result<bool> {
    let a = p.f64_or("a", 0.5)?;
    let nu = p.f64_or("nu", 0.1)?;
    let n = p.usize_or("N", 64)?;
    p.finish()?;

    let l2 = l2_example_check(&L2ExampleParams::new(a, nu, n)?)?;

    let mut rep = Report::new(&ctx.out, "bounds l2check", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.csv(
        "l2check.csv",
        &["a", "nu", "N", "constraint_ok", "log_bound", "decay_ok", "predicted_rate"],
        &[vec![
            fnum(a),
            fnum(nu),
            n.to_string(),
            l2.constraint_ok.to_string(),
            fnum(l2.log_bound),
            l2.decay_ok.to_string(),
            fnum(l2.predicted_rate),
        ]],
    )?;
    rep.finish()?;
    println!(
        "l2check: constraint_ok={} decay_ok={} rate={}",
        l2.constraint_ok,
        l2.decay_ok,
        fnum(l2.predicted_rate)
    );
    Ok(l2.decay_ok)
}

/// Averaged-smallness triple check on the weighted-shift system perturbed by
/// a scalar signal times the plain shift.
pub fn run_triple(p: &Params, ctx: &Ctx) -> Result<bool> {
    let a = p.f64_or("a", 0.5)?;
    let nu = p.f64_or("nu", 0.1)?;
    let n = p.usize_or("N", 64)?;
    let expr = p.str_or("expr", "sum(bump,cos(1,0))");
    let omega = p.f64_or("omega", 1.0)?;
    let h = p.f64_or("h", 0.25)?;
    let t_max = p.f64_or("t-max", 10.0)?;
    let offsets = p.usize_or("offsets", 8)?;

    let sig: Signal<f64> = parse_signal(&expr)?;
    let dil = if omega == 1.0 { sig } else { sig.dilated(omega) };
    let gen = matrix_log(&scalar_plus_shift(a, nu, n)?)?;
    let shift = plain_shift(n);
    let m = match p.f64_opt("M")? {
        Some(v) => v,
        None => dil.sup_bound(),
    };
    let delta = match p.f64_opt("delta")? {
        Some(v) => v,
        None => {
            let small = integral_smallness(&dil, h, (0.0, t_max + h))?;
            small.value + small.discretization_bound
        }
    };
    p.finish()?;

    let bfun = TimeVaryingOperator::signal_product(dil, shift, Matrix::zeros(n))?;
    let step = h.max(t_max / 64.0);
    let mut t_grid = Vec::new();
    let mut t = 0.0;
    while t <= t_max {
        t_grid.push(t);
        t += step;
    }
    let tri = smallness_triple_check(&gen, &bfun, h, m, delta, &t_grid, offsets)?;

    let mut rep = Report::new(&ctx.out, "bounds triple", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put_num("M", m);
    rep.put_num("delta", delta);
    rep.csv(
        "triple.csv",
        &["t", "u", "which", "norm", "budget", "ratio", "pass"],
        &[vec![
            fnum(tri.worst.t),
            fnum(tri.worst.u),
            tri.worst.which.to_string(),
            fnum(tri.worst.norm),
            fnum(m * delta),
            fnum(tri.worst_ratio),
            tri.pass.to_string(),
        ]],
    )?;
    rep.finish()?;
    println!("triple: worst ratio {} pass={}", fnum(tri.worst_ratio), tri.pass);
    Ok(tri.pass)
}

/// The unweighted truncated shift e_i -> e_(i+1); a partial isometry of
/// norm exactly one.
pub fn plain_shift(n: usize) -> Matrix<f64> {
    WeightSequence::explicit(vec![1.0; n.saturating_sub(1)]).to_matrix()
}
