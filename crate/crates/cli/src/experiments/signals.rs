//! Scalar signal diagnostics: windowed means, window-integral suprema, and
//! the zero-mean threshold scan.

use linstab::signals::{
    default_window_starts, integral_smallness, integral_smallness_with_step, mean_value,
    parse_signal, t0_estimate, Signal,
};

use crate::config::Params;
use crate::errors::{CliError, Result};
use crate::experiments::Ctx;
use crate::output::{fnum, Report, Series};

/// Dispatches on `mode`: `mean`, `window`, or `t0`.
pub fn run(p: &Params, ctx: &Ctx) -> Result<bool> {
    let mode = p.str_or("mode", "mean");
    let expr = p.req_str("expr")?;
    let sig: Signal<f64> = parse_signal(&expr)?;
    match mode.as_str() {
        "mean" => run_mean(&sig, p, ctx),
        "window" => run_window(&sig, p, ctx),
        "t0" => run_t0(&sig, p, ctx),
        other => Err(CliError::Usage(format!(
            "mode must be mean, window, or t0; got '{other}'"
        ))),
    }
}

fn run_mean(sig: &Signal<f64>, p: &Params, ctx: &Ctx) -> Result<bool> {
    let t_window = p.f64_or("T", 10.0)?;
    let lo = p.f64_or("lo", 0.0)?;
    let hi = p.f64_or("hi", 20.0)?;
    p.finish()?;

    let starts = default_window_starts(sig, lo, hi);
    let est = mean_value(sig, t_window, &starts)?;

    let mut rep = Report::new(&ctx.out, "signals mean", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.csv(
        "mean.csv",
        &["value", "t_window", "a_samples", "dispersion"],
        &[vec![
            fnum(est.value),
            fnum(est.t_used),
            est.a_samples.to_string(),
            fnum(est.dispersion),
        ]],
    )?;
    plot(sig, lo, hi + t_window, &rep, ctx)?;
    rep.finish()?;
    println!("mean = {} (dispersion {})", fnum(est.value), fnum(est.dispersion));
    Ok(true)
}

fn run_window(sig: &Signal<f64>, p: &Params, ctx: &Ctx) -> Result<bool> {
    let h = p.req_f64("h")?;
    let lo = p.f64_or("lo", 0.0)?;
    let hi = p.f64_or("hi", (lo + 20.0).max(lo + 4.0 * h))?;
    let step = p.f64_opt("step")?;
    p.finish()?;

    let small = match step {
        Some(s) => integral_smallness_with_step(sig, h, (lo, hi), s)?,
        None => integral_smallness(sig, h, (lo, hi))?,
    };

    let mut rep = Report::new(&ctx.out, "signals window", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.csv(
        "window.csv",
        &["h", "value", "step", "discretization_bound"],
        &[vec![
            fnum(h),
            fnum(small.value),
            fnum(small.step),
            fnum(small.discretization_bound),
        ]],
    )?;
    plot(sig, lo, hi, &rep, ctx)?;
    rep.finish()?;
    println!("window sup = {}", fnum(small.value));
    Ok(true)
}

fn run_t0(sig: &Signal<f64>, p: &Params, ctx: &Ctx) -> Result<bool> {
    let eps = p.req_f64("eps")?;
    p.finish()?;

    let t0 = t0_estimate(sig, eps)?;

    let mut rep = Report::new(&ctx.out, "signals t0", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put_num("t0", t0);
    rep.csv("t0.csv", &["eps", "t0"], &[vec![fnum(eps), fnum(t0)]])?;
    plot(sig, 0.0, 20.0, &rep, ctx)?;
    rep.finish()?;
    println!("t0 = {}", fnum(t0));
    Ok(true)
}

/// Optional signal plot over [lo, hi], capped at 1600 samples.
fn plot(sig: &Signal<f64>, lo: f64, hi: f64, rep: &Report, ctx: &Ctx) -> Result<()> {
    if !ctx.svg {
        return Ok(());
    }
    let n = 1600;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            (t, sig.eval(t))
        })
        .collect();
    rep.svg(
        "signal.svg",
        "signal samples",
        &[Series { label: "b(t)".into(), points: pts }],
    )
}
