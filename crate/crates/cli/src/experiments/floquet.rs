//! Pulse monodromy sweep: numerically integrated period maps against the
//! closed form, with multiplier moduli, over parameter grids.

use linstab::evolution::propagator;
use linstab::floquet::{monodromy_closed_form, multiplier_modulus, pulse_operator, FloquetParams};
use linstab::linalg::eigenvalues;

use crate::config::Params;
use crate::errors::Result;
use crate::experiments::Ctx;
use crate::output::{fnum, Report, Series};

struct Row {
    alpha: f64,
    beta: f64,
    period: f64,
    width: f64,
    mod_closed: f64,
    mod_numeric: f64,
    rel_err: f64,
}

pub fn run_sweep(p: &Params, ctx: &Ctx) -> Result<bool> {
    let alphas = p.f64_list_or("alpha-grid", &[0.5, 1.0])?;
    let betas = p.f64_list_or("beta-grid", &[1.0, 2.0, 3.0])?;
    let periods = p.f64_list_or("T-grid", &[2.0, 5.0, 10.0])?;
    let widths = p.f64_list_or("delta-grid", &[0.5, 1.0])?;
    let rel_cap = p.f64_or("rel-cap", 1e-8)?;
    let mod_cap = p.f64_or("mod-cap", 1e-10)?;
    let tol = ctx.tol_or(1e-10);
    p.finish()?;

    let mut rows = Vec::new();
    let mut pass = true;
    for &alpha in &alphas {
        for &beta in &betas {
            for &period in &periods {
                for &width in &widths {
                    if !(alpha < beta && width < period) {
                        continue;
                    }
                    let fp = FloquetParams::new(alpha, beta, period, width)?;
                    let op = pulse_operator(&fp)?;
                    let y_num = propagator(&op, 0.0, period, tol)?;
                    let y_closed = monodromy_closed_form(&fp)?;
                    let rel_err = y_num.sub(&y_closed).max_abs() / y_closed.max_abs();
                    let mod_closed = multiplier_modulus(&fp)?;
                    let mod_numeric = eigenvalues(&y_num)?
                        .iter()
                        .map(|l| l.norm())
                        .fold(0.0_f64, f64::max);
                    if rel_err > rel_cap || (mod_numeric - mod_closed).abs() > mod_cap {
                        pass = false;
                    }
                    rows.push(Row {
                        alpha,
                        beta,
                        period,
                        width,
                        mod_closed,
                        mod_numeric,
                        rel_err,
                    });
                }
            }
        }
    }

    let mut rep = Report::new(&ctx.out, "floquet sweep", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put("combinations", &rows.len().to_string());
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fnum(r.alpha),
                fnum(r.beta),
                fnum(r.period),
                fnum(r.width),
                fnum(r.mod_closed),
                fnum(r.mod_numeric),
                fnum(r.rel_err),
            ]
        })
        .collect();
    rep.csv(
        "floquet.csv",
        &["alpha", "beta", "T", "delta", "mod_closed", "mod_numeric", "rel_err"],
        &csv_rows,
    )?;
    if ctx.svg {
        // one modulus-versus-period series per (alpha, beta, delta)
        let mut series: Vec<Series> = Vec::new();
        for &alpha in &alphas {
            for &beta in &betas {
                for &width in &widths {
                    let pts: Vec<(f64, f64)> = rows
                        .iter()
                        .filter(|r| {
                            r.alpha == alpha && r.beta == beta && r.width == width
                        })
                        .map(|r| (r.period, r.mod_numeric))
                        .collect();
                    if !pts.is_empty() {
                        series.push(Series {
                            label: format!("a={alpha} b={beta} d={width}"),
                            points: pts,
                        });
                    }
                }
            }
        }
        rep.svg("floquet.svg", "multiplier modulus versus period", &series)?;
    }
    rep.finish()?;

    let worst = rows.iter().map(|r| r.rel_err).fold(0.0_f64, f64::max);
    println!("floquet: {} combinations, worst rel_err {}", rows.len(), fnum(worst));
    Ok(pass)
}
