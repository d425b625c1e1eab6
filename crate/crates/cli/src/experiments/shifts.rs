//! Weight-sequence inspection: dump ruler weights (optionally with one
//! level deleted) as a single-column CSV.

use linstab::shifts::{kakutani_weights, Nilpotency};

use crate::config::Params;
use crate::errors::Result;
use crate::experiments::Ctx;
use crate::output::{fnum, Report};

pub fn run_dump(p: &Params, ctx: &Ctx) -> Result<bool> {
    let amp = p.f64_or("M", 1.0)?;
    let ratio = p.f64_or("K", 2.0)?;
    let n = p.usize_or("N", 64)?;
    let level = p.usize_opt("level")?;
    p.finish()?;

    let mut ws = kakutani_weights(amp, ratio, n)?;
    if let Some(m) = level {
        ws = ws.without_level(m)?;
    }

    let mut rep = Report::new(&ctx.out, "shifts dump", ctx.seed)?;
    rep.echo_params(&p.echo());
    rep.put("truncation_dim", &ws.truncation_dim().to_string());
    rep.put_num("sup_weight", ws.sup_weight());
    let nil = match ws.nilpotency() {
        Nilpotency::Exact(k) => format!("exact index {k}"),
        Nilpotency::TruncationLimited(k) => format!("truncation-limited at power {k}"),
    };
    rep.put("nilpotency", &nil);

    let rows: Vec<Vec<String>> = ws.weights().iter().map(|&w| vec![fnum(w)]).collect();
    rep.csv("weights.csv", &["weight"], &rows)?;
    rep.finish()?;
    println!("{} weights, {}", ws.len(), nil);
    Ok(true)
}
