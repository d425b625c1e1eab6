//! Command-line experiment runner.
//!
//! Every experiment writes a deterministic bundle (manifest.txt plus CSV
//! tables, optional SVG plots) into the --out directory.  Exit codes: 0 on
//! success, 1 when a certification check fails, 2 on usage errors, 3 on
//! numeric failures.

mod config;
mod errors;
mod experiments;
mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::Params;
use crate::errors::{CliError, Result};
use crate::experiments::{bounds, certify, floquet, kakutani, shifts, signals, sweep, Ctx};

#[derive(Parser)]
#[command(
    name = "linstab",
    version,
    about = "numerical laboratory for decay certification of time-varying linear systems"
)]
struct Cli {
    /// Output directory for manifests, tables and plots
    #[arg(long, global = true, default_value = "linstab-out")]
    out: PathBuf,
    /// Seed for every randomized draw inside the experiment
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also render SVG plots next to the CSV tables
    #[arg(long, global = true)]
    svg: bool,
    /// Propagator integration tolerance override
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form decay exponents and their feasibility maps
    Bounds {
        #[command(subcommand)]
        which: BoundsCmd,
    },
    /// Window statistics of scalar signals
    Signals {
        #[command(subcommand)]
        which: SignalsCmd,
    },
    /// Weighted-shift inspection
    Shifts {
        #[command(subcommand)]
        which: ShiftsCmd,
    },
    /// Pulsed planar benchmark with a closed-form monodromy
    Floquet {
        #[command(subcommand)]
        which: FloquetCmd,
    },
    /// Weighted-shift instability and its switching stabilizer
    Kakutani {
        #[command(subcommand)]
        which: KakutaniCmd,
    },
    /// Certify a decay bound for a named system
    Certify {
        /// Experiment parameters as key=value pairs
        params: Vec<String>,
    },
    /// Rapid-oscillation frequency sweep on the weighted-shift example
    Sweep {
        /// Experiment parameters as key=value pairs
        params: Vec<String>,
    },
    /// Run an experiment by name, or from a config file
    Run {
        /// Experiment name, or path to a key=value config file
        target: String,
        /// Extra key=value pairs (override file entries)
        params: Vec<String>,
    },
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Decay exponent from the perturbation-budget formula
    Beta { params: Vec<String> },
    /// Feasibility boundary over a grid of window lengths
    Region { params: Vec<String> },
    /// Frequency floor from the zero-mean threshold
    Omega0 { params: Vec<String> },
    /// Closed-form envelope check for the weighted-shift example
    #[command(name = "l2check")]
    L2check { params: Vec<String> },
    /// Worst-window comparison of signal, window bound and budget
    Triple { params: Vec<String> },
}

#[derive(Subcommand)]
enum SignalsCmd {
    /// Windowed mean estimate with dispersion across windows
    Mean { params: Vec<String> },
    /// Sliding-window integral bound of a signal
    Window { params: Vec<String> },
    /// Zero-mean threshold estimate
    #[command(name = "t0")]
    T0 { params: Vec<String> },
}

#[derive(Subcommand)]
enum ShiftsCmd {
    /// Dump the doubling-weight sequence and its nilpotency data
    Dump { params: Vec<String> },
}

#[derive(Subcommand)]
enum FloquetCmd {
    /// Compare integrated monodromies against the closed form over a grid
    Sweep {
        /// Comma-separated pulse heights
        #[arg(long)]
        alpha: Option<String>,
        /// Comma-separated rest-phase decay rates
        #[arg(long)]
        beta: Option<String>,
        /// Comma-separated periods
        #[arg(long = "T-grid")]
        t_grid: Option<String>,
        /// Comma-separated pulse widths
        #[arg(long = "delta-grid")]
        delta_grid: Option<String>,
        params: Vec<String>,
    },
}

#[derive(Subcommand)]
enum KakutaniCmd {
    /// Growth of the static weighted shift and level-wise certificates
    Static {
        /// Weight ratio of the shift
        #[arg(long = "R")]
        r: Option<f64>,
        /// Amplitude of the weight sequence
        #[arg(long = "M")]
        amp: Option<f64>,
        /// Doubling ratio between consecutive plateaus
        #[arg(long = "K")]
        ratio: Option<f64>,
        /// Truncation dimension
        #[arg(long = "N")]
        n: Option<usize>,
        /// Stabilization level cap for the certificate loop
        #[arg(long)]
        m: Option<usize>,
        params: Vec<String>,
    },
    /// Switching schedule that stabilizes the shift
    Schedule {
        /// Number of level switches past the base level
        #[arg(long)]
        steps: Option<usize>,
        /// Base stabilization level
        #[arg(long)]
        m0: Option<usize>,
        params: Vec<String>,
    },
    /// Drive trajectories under the schedule and verify the decay bound
    Verify {
        /// Number of level switches past the base level
        #[arg(long)]
        steps: Option<usize>,
        /// Base stabilization level
        #[arg(long)]
        m0: Option<usize>,
        params: Vec<String>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => {}
        Ok(false) => {
            eprintln!("certification failed");
            std::process::exit(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Usage(format!(
                "--tol must be a positive finite number, got {t}"
            )));
        }
    }
    let ctx = Ctx { out: cli.out, seed: cli.seed, svg: cli.svg, tol: cli.tol };
    match cli.cmd {
        Cmd::Bounds { which } => match which {
            BoundsCmd::Beta { params } => bounds::run_beta(&Params::from_args(&params)?, &ctx),
            BoundsCmd::Region { params } => {
                bounds::run_region(&Params::from_args(&params)?, &ctx)
            }
            BoundsCmd::Omega0 { params } => {
                bounds::run_omega0(&Params::from_args(&params)?, &ctx)
            }
            BoundsCmd::L2check { params } => {
                bounds::run_l2check(&Params::from_args(&params)?, &ctx)
            }
            BoundsCmd::Triple { params } => {
                bounds::run_triple(&Params::from_args(&params)?, &ctx)
            }
        },
        Cmd::Signals { which } => {
            let (mode, params) = match which {
                SignalsCmd::Mean { params } => ("mean", params),
                SignalsCmd::Window { params } => ("window", params),
                SignalsCmd::T0 { params } => ("t0", params),
            };
            let mut p = Params::from_args(&params)?;
            p.set("mode", mode.to_string());
            signals::run(&p, &ctx)
        }
        Cmd::Shifts { which } => match which {
            ShiftsCmd::Dump { params } => shifts::run_dump(&Params::from_args(&params)?, &ctx),
        },
        Cmd::Floquet { which } => match which {
            FloquetCmd::Sweep { alpha, beta, t_grid, delta_grid, params } => {
                let mut p = Params::from_args(&params)?;
                p.fold("alpha-grid", alpha);
                p.fold("beta-grid", beta);
                p.fold("T-grid", t_grid);
                p.fold("delta-grid", delta_grid);
                floquet::run_sweep(&p, &ctx)
            }
        },
        Cmd::Kakutani { which } => match which {
            KakutaniCmd::Static { r, amp, ratio, n, m, params } => {
                let mut p = Params::from_args(&params)?;
                p.fold("R", r);
                p.fold("M", amp);
                p.fold("K", ratio);
                p.fold("N", n);
                p.fold("m", m);
                kakutani::run_static(&p, &ctx)
            }
            KakutaniCmd::Schedule { steps, m0, params } => {
                let mut p = Params::from_args(&params)?;
                p.fold("steps", steps);
                p.fold("m0", m0);
                kakutani::run_schedule(&p, &ctx)
            }
            KakutaniCmd::Verify { steps, m0, params } => {
                let mut p = Params::from_args(&params)?;
                p.fold("steps", steps);
                p.fold("m0", m0);
                kakutani::run_verify(&p, &ctx)
            }
        },
        Cmd::Certify { params } => certify::run(&Params::from_args(&params)?, &ctx),
        Cmd::Sweep { params } => sweep::run(&Params::from_args(&params)?, &ctx),
        Cmd::Run { target, params } => run_target(&target, &params, &ctx),
    }
}

// ── Named experiments ────────────────────────────────────────────────────

fn run_target(target: &str, extra: &[String], ctx: &Ctx) -> Result<bool> {
    let path = Path::new(target);
    if path.is_file() {
        let mut p = Params::from_file(path)?;
        for pair in extra {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("expected key=value override, got '{pair}'"))
            })?;
            p.set(key.trim(), value.trim().to_string());
        }
        let name = p.req_str("experiment")?;
        run_named(&name, &p, ctx)
    } else {
        run_named(target, &Params::from_args(extra)?, ctx)
    }
}

fn run_named(name: &str, p: &Params, ctx: &Ctx) -> Result<bool> {
    match name {
        "beta" => bounds::run_beta(p, ctx),
        "region" => bounds::run_region(p, ctx),
        "omega0" => bounds::run_omega0(p, ctx),
        "l2check" => bounds::run_l2check(p, ctx),
        "triple" => bounds::run_triple(p, ctx),
        "gap-mean" => signals::run(p, ctx),
        "oscillation-sweep" => sweep::run(p, ctx),
        "floquet" => floquet::run_sweep(p, ctx),
        "kakutani-static" => kakutani::run_static(p, ctx),
        "kakutani-schedule" => {
            if p.bool_or("verify", false)? {
                kakutani::run_verify(p, ctx)
            } else {
                kakutani::run_schedule(p, ctx)
            }
        }
        "certify" => certify::run(p, ctx),
        other => Err(CliError::Usage(format!(
            "unknown experiment '{other}'; known experiments: beta, region, omega0, \
             l2check, triple, gap-mean, oscillation-sweep, floquet, kakutani-static, \
             kakutani-schedule, certify"
        ))),
    }
}
