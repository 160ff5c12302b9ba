//! Command-line interface.
//!
//! ```text
//! ecodrive run      --route R [--mode mpc|baseline|warmstart] --out DIR
//! ecodrive sweep    --route R... --phi 4,10,40 --beta 10 --horizon 100,200 --out DIR
//! ecodrive genroute --kind hill --length 6000 --seed 1 [--out FILE]
//! ecodrive compare  --baseline B.csv --bnb M.csv [--warmstart W.csv] --out DIR
//! ```
//!
//! Settings come from the defaults, then `--config`, then the flags. Exit
//! codes: 0 ok, 1 usage, 2 validation, 3 infeasible.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ecodrive_core::route::tighten_bounds;
use ecodrive_core::{HeuristicLut, RouteProfile, Vehicle, VehicleParams};

use crate::config::{load_config, load_vehicle, RunConfig};
use crate::error::Error;
use crate::genroute::{generate, RouteKind};
use crate::io::{load_route, load_trajectory, write_file, write_lut, write_route, write_steps, write_trajectory};
use crate::report::{compare, to_json, write_comparison, RunSummary};
use crate::runner::{run, RunMode};
use crate::sweep::{run_sweep, write_sweep, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "ecodrive", version, about = "Eco-driving branch-and-bound MPC for heavy-duty trucks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drive one route and write the trajectory and statistics.
    Run(RunArgs),
    /// Run a grid of φ, β and N values.
    Sweep(SweepArgs),
    /// Write a synthetic route.
    Genroute(GenrouteArgs),
    /// Compare a BnB trajectory against reference trajectories.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Vehicle TOML file (default: the built-in representative truck).
    #[arg(long)]
    pub vehicle: Option<PathBuf>,
    /// Solver/driver TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stage length [m].
    #[arg(long)]
    pub ds: Option<f64>,
    /// Velocity bin width for dominance elimination [m/s].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Wall-clock limit per solve [s]. Makes results timing dependent.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Stages applied per solve.
    #[arg(long)]
    pub replan_stride: Option<usize>,
    /// Include wall-clock timings in the outputs.
    #[arg(long)]
    pub timings: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Route CSV file.
    #[arg(long)]
    pub route: PathBuf,
    #[arg(long, value_enum, default_value = "mpc")]
    pub mode: RunMode,
    /// Time-to-fuel weight ratio.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Terminal velocity weight.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Prediction horizon [stages].
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Initial velocity [m/s] (default: the upper limit at the start).
    #[arg(long)]
    pub v0: Option<f64>,
    /// Also write the cost-to-go table of the first window.
    #[arg(long)]
    pub dump_lut: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Route CSV files.
    #[arg(long, required = true, num_args = 1..)]
    pub route: Vec<PathBuf>,
    /// Comma-separated φ values (default: the configured one).
    #[arg(long, value_delimiter = ',')]
    pub phi: Vec<f64>,
    /// Comma-separated β values (default: the configured one).
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Comma-separated horizons [stages] (default: the configured one).
    #[arg(long, value_delimiter = ',')]
    pub horizon: Vec<usize>,
    #[arg(long, value_enum, default_value = "mpc")]
    pub mode: RunMode,
    /// Concurrent cells.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenrouteArgs {
    #[arg(long, value_enum)]
    pub kind: RouteKind,
    /// Route length [m].
    #[arg(long)]
    pub length: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline-driver trajectory CSV.
    #[arg(long)]
    pub baseline: PathBuf,
    /// BnB MPC trajectory CSV.
    #[arg(long)]
    pub bnb: PathBuf,
    /// Warm-start-only trajectory CSV.
    #[arg(long)]
    pub warmstart: Option<PathBuf>,
    /// Route label in the report (default: the BnB file's parent directory name).
    #[arg(long)]
    pub label: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

struct Setup {
    vehicle: Vehicle,
    cfg: RunConfig,
}

fn setup(c: &Common, tweak: impl FnOnce(&mut RunConfig)) -> Result<Setup, Error> {
    let params = match &c.vehicle {
        Some(p) => load_vehicle(p)?,
        None => VehicleParams::representative(),
    };
    let vehicle = Vehicle::new(params)?;
    let mut cfg = match &c.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.ds {
        cfg.solver.ds = v;
    }
    if let Some(v) = c.epsilon {
        cfg.solver.epsilon = v;
    }
    if c.time_limit.is_some() {
        cfg.solver.time_limit = c.time_limit;
    }
    if let Some(k) = c.replan_stride {
        cfg.replan_stride = k;
    }
    tweak(&mut cfg);
    cfg.validate()?;
    Ok(Setup { vehicle, cfg })
}

fn check_route(route: &RouteProfile, ds: f64) -> Result<(), Error> {
    if route.length() < ds {
        return Err(Error::Mismatch(format!(
            "route {} is shorter than one stage ({} m < {ds} m)",
            route.name,
            route.length()
        )));
    }
    Ok(())
}

fn lut_of_first_window(veh: &Vehicle, route: &RouteProfile, cfg: &RunConfig) -> Result<HeuristicLut, Error> {
    let s = &cfg.solver;
    let n = s.horizon.min(ecodrive_core::mpc::route_stages(route, s.ds));
    let h = tighten_bounds(&route.resample(0.0, n, s.ds)?, veh)?;
    let v_f = s.v_f.unwrap_or(h.v_max[n]);
    Ok(HeuristicLut::build(veh, &h, s.weights(), s.beta, v_f, s.lut_velocity_step))
}

fn cmd_run(a: &RunArgs) -> Result<(), Error> {
    let Setup { vehicle, cfg } = setup(&a.common, |c| {
        if let Some(v) = a.phi {
            c.solver.phi = v;
        }
        if let Some(v) = a.beta {
            c.solver.beta = v;
        }
        if let Some(v) = a.horizon {
            c.solver.horizon = v;
        }
        if a.v0.is_some() {
            c.v0 = a.v0;
        }
    })?;
    let route = load_route(&a.route)?;
    check_route(&route, cfg.solver.ds)?;
    let out_dir = &a.common.out;
    if a.dump_lut {
        let lut = lut_of_first_window(&vehicle, &route, &cfg)?;
        let mut buf = Vec::new();
        write_lut(&mut buf, &lut)?;
        write_file(&out_dir.join("lut.csv"), &buf)?;
    }
    let out = run(&vehicle, &route, &cfg, a.mode);
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &out.trajectory)?;
    write_file(&out_dir.join("trajectory.csv"), &buf)?;
    if a.mode != RunMode::Baseline {
        let mut buf = Vec::new();
        write_steps(&mut buf, &out.steps)?;
        write_file(&out_dir.join("steps.csv"), &buf)?;
    }
    let summary = RunSummary::new(&route.name, route.length(), &cfg, &out, a.common.timings);
    write_file(&out_dir.join("stats.json"), &to_json(&summary))?;
    match &out.aborted {
        Some(abort) => Err(Error::Infeasible(format!(
            "solver failed at step {} (s = {} m): {}; partial outputs written to {}",
            abort.step,
            abort.s,
            abort.error,
            out_dir.display()
        ))),
        None => Ok(()),
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), Error> {
    let Setup { vehicle, cfg } = setup(&a.common, |_| {})?;
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let routes = a.route.iter().map(|p| load_route(p)).collect::<Result<Vec<_>, _>>()?;
    for r in &routes {
        check_route(r, cfg.solver.ds)?;
    }
    let spec = SweepSpec {
        phi: or(&a.phi, cfg.solver.phi),
        beta: or(&a.beta, cfg.solver.beta),
        horizon: if a.horizon.is_empty() {
            vec![cfg.solver.horizon]
        } else {
            a.horizon.clone()
        },
        routes,
        mode: a.mode,
    };
    let rows = run_sweep(&vehicle, &spec, &cfg, a.workers)?;
    let mut buf = Vec::new();
    write_sweep(&mut buf, &rows, a.common.timings)?;
    write_file(&a.common.out.join("sweep.csv"), &buf)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: cell {} phi={} beta={} N={} failed: {}",
            r.route,
            r.cell.phi,
            r.cell.beta,
            r.cell.horizon,
            r.error.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn cmd_genroute(a: &GenrouteArgs) -> Result<(), Error> {
    if !(a.length.is_finite() && a.length > 0.0) {
        return Err(Error::Usage(format!("--length must be > 0, got {}", a.length)));
    }
    let route = generate(a.kind, a.length, a.seed);
    let mut buf = Vec::new();
    write_route(&mut buf, &route)?;
    match &a.out {
        Some(p) => write_file(p, &buf),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&buf)?;
            Ok(())
        }
    }
}

fn label_of(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_compare(a: &CompareArgs) -> Result<(), Error> {
    let baseline = load_trajectory(&a.baseline)?;
    let bnb = load_trajectory(&a.bnb)?;
    let warm = a.warmstart.as_deref().map(load_trajectory).transpose()?;
    let label = a.label.clone().unwrap_or_else(|| label_of(&a.bnb));
    let report = compare(&label, &baseline, &bnb, warm.as_ref())?;
    let mut buf = Vec::new();
    write_comparison(&mut buf, &report)?;
    write_file(&a.out.join("comparison.csv"), &buf)?;
    write_file(&a.out.join("comparison.json"), &to_json(&report))?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Genroute(a) => cmd_genroute(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Parses `args`, runs the command, prints diagnostics and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
