//! Parameter sweeps: every (route, φ, β, N) cell is an independent closed-loop
//! run, executed on a bounded worker pool.

use std::io::Write;

use ecodrive_core::{RouteProfile, Vehicle};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::Error;
use crate::runner::{run, RunMode};

pub const SWEEP_SCHEMA: &str = "# sweep v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub phi: Vec<f64>,
    pub beta: Vec<f64>,
    pub horizon: Vec<usize>,
    pub routes: Vec<RouteProfile>,
    pub mode: RunMode,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, empty) in [
            ("phi", self.phi.is_empty()),
            ("beta", self.beta.is_empty()),
            ("horizon", self.horizon.is_empty()),
            ("route", self.routes.is_empty()),
        ] {
            if empty {
                return Err(Error::Usage(format!("sweep needs at least one {name} value")));
            }
        }
        Ok(())
    }

    /// Cells in output order: route, then φ, β, N as given.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (r, _) in self.routes.iter().enumerate() {
            for &phi in &self.phi {
                for &beta in &self.beta {
                    for &horizon in &self.horizon {
                        out.push(Cell { route: r, phi, beta, horizon });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub route: usize,
    pub phi: f64,
    pub beta: f64,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub route: String,
    pub cell: Cell,
    /// `None` if the cell ran to the end of the route.
    pub error: Option<String>,
    pub fuel_g: f64,
    pub time_s: f64,
    pub objective: f64,
    pub solves: usize,
    pub nodes_mean: f64,
    pub solve_time_mean_s: Option<f64>,
}

pub fn run_cell(veh: &Vehicle, spec: &SweepSpec, base: &RunConfig, cell: Cell) -> CellResult {
    let route = &spec.routes[cell.route];
    let mut cfg = base.clone();
    cfg.solver.phi = cell.phi;
    cfg.solver.beta = cell.beta;
    cfg.solver.horizon = cell.horizon;
    let error = cfg.validate().err().map(|e| e.to_string());
    if let Some(error) = error {
        return CellResult {
            route: route.name.clone(),
            cell,
            error: Some(error),
            fuel_g: f64::NAN,
            time_s: f64::NAN,
            objective: f64::NAN,
            solves: 0,
            nodes_mean: f64::NAN,
            solve_time_mean_s: None,
        };
    }
    let out = run(veh, route, &cfg, spec.mode);
    let solves = out.steps.len();
    CellResult {
        route: route.name.clone(),
        cell,
        error: out.aborted.as_ref().map(|a| format!("step {}: {}", a.step, a.error)),
        fuel_g: out.trajectory.total_fuel(),
        time_s: out.trajectory.total_time(),
        objective: out.objective,
        solves,
        nodes_mean: if solves > 0 {
            out.nodes_expanded() as f64 / solves as f64
        } else {
            0.0
        },
        solve_time_mean_s: out.mean_solve_time(),
    }
}

/// Runs every cell on `workers` threads. Results come back in cell order
/// regardless of scheduling.
pub fn run_sweep(veh: &Vehicle, spec: &SweepSpec, base: &RunConfig, workers: usize) -> Result<Vec<CellResult>, Error> {
    spec.validate()?;
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.into()))?;
    Ok(pool.install(|| cells.par_iter().map(|&c| run_cell(veh, spec, base, c)).collect()))
}

pub fn write_sweep<W: Write>(mut w: W, rows: &[CellResult], timings: bool) -> Result<(), Error> {
    writeln!(w, "{SWEEP_SCHEMA}")?;
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec![
        "route", "phi", "beta", "horizon", "status", "fuel_g", "time_s", "objective", "solves", "nodes_mean",
    ];
    if timings {
        header.push("solve_time_mean_s");
    }
    header.push("error");
    wr.write_record(&header).map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        let mut rec = vec![
            r.route.clone(),
            r.cell.phi.to_string(),
            r.cell.beta.to_string(),
            r.cell.horizon.to_string(),
            if r.error.is_none() { "ok" } else { "failed" }.to_string(),
            r.fuel_g.to_string(),
            r.time_s.to_string(),
            r.objective.to_string(),
            r.solves.to_string(),
            r.nodes_mean.to_string(),
        ];
        if timings {
            rec.push(r.solve_time_mean_s.map_or(String::new(), |t| t.to_string()));
        }
        rec.push(r.error.clone().unwrap_or_default());
        wr.write_record(&rec).map_err(|e| Error::Io(e.into()))?;
    }
    wr.flush()?;
    Ok(())
}
