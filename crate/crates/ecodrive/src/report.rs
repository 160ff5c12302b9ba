//! JSON run summaries and the comparison report.

use std::io::Write;

use ecodrive_core::Trajectory;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Error;
use crate::runner::RunOutput;

pub const RUN_SCHEMA: &str = "run_stats v1";
pub const COMPARISON_SCHEMA: &str = "# comparison v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub phi: f64,
    pub beta: f64,
    pub horizon: usize,
    pub ds: f64,
    pub epsilon: f64,
    pub time_limit: Option<f64>,
    pub replan_stride: usize,
    pub v0: Option<f64>,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        Self {
            phi: c.solver.phi,
            beta: c.solver.beta,
            horizon: c.solver.horizon,
            ds: c.solver.ds,
            epsilon: c.solver.epsilon,
            time_limit: c.solver.time_limit,
            replan_stride: c.replan_stride,
            v0: c.v0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbortInfo {
    pub step: usize,
    pub s_m: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub solve_time_mean_s: f64,
    pub solve_time_max_s: f64,
}

/// Summary of one `run`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema: &'static str,
    pub mode: &'static str,
    pub route: String,
    pub route_length_m: f64,
    pub config: ConfigEcho,
    pub stages: usize,
    pub total_fuel_g: f64,
    pub total_time_s: f64,
    pub objective: f64,
    pub v_end_mps: f64,
    pub solves: usize,
    pub nodes_expanded: u64,
    pub time_limited_solves: usize,
    pub aborted: Option<AbortInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunSummary {
    pub fn new(route: &str, length: f64, cfg: &RunConfig, out: &RunOutput, timings: bool) -> Self {
        use ecodrive_core::Termination;
        use crate::runner::RunMode;
        let t = &out.trajectory;
        let baseline = out.mode == RunMode::Baseline;
        Self {
            schema: RUN_SCHEMA,
            mode: out.mode.as_str(),
            route: route.to_string(),
            route_length_m: length,
            config: cfg.into(),
            stages: t.len(),
            total_fuel_g: t.total_fuel(),
            total_time_s: t.total_time(),
            objective: out.objective,
            v_end_mps: t.v_end,
            solves: out.steps.len(),
            nodes_expanded: out.nodes_expanded(),
            time_limited_solves: out
                .steps
                .iter()
                .filter(|r| r.termination == Termination::TimeLimit)
                .count(),
            aborted: out.aborted.as_ref().map(|a| AbortInfo {
                step: a.step,
                s_m: a.s,
                error: a.error.to_string(),
            }),
            violations: baseline.then_some(out.violations),
            shifts: baseline.then_some(out.shifts),
            timings: if timings {
                out.mean_solve_time().map(|mean| Timings {
                    solve_time_mean_s: mean,
                    solve_time_max_s: out.solve_times.iter().copied().fold(0.0, f64::max),
                })
            } else {
                None
            },
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("summaries serialise");
    s.push(b'\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Totals {
    pub fuel_g: f64,
    pub time_s: f64,
}

impl Totals {
    pub fn of(t: &Trajectory) -> Self {
        Self {
            fuel_g: t.total_fuel(),
            time_s: t.total_time(),
        }
    }
}

/// `100 · (reference − candidate) / reference`.
pub fn savings_pct(reference: f64, candidate: f64) -> f64 {
    100.0 * (reference - candidate) / reference
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub reference: &'static str,
    pub reference_totals: Totals,
    /// Fuel saved by the BnB run relative to the reference [%].
    pub fuel_savings_pct: f64,
    /// Trip-time increase of the BnB run relative to the reference [%].
    pub time_increase_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub route: String,
    pub bnb: Totals,
    pub baseline: Totals,
    pub warmstart: Option<Totals>,
    pub rows: Vec<ComparisonRow>,
}

fn same_grid(a: &Trajectory, b: &Trajectory) -> bool {
    a.s == b.s
}

/// Compares a BnB trajectory with the baseline driver and, optionally, the
/// warm-start-only run. All trajectories must share the distance grid.
pub fn compare(
    route: &str,
    baseline: &Trajectory,
    bnb: &Trajectory,
    warmstart: Option<&Trajectory>,
) -> Result<ComparisonReport, Error> {
    if baseline.is_empty() || bnb.is_empty() {
        return Err(Error::Mismatch("empty trajectory".into()));
    }
    let refs = std::iter::once(("baseline", baseline)).chain(warmstart.map(|w| ("warmstart", w)));
    let mut rows = Vec::new();
    let b = Totals::of(bnb);
    for (name, t) in refs {
        if !same_grid(t, bnb) {
            return Err(Error::Mismatch(format!(
                "route mismatch: the {name} trajectory is on a different distance grid"
            )));
        }
        let r = Totals::of(t);
        rows.push(ComparisonRow {
            reference: name,
            reference_totals: r,
            fuel_savings_pct: savings_pct(r.fuel_g, b.fuel_g),
            time_increase_pct: -savings_pct(r.time_s, b.time_s),
        });
    }
    Ok(ComparisonReport {
        route: route.to_string(),
        bnb: b,
        baseline: Totals::of(baseline),
        warmstart: warmstart.map(Totals::of),
        rows,
    })
}

pub fn write_comparison<W: Write>(mut w: W, r: &ComparisonReport) -> std::io::Result<()> {
    writeln!(w, "{COMPARISON_SCHEMA}")?;
    writeln!(
        w,
        "route,reference,ref_fuel_g,ref_time_s,bnb_fuel_g,bnb_time_s,fuel_savings_pct,time_increase_pct"
    )?;
    for row in &r.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.route,
            row.reference,
            row.reference_totals.fuel_g,
            row.reference_totals.time_s,
            r.bnb.fuel_g,
            r.bnb.time_s,
            row.fuel_savings_pct,
            row.time_increase_pct
        )?;
    }
    Ok(())
}
