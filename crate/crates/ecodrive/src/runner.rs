//! Runs one route in one of the three driving policies, with a wall clock
//! behind the solver's time limit.

use std::time::{Duration, Instant};

use ecodrive_core::baseline::simulate_driver;
use ecodrive_core::mpc::{run_mpc, MpcAbort, MpcHooks, Planner, StepRecord};
use ecodrive_core::{Deadline, EnvelopeWarmStart, MpcOptions, RouteProfile, Trajectory, Vehicle};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RunMode {
    /// Branch-and-bound model predictive control.
    Mpc,
    /// Simulated human driver.
    Baseline,
    /// Model predictive control applying the warm start without search.
    Warmstart,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Mpc => "mpc",
            RunMode::Baseline => "baseline",
            RunMode::Warmstart => "warmstart",
        }
    }
}

/// Expires at a fixed instant, or never.
#[derive(Debug, Clone, Copy)]
pub struct WallDeadline {
    end: Option<Instant>,
}

impl WallDeadline {
    pub fn after(limit: Option<f64>) -> Self {
        let end = limit.map(|l| Instant::now() + Duration::from_secs_f64(l.max(0.0)));
        Self { end }
    }
}

impl Deadline for WallDeadline {
    fn expired(&mut self) -> bool {
        self.end.is_some_and(|e| Instant::now() >= e)
    }
}

/// MPC hooks that time each solve.
#[derive(Debug, Default)]
pub struct WallClock {
    started: Option<Instant>,
    pub solve_times: Vec<f64>,
}

impl MpcHooks for WallClock {
    type Deadline = WallDeadline;

    fn deadline(&mut self, limit: Option<f64>) -> WallDeadline {
        self.started = Some(Instant::now());
        WallDeadline::after(limit)
    }

    fn solved(&mut self, _: &StepRecord) {
        if let Some(t0) = self.started.take() {
            self.solve_times.push(t0.elapsed().as_secs_f64());
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mode: RunMode,
    pub trajectory: Trajectory,
    /// One record per solve (empty for the baseline driver).
    pub steps: Vec<StepRecord>,
    /// `w_f · fuel + w_t · time` of the driven trajectory.
    pub objective: f64,
    pub aborted: Option<MpcAbort>,
    /// Baseline only: integration steps outside the limits.
    pub violations: usize,
    /// Baseline only.
    pub shifts: usize,
    /// Wall-clock seconds per solve.
    pub solve_times: Vec<f64>,
}

impl RunOutput {
    pub fn nodes_expanded(&self) -> u64 {
        self.steps.iter().map(|r| r.stats.expanded).sum()
    }

    pub fn mean_solve_time(&self) -> Option<f64> {
        (!self.solve_times.is_empty()).then(|| self.solve_times.iter().sum::<f64>() / self.solve_times.len() as f64)
    }
}

pub fn run(veh: &Vehicle, route: &RouteProfile, cfg: &RunConfig, mode: RunMode) -> RunOutput {
    let w = cfg.solver.weights();
    match mode {
        RunMode::Baseline => {
            let b = simulate_driver(veh, route, &cfg.driver, cfg.solver.ds);
            let t = b.trajectory;
            RunOutput {
                mode,
                objective: w.fuel * t.total_fuel() + w.time * t.total_time(),
                trajectory: t,
                steps: Vec::new(),
                aborted: None,
                violations: b.violations,
                shifts: b.shifts,
                solve_times: Vec::new(),
            }
        }
        RunMode::Mpc | RunMode::Warmstart => {
            let opts = MpcOptions {
                config: cfg.solver.clone(),
                v0: cfg.v0,
                replan_stride: cfg.replan_stride,
                planner: if mode == RunMode::Mpc {
                    Planner::BranchAndBound
                } else {
                    Planner::WarmStartOnly
                },
            };
            let mut clock = WallClock::default();
            let r = run_mpc(veh, route, &opts, &EnvelopeWarmStart::default(), &mut clock);
            RunOutput {
                mode,
                trajectory: r.trajectory,
                steps: r.steps,
                objective: r.objective,
                aborted: r.aborted,
                violations: 0,
                shifts: 0,
                solve_times: clock.solve_times,
            }
        }
    }
}
