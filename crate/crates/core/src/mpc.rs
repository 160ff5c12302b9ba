//! Receding-horizon loop: plan over the preview window, apply the first
//! stage, move on.

use alloc::vec::Vec;

use crate::bnb::{solve, Deadline, Problem, SearchObserver, SolutionSource, SolveResult, SolveStats, Termination};
use crate::error::SolveError;
use crate::heuristic::HeuristicLut;
use crate::math::floor;
use crate::ocp::{stage_cost, step, SolverConfig};
use crate::route::{tighten_bounds, Horizon, RouteProfile};
use crate::vehicle::{DrivingMode, ModeGear, Vehicle};
use crate::warmstart::{WarmStartGenerator, WarmStartResult};

/// What decides the applied stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Planner {
    #[default]
    BranchAndBound,
    /// Apply the warm start directly, without searching.
    WarmStartOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcOptions {
    pub config: SolverConfig,
    /// Initial velocity; the upper limit at the route start if unset.
    pub v0: Option<f64>,
    /// Stages applied from each plan before replanning.
    pub replan_stride: usize,
    pub planner: Planner,
}

impl Default for MpcOptions {
    fn default() -> Self {
        Self {
            config: SolverConfig::default(),
            v0: None,
            replan_stride: 1,
            planner: Planner::BranchAndBound,
        }
    }
}

/// Closed-loop result, one row per applied stage. Row `i` starts at `s[i]`
/// with velocity `v[i]`; the cumulative values include the stage itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub mode: Vec<DrivingMode>,
    pub gear: Vec<u8>,
    /// [g]
    pub fuel_cumulative: Vec<f64>,
    /// [s]
    pub time_cumulative: Vec<f64>,
    /// Velocity after the last row.
    pub v_end: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn total_fuel(&self) -> f64 {
        self.fuel_cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn total_time(&self) -> f64 {
        self.time_cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn push(&mut self, s: f64, v: f64, mode: DrivingMode, gear: u8, fuel: f64, time: f64) {
        let f0 = self.total_fuel();
        let t0 = self.total_time();
        self.s.push(s);
        self.v.push(v);
        self.mode.push(mode);
        self.gear.push(gear);
        self.fuel_cumulative.push(f0 + fuel);
        self.time_cumulative.push(t0 + time);
    }
}

/// Outcome of one planning step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub s: f64,
    pub v: f64,
    pub horizon: usize,
    pub warm_ub: f64,
    pub cost: f64,
    pub source: SolutionSource,
    pub termination: Termination,
    pub stats: SolveStats,
    pub applied: ModeGear,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcAbort {
    pub step: usize,
    pub s: f64,
    pub error: SolveError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcRun {
    pub trajectory: Trajectory,
    pub steps: Vec<StepRecord>,
    /// Σ weighted stage costs actually incurred.
    pub objective: f64,
    pub aborted: Option<MpcAbort>,
}

/// Environment supplied by the caller: the solver deadline and a
/// notification after each solve.
pub trait MpcHooks {
    type Deadline: Deadline;
    fn deadline(&mut self, time_limit: Option<f64>) -> Self::Deadline;
    fn solved(&mut self, _record: &StepRecord) {}
}

/// Hooks for runs without a clock: time limits are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl MpcHooks for NoClock {
    type Deadline = crate::bnb::NoDeadline;
    fn deadline(&mut self, _: Option<f64>) -> Self::Deadline {
        crate::bnb::NoDeadline
    }
}

/// Everything computed for one open-loop solve.
#[derive(Debug, Clone)]
pub struct Plan {
    pub horizon: Horizon,
    pub lut: HeuristicLut,
    pub v_f: f64,
    pub warm: WarmStartResult,
    pub result: SolveResult,
}

/// Tightens `raw`, builds the lookup table and warm start, and solves.
pub fn plan(
    veh: &Vehicle,
    raw: &Horizon,
    v0: f64,
    cfg: &SolverConfig,
    generator: &dyn WarmStartGenerator,
    deadline: &mut dyn Deadline,
    obs: &mut dyn SearchObserver,
) -> Result<Plan, SolveError> {
    let horizon = tighten_bounds(raw, veh)?;
    let n = horizon.stages();
    let v_f = cfg.v_f.unwrap_or(horizon.v_max[n]);
    let w = cfg.weights();
    let lut = HeuristicLut::build(veh, &horizon, w, cfg.beta, v_f, cfg.lut_velocity_step);
    let pb = Problem {
        vehicle: veh,
        horizon: &horizon,
        v0,
        v_f,
        weights: w,
        beta: cfg.beta,
        epsilon: cfg.epsilon,
    };
    let warm = generator.generate(&pb);
    let result = solve(&pb, &lut, &warm, deadline, obs)?;
    Ok(Plan {
        horizon,
        lut,
        v_f,
        warm,
        result,
    })
}

/// The warm start alone, reported in the solver's result format.
fn warm_only(veh: &Vehicle, raw: &Horizon, v0: f64, cfg: &SolverConfig, generator: &dyn WarmStartGenerator) -> Result<(f64, SolveResult), SolveError> {
    let horizon = tighten_bounds(raw, veh)?;
    let n = horizon.stages();
    let v_f = cfg.v_f.unwrap_or(horizon.v_max[n]);
    let pb = Problem {
        vehicle: veh,
        horizon: &horizon,
        v0,
        v_f,
        weights: cfg.weights(),
        beta: cfg.beta,
        epsilon: cfg.epsilon,
    };
    let warm = generator.generate(&pb);
    if !warm.is_feasible() {
        return Err(SolveError::Infeasible { deepest_stage: 0 });
    }
    Ok((
        warm.ub,
        SolveResult {
            sequence: warm.sequence,
            velocities: warm.velocities,
            cost: warm.ub,
            fuel: 0.0,
            time: 0.0,
            source: SolutionSource::WarmStart,
            termination: Termination::Completed,
            stats: SolveStats::default(),
        },
    ))
}

/// Number of whole stages of length `ds` on the route.
pub fn route_stages(route: &RouteProfile, ds: f64) -> usize {
    floor(route.length() / ds + 1e-9) as usize
}

/// Drives the whole route, replanning every `replan_stride` stages. The
/// horizon shrinks near the end so it never runs past the route.
pub fn run_mpc(
    veh: &Vehicle,
    route: &RouteProfile,
    opts: &MpcOptions,
    generator: &dyn WarmStartGenerator,
    hooks: &mut impl MpcHooks,
) -> MpcRun {
    let cfg = &opts.config;
    let ds = cfg.ds;
    let total = route_stages(route, ds);
    let stride = opts.replan_stride.max(1);
    let mut v = opts.v0.unwrap_or(route.at(0.0).v_max);
    let mut traj = Trajectory::default();
    let mut steps = Vec::new();
    let mut objective = 0.0;
    let mut aborted = None;
    let mut i = 0;
    while i < total {
        let s = i as f64 * ds;
        let n = cfg.horizon.min(total - i);
        let raw = match route.resample(s, n, ds) {
            Ok(raw) => raw,
            Err(e) => {
                aborted = Some(MpcAbort { step: i, s, error: e.into() });
                break;
            }
        };
        let planned = match opts.planner {
            Planner::BranchAndBound => {
                let mut deadline = hooks.deadline(cfg.time_limit);
                plan(veh, &raw, v, cfg, generator, &mut deadline, &mut ()).map(|p| (p.warm.ub, p.result))
            }
            Planner::WarmStartOnly => warm_only(veh, &raw, v, cfg, generator),
        };
        let (warm_ub, result) = match planned {
            Ok(x) => x,
            Err(error) => {
                aborted = Some(MpcAbort { step: i, s, error });
                break;
            }
        };
        let record = StepRecord {
            step: i,
            s,
            v,
            horizon: n,
            warm_ub,
            cost: result.cost,
            source: result.source,
            termination: result.termination,
            stats: result.stats,
            applied: result.sequence[0],
        };
        hooks.solved(&record);
        steps.push(record);
        for (k, &mg) in result.sequence.iter().take(stride).enumerate() {
            let alpha = raw.alpha[k];
            let next = step(veh, v, mg, alpha, ds).expect("planned stages are feasible");
            let c = stage_cost(veh, v, next, mg, alpha, cfg);
            traj.push((i + k) as f64 * ds, v, mg.mode, mg.gear, c.fuel, c.time);
            objective += c.weighted;
            v = next;
        }
        i += stride.min(n);
    }
    traj.v_end = v;
    MpcRun {
        trajectory: traj,
        steps,
        objective,
        aborted,
    }
}
