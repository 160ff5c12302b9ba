//! Discretised optimal-control problem: weights, stage and terminal costs,
//! the forward-Euler step and sequence evaluation.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{ParamError, VehicleError};
use crate::route::Horizon;
use crate::vehicle::{Grade, GearState, ModeGear, Vehicle};

/// Tuning of the optimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Time-to-fuel weight ratio `w_t / w_f` [g/s].
    pub phi: f64,
    /// Terminal velocity penalty weight.
    pub beta: f64,
    /// Number of stages in the horizon.
    pub horizon: usize,
    /// Stage length [m].
    pub ds: f64,
    /// Terminal velocity reference [m/s]; `None` tracks the upper speed
    /// bound at the end of the horizon.
    pub v_f: Option<f64>,
    /// Width of the velocity bins used for dominance elimination [m/s].
    /// Zero merges only bit-identical velocities.
    pub epsilon: f64,
    /// Wall-clock budget per solve [s]; `None` runs to completion.
    pub time_limit: Option<f64>,
    /// Velocity spacing of the cost-to-go lookup table [m/s].
    pub lut_velocity_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            phi: 10.0,
            beta: 10.0,
            horizon: 200,
            ds: 25.0,
            v_f: None,
            epsilon: 0.01,
            time_limit: None,
            lut_velocity_step: 0.25,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        let bad = |key: &str, v: f64, rule: &str| Err(ParamError::new(key, format!("{rule}, got {v}")));
        if !(self.phi.is_finite() && self.phi >= 0.0) {
            return bad("phi", self.phi, "must be finite and >= 0");
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta", self.beta, "must be finite and >= 0");
        }
        if self.horizon == 0 {
            return Err(ParamError::new("horizon", "must be >= 1"));
        }
        if !(self.ds.is_finite() && self.ds > 0.0) {
            return bad("ds", self.ds, "must be > 0");
        }
        if let Some(v) = self.v_f {
            if !(v.is_finite() && v > 0.0) {
                return bad("v_f", v, "must be > 0");
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad("epsilon", self.epsilon, "must be finite and >= 0");
        }
        if let Some(t) = self.time_limit {
            if !(t >= 0.0) {
                return bad("time_limit", t, "must be >= 0");
            }
        }
        if !(self.lut_velocity_step.is_finite() && self.lut_velocity_step > 0.0) {
            return bad("lut_velocity_step", self.lut_velocity_step, "must be > 0");
        }
        Ok(())
    }

    pub fn weights(&self) -> Weights {
        Weights::from_phi(self.phi)
    }
}

/// Fuel and time weights, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub fuel: f64,
    pub time: f64,
}

impl Weights {
    pub fn from_phi(phi: f64) -> Self {
        Self {
            fuel: 1.0 / (1.0 + phi),
            time: phi / (1.0 + phi),
        }
    }
}

/// Cost of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageCost {
    /// Fuel used [g].
    pub fuel: f64,
    /// Time taken [s].
    pub time: f64,
    /// Weighted objective contribution [-].
    pub weighted: f64,
}

/// Next velocity after one stage of `mg` from `v`.
pub fn step(veh: &Vehicle, v: f64, mg: ModeGear, alpha: f64, ds: f64) -> Result<f64, VehicleError> {
    step_at(veh, v, mg, &Grade::new(alpha), ds)
}

pub(crate) fn step_at(veh: &Vehicle, v: f64, mg: ModeGear, grade: &Grade, ds: f64) -> Result<f64, VehicleError> {
    let f = veh.dynamics_at(mg, v, grade)?;
    let next = v + f * ds;
    if next <= 0.0 {
        return Err(VehicleError::Stall { next });
    }
    Ok(next)
}

/// Cost of a stage from `v` to `v_next`, evaluated at their mean.
pub fn stage_cost(
    veh: &Vehicle,
    v: f64,
    v_next: f64,
    mg: ModeGear,
    alpha: f64,
    cfg: &SolverConfig,
) -> StageCost {
    stage_cost_at(veh, v, v_next, mg, &Grade::new(alpha), cfg.weights(), cfg.ds)
}

#[inline]
pub(crate) fn stage_cost_at(
    veh: &Vehicle,
    v: f64,
    v_next: f64,
    mg: ModeGear,
    grade: &Grade,
    w: Weights,
    ds: f64,
) -> StageCost {
    let vbar = 0.5 * (v + v_next);
    let per_m = veh.fuel_per_meter_unchecked(mg, vbar, grade);
    StageCost {
        fuel: per_m * ds,
        time: ds / vbar,
        weighted: (w.fuel * per_m + w.time / vbar) * ds,
    }
}

pub fn terminal_cost(v_n: f64, v_f: f64, beta: f64) -> f64 {
    let d = v_n - v_f;
    beta * d * d
}

/// A feasible one-stage move out of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub mg: ModeGear,
    pub v_next: f64,
    pub cost: StageCost,
}

/// Reusable buffers for [`expand_transitions`].
#[derive(Debug, Default)]
pub struct ExpandScratch {
    states: Vec<GearState>,
    rates: Vec<(ModeGear, f64)>,
}

/// Every feasible, non-stalling move from `v`, in tie-breaking order. Equal
/// bit for bit to [`step`] followed by [`stage_cost`] per combination.
pub fn expand_transitions(
    veh: &Vehicle,
    v: f64,
    grade: &Grade,
    ds: f64,
    w: Weights,
    scratch: &mut ExpandScratch,
    out: &mut Vec<Transition>,
) {
    expand_within(veh, v, grade, ds, w, (0.0, f64::INFINITY), scratch, out);
}

/// [`expand_transitions`] restricted to moves landing in `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn expand_within(
    veh: &Vehicle,
    v: f64,
    grade: &Grade,
    ds: f64,
    w: Weights,
    (lo, hi): (f64, f64),
    scratch: &mut ExpandScratch,
    out: &mut Vec<Transition>,
) {
    out.clear();
    veh.expand(v, grade, &mut scratch.states, &mut scratch.rates);
    for &(mg, f) in &scratch.rates {
        let v_next = v + f * ds;
        if v_next <= 0.0 || !(v_next >= lo && v_next <= hi) {
            continue;
        }
        out.push(Transition {
            mg,
            v_next,
            cost: stage_cost_at(veh, v, v_next, mg, grade, w, ds),
        });
    }
}

/// Result of replaying a mode–gear sequence over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEval {
    /// Node velocities, one more than the number of stages.
    pub velocities: Vec<f64>,
    pub stages: Vec<StageCost>,
    pub fuel: f64,
    pub time: f64,
    /// Σ weighted stage costs plus the terminal cost.
    pub cost: f64,
}

/// Why a sequence failed to replay.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceError {
    Length { expected: usize, got: usize },
    Infeasible { stage: usize, error: VehicleError },
    OutOfBounds { node: usize, v: f64 },
}

/// Replays `seq` from `v0`, checking mode feasibility and, if `check_bounds`,
/// the horizon's speed bounds at every node after the first.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_sequence(
    veh: &Vehicle,
    h: &Horizon,
    v0: f64,
    seq: &[ModeGear],
    w: Weights,
    v_f: f64,
    beta: f64,
    check_bounds: bool,
) -> Result<SequenceEval, SequenceError> {
    if seq.len() != h.stages() {
        return Err(SequenceError::Length {
            expected: h.stages(),
            got: seq.len(),
        });
    }
    let mut velocities = Vec::with_capacity(seq.len() + 1);
    let mut stages = Vec::with_capacity(seq.len());
    velocities.push(v0);
    let mut v = v0;
    let (mut fuel, mut time, mut cost) = (0.0, 0.0, 0.0);
    for (i, &mg) in seq.iter().enumerate() {
        let grade = Grade::new(h.alpha[i]);
        let next = step_at(veh, v, mg, &grade, h.ds)
            .map_err(|error| SequenceError::Infeasible { stage: i, error })?;
        if check_bounds && !h.contains(i + 1, next) {
            return Err(SequenceError::OutOfBounds { node: i + 1, v: next });
        }
        let c = stage_cost_at(veh, v, next, mg, &grade, w, h.ds);
        fuel += c.fuel;
        time += c.time;
        cost += c.weighted;
        stages.push(c);
        velocities.push(next);
        v = next;
    }
    cost += terminal_cost(v, v_f, beta);
    Ok(SequenceEval {
        velocities,
        stages,
        fuel,
        time,
        cost,
    })
}
