use alloc::string::String;
use thiserror::Error;

/// Why a mode–gear combination cannot be applied at a given state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Infeasibility {
    /// Gear index outside `1..=n_gears`, or a gear/mode mismatch.
    InvalidGear,
    /// Engine speed below the lower limit.
    OmegaBelowMin,
    /// Engine speed above the upper limit.
    OmegaAboveMax,
    /// Required engine torque exceeds the full-load curve.
    EngineTorque,
    /// Required engine-brake torque exceeds the brake capability.
    BrakeTorque,
    /// The mode's enabling condition does not hold (e.g. cruising with
    /// negative resistance, downhill while some gear can still coast).
    ModeDisabled,
}

impl core::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Infeasibility::InvalidGear => "invalid gear",
            Infeasibility::OmegaBelowMin => "engine speed below minimum",
            Infeasibility::OmegaAboveMax => "engine speed above maximum",
            Infeasibility::EngineTorque => "engine torque above full-load limit",
            Infeasibility::BrakeTorque => "engine-brake torque above limit",
            Infeasibility::ModeDisabled => "mode disabled in this state",
        };
        f.write_str(s)
    }
}

/// Validation failure of a parameter set, naming the offending key.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameter `{key}`: {reason}")]
pub struct ParamError {
    pub key: String,
    pub reason: String,
}

impl ParamError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VehicleError {
    #[error("gear {0} is not defined for this vehicle")]
    UndefinedGear(u8),
    #[error("mode–gear infeasible: {0}")]
    Infeasible(Infeasibility),
    #[error("velocity stalls (next velocity {next} m/s)")]
    Stall { next: f64 },
    #[error("engine power {requested} W exceeds the maximum feasible power {max} W")]
    PowerAboveMax { requested: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("route needs at least two points")]
    TooShort,
    #[error("route point {index}: distance must start at 0 and increase strictly")]
    NotIncreasing { index: usize },
    #[error("route point {index}: v_min {v_min} > v_max {v_max}")]
    BoundsInverted { index: usize, v_min: f64, v_max: f64 },
    #[error("route point {index}: non-finite or negative value")]
    InvalidValue { index: usize },
    #[error("horizon end {end} m exceeds route length {length} m")]
    HorizonExceedsRoute { end: f64, length: f64 },
    #[error("speed bounds become empty at stage {stage} after tightening")]
    InfeasibleBounds { stage: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no feasible sequence found (deepest stage reached: {deepest_stage})")]
    Infeasible { deepest_stage: usize },
    #[error(transparent)]
    Route(#[from] RouteError),
}
