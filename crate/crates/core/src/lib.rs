//! Driving-mode eco-driving for heavy-duty trucks.
//!
//! The velocity of the truck over distance is steered by switching between six
//! driving modes (cruise, eco-roll, coast, engine brake, accelerate, downhill)
//! in one of the transmission gears. Over a discretised preview horizon this
//! becomes a purely combinatorial problem, solved here by a dedicated
//! branch-and-bound search that combines
//!
//! - speed-bound tightening from ideal acceleration/deceleration envelopes,
//! - an admissible energy/time cost-to-go heuristic stored in a lookup table,
//! - a level-wise bounded breadth-first search with greedy depth probing,
//! - velocity-bin dominance elimination, and
//! - a warm-start solution providing the initial upper bound.
//!
//! The crate is `no_std` (with `alloc`). Clocks, file formats and the command
//! line live in the `ecodrive` companion crate.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x >= 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod bnb;
pub mod error;
pub mod heuristic;
pub mod math;
pub mod mpc;
pub mod ocp;
pub mod route;
pub mod vehicle;
pub mod warmstart;

pub use bnb::{Deadline, NoDeadline, SolveResult, SolveStats, Termination};
pub use error::{ParamError, SolveError, VehicleError};
pub use heuristic::HeuristicLut;
pub use mpc::{MpcOptions, MpcRun, Trajectory};
pub use ocp::{SolverConfig, StageCost};
pub use route::{Horizon, RoutePoint, RouteProfile};
pub use vehicle::{DrivingMode, ModeGear, Vehicle, VehicleParams};
pub use warmstart::{EnvelopeWarmStart, WarmStartGenerator, WarmStartResult};
