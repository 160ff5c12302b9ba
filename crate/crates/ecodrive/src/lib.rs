//! Files, experiment harness and command line for the `ecodrive-core`
//! eco-driving solver.
//!
//! - [`config`]: vehicle and solver TOML files
//! - [`io`]: route, trajectory, per-solve statistics and lookup-table CSVs
//! - [`genroute`]: deterministic synthetic routes
//! - [`runner`]: one route under MPC, the warm start alone, or the baseline driver
//! - [`sweep`]: parallel parameter grids
//! - [`report`]: JSON summaries and fuel-savings comparisons
//! - [`cli`]: the `ecodrive` binary

pub mod cli;
pub mod config;
pub mod error;
pub mod genroute;
pub mod io;
pub mod report;
pub mod runner;
pub mod sweep;

pub use error::Error;
