//! TOML files for the vehicle and the solver.
//!
//! Both formats are flat key/value tables. Keys left out fall back to the
//! defaults ([`VehicleParams::representative`], [`SolverConfig::default`]).
//!
//! Vehicle keys:
//!
//! | key | unit | meaning |
//! |---|---|---|
//! | `m` | kg | mass |
//! | `rho_a` | kg/m³ | air density |
//! | `c_d`, `A_f` | -, m² | drag coefficient, frontal area |
//! | `g` | m/s² | gravity |
//! | `c_rr` | - | rolling resistance |
//! | `r_w` | m | wheel radius |
//! | `i_r`, `eta_r` | - | final-drive ratio and efficiency |
//! | `gears` | - | gearbox ratios, strictly decreasing, last = 1 |
//! | `J_dt` | kg·m² | driveline inertia, engine disengaged |
//! | `J_pt` | kg·m² | per-gear powertrain inertia |
//! | `omega_idle` | RPM | idle speed |
//! | `mdot_f_idle` | g/s | idle fuel rate |
//! | `fuel_coeffs` | g/s | fuel-map coefficients c4..c9 |
//! | `tloss_coeffs` | - | per-gear `[c1, c2, c3]` |
//! | `T_in_fr`, `T_e_max`, `T_eb_max` | N·m | `[[rpm, torque], ...]` tables |
//! | `omega_min`, `omega_max` | RPM | engaged speed range |
//! | `Q` | J/g | fuel energy |
//! | `eta_opt` | - | best chain efficiency used by the heuristic |

use std::path::Path;

use anyhow::Context;
use ecodrive_core::baseline::DriverParams;
use ecodrive_core::math::Table1D;
use ecodrive_core::{ParamError, SolverConfig, VehicleParams};
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct VehicleFile {
    pub m: Option<f64>,
    pub rho_a: Option<f64>,
    pub c_d: Option<f64>,
    pub A_f: Option<f64>,
    pub g: Option<f64>,
    pub c_rr: Option<f64>,
    pub r_w: Option<f64>,
    pub i_r: Option<f64>,
    pub eta_r: Option<f64>,
    pub gears: Option<Vec<f64>>,
    pub J_dt: Option<f64>,
    pub J_pt: Option<Vec<f64>>,
    pub omega_idle: Option<f64>,
    pub mdot_f_idle: Option<f64>,
    pub fuel_coeffs: Option<[f64; 6]>,
    pub tloss_coeffs: Option<Vec<[f64; 3]>>,
    pub T_in_fr: Option<Vec<[f64; 2]>>,
    pub T_e_max: Option<Vec<[f64; 2]>>,
    pub T_eb_max: Option<Vec<[f64; 2]>>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub Q: Option<f64>,
    pub eta_opt: Option<f64>,
}

fn table(key: &str, pairs: &[[f64; 2]]) -> Result<Table1D, ParamError> {
    let pts: Vec<(f64, f64)> = pairs.iter().map(|p| (p[0], p[1])).collect();
    Table1D::new(&pts).ok_or_else(|| ParamError::new(key, "needs finite [rpm, value] pairs with increasing rpm"))
}

fn pairs(t: &Table1D) -> Vec<[f64; 2]> {
    t.points().map(|(x, y)| [x, y]).collect()
}

impl VehicleFile {
    /// Every key set from `p`.
    pub fn from_params(p: &VehicleParams) -> Self {
        Self {
            m: Some(p.mass),
            rho_a: Some(p.air_density),
            c_d: Some(p.drag_coefficient),
            A_f: Some(p.frontal_area),
            g: Some(p.gravity),
            c_rr: Some(p.rolling_resistance),
            r_w: Some(p.wheel_radius),
            i_r: Some(p.final_drive_ratio),
            eta_r: Some(p.final_drive_efficiency),
            gears: Some(p.gear_ratios.clone()),
            J_dt: Some(p.driveline_inertia),
            J_pt: Some(p.powertrain_inertia.clone()),
            omega_idle: Some(p.omega_idle),
            mdot_f_idle: Some(p.idle_fuel_rate),
            fuel_coeffs: Some(p.fuel_coeffs),
            tloss_coeffs: Some(p.torque_loss_coeffs.clone()),
            T_in_fr: Some(pairs(&p.friction_torque)),
            T_e_max: Some(pairs(&p.max_torque)),
            T_eb_max: Some(pairs(&p.max_brake_torque)),
            omega_min: Some(p.omega_min),
            omega_max: Some(p.omega_max),
            Q: Some(p.fuel_energy),
            eta_opt: Some(p.eta_opt),
        }
    }

    /// Applies the keys present over `base` and validates the result.
    pub fn apply(&self, base: VehicleParams) -> Result<VehicleParams, ParamError> {
        let mut p = base;
        macro_rules! set {
            ($($key:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$key { p.$field = v.clone(); })*
            };
        }
        set! {
            m => mass, rho_a => air_density, c_d => drag_coefficient, A_f => frontal_area,
            g => gravity, c_rr => rolling_resistance, r_w => wheel_radius, i_r => final_drive_ratio,
            eta_r => final_drive_efficiency, gears => gear_ratios, J_dt => driveline_inertia,
            J_pt => powertrain_inertia, omega_idle => omega_idle, mdot_f_idle => idle_fuel_rate,
            fuel_coeffs => fuel_coeffs, tloss_coeffs => torque_loss_coeffs,
            omega_min => omega_min, omega_max => omega_max, Q => fuel_energy, eta_opt => eta_opt,
        }
        if let Some(t) = &self.T_in_fr {
            p.friction_torque = table("T_in_fr", t)?;
        }
        if let Some(t) = &self.T_e_max {
            p.max_torque = table("T_e_max", t)?;
        }
        if let Some(t) = &self.T_eb_max {
            p.max_brake_torque = table("T_eb_max", t)?;
        }
        p.validate()?;
        Ok(p)
    }
}

pub fn parse_vehicle(text: &str) -> Result<VehicleParams, Error> {
    let file: VehicleFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(file.apply(VehicleParams::representative())?)
}

pub fn load_vehicle(path: &Path) -> Result<VehicleParams, Error> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_vehicle(&text).map_err(|e| e.in_file(path))
}

pub fn vehicle_toml(p: &VehicleParams) -> String {
    toml::to_string(&VehicleFile::from_params(p)).expect("plain data serialises")
}

/// Solver, loop and driver settings. The driver keys live under `[driver]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub phi: Option<f64>,
    pub beta: Option<f64>,
    pub horizon: Option<usize>,
    pub ds: Option<f64>,
    pub v_f: Option<f64>,
    pub epsilon: Option<f64>,
    pub time_limit: Option<f64>,
    pub lut_velocity_step: Option<f64>,
    pub replan_stride: Option<usize>,
    pub v0: Option<f64>,
    pub driver: Option<DriverFile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverFile {
    pub k_p: Option<f64>,
    pub k_i: Option<f64>,
    pub preview_offset: Option<f64>,
    pub preview_slope: Option<f64>,
    pub upshift_rpm: Option<f64>,
    pub downshift_rpm: Option<f64>,
    pub dt: Option<f64>,
    pub service_decel: Option<f64>,
    pub downhill_grade: Option<f64>,
    pub tolerance: Option<f64>,
}

/// Everything a run needs besides the route and the vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub replan_stride: usize,
    pub v0: Option<f64>,
    pub driver: DriverParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            replan_stride: 1,
            v0: None,
            driver: DriverParams::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.solver.validate()?;
        if self.replan_stride == 0 {
            return Err(ParamError::new("replan_stride", "must be >= 1"));
        }
        if let Some(v) = self.v0 {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamError::new("v0", format!("must be > 0, got {v}")));
            }
        }
        self.driver.validate()
    }
}

impl ConfigFile {
    pub fn apply(&self, base: RunConfig) -> RunConfig {
        let mut c = base;
        let s = &mut c.solver;
        macro_rules! set {
            ($dst:expr, $src:expr, $($key:ident),*) => {
                $(if let Some(v) = $src.$key { $dst.$key = v; })*
            };
        }
        set!(s, self, phi, beta, horizon, ds, epsilon, lut_velocity_step);
        if self.v_f.is_some() {
            s.v_f = self.v_f;
        }
        if self.time_limit.is_some() {
            s.time_limit = self.time_limit;
        }
        if let Some(k) = self.replan_stride {
            c.replan_stride = k;
        }
        if self.v0.is_some() {
            c.v0 = self.v0;
        }
        if let Some(d) = &self.driver {
            let dp = &mut c.driver;
            set!(
                dp, d, k_p, k_i, preview_offset, preview_slope, upshift_rpm, downshift_rpm, dt, service_decel,
                downhill_grade, tolerance
            );
        }
        c
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, Error> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let c = file.apply(RunConfig::default());
    c.validate()?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).map_err(|e| e.in_file(path))
}
