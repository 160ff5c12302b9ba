use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ParamError;
use crate::math::Table1D;

/// Physical constants, gear set and powertrain maps of the truck.
///
/// Units are SI except engine speeds, which are in RPM (the maps are given
/// over RPM), and fuel, which is in grams.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Vehicle mass `m` [kg].
    pub mass: f64,
    /// Air density [kg/m³].
    pub air_density: f64,
    /// Aerodynamic drag coefficient [-].
    pub drag_coefficient: f64,
    /// Frontal area [m²].
    pub frontal_area: f64,
    /// Gravitational acceleration [m/s²].
    pub gravity: f64,
    /// Rolling-resistance coefficient [-].
    pub rolling_resistance: f64,
    /// Rear wheel radius [m].
    pub wheel_radius: f64,
    /// Final-drive ratio [-].
    pub final_drive_ratio: f64,
    /// Final-drive efficiency (constant) [-].
    pub final_drive_efficiency: f64,
    /// Gearbox ratios for gears `1..=n`, strictly decreasing, last one 1.0.
    pub gear_ratios: Vec<f64>,
    /// Rotational inertia of the drivetrain with the engine disengaged [kg·m²].
    pub driveline_inertia: f64,
    /// Rotational inertia of the engaged powertrain per gear, reflected to the wheels [kg·m²].
    pub powertrain_inertia: Vec<f64>,
    /// Idle engine speed [RPM].
    pub omega_idle: f64,
    /// Idle fuel rate [g/s].
    pub idle_fuel_rate: f64,
    /// Fuel-map polynomial coefficients `c4..c9` [g/s output].
    pub fuel_coeffs: [f64; 6],
    /// Per-gear torque-loss coefficients `(c1, c2, c3)` [N·m output].
    pub torque_loss_coeffs: Vec<[f64; 3]>,
    /// Internal engine friction torque over engine speed [N·m].
    pub friction_torque: Table1D,
    /// Full-load engine torque over engine speed [N·m].
    pub max_torque: Table1D,
    /// Maximum engine-brake torque over engine speed [N·m].
    pub max_brake_torque: Table1D,
    /// Lowest admissible engine speed when engaged [RPM].
    pub omega_min: f64,
    /// Highest admissible engine speed [RPM].
    pub omega_max: f64,
    /// Specific energy of diesel [J/g].
    pub fuel_energy: f64,
    /// Estimated best fuel-to-work efficiency used by the heuristic [-].
    pub eta_opt: f64,
}

impl VehicleParams {
    /// Representative 40 t tractor–semitrailer with a 12-speed gearbox.
    ///
    /// The map coefficients are synthetic, shaped so that the
    /// best BSFC is 195 g/kWh near 1150 RPM and 1900 N·m.
    pub fn representative() -> Self {
        let gear_ratios = vec![
            14.93, 11.64, 9.02, 7.04, 5.64, 4.40, 3.39, 2.65, 2.05, 1.60, 1.25, 1.00,
        ];
        let final_drive_ratio = 2.64;
        let wheel_radius = 0.492;
        let driveline_inertia = 150.0;
        let engine_inertia = 4.0;
        let powertrain_inertia = gear_ratios
            .iter()
            .map(|&it: &f64| {
                let i = it * final_drive_ratio;
                driveline_inertia + engine_inertia * i * i
            })
            .collect();
        let torque_loss_coeffs = gear_ratios
            .iter()
            .map(|&it| {
                if it == 1.0 {
                    [0.003, 0.012, 3.0]
                } else if it > 5.0 {
                    [0.006, 0.030, 6.0]
                } else {
                    [0.006, 0.025, 6.0]
                }
            })
            .collect();
        Self {
            mass: 40_000.0,
            air_density: 1.18,
            drag_coefficient: 0.55,
            frontal_area: 10.0,
            gravity: 9.81,
            rolling_resistance: 0.0055,
            wheel_radius,
            final_drive_ratio,
            final_drive_efficiency: 0.97,
            gear_ratios,
            driveline_inertia,
            powertrain_inertia,
            omega_idle: 600.0,
            idle_fuel_rate: 0.35,
            fuel_coeffs: [0.2, 4.0e-4, -4.5e-4, 6.0e-7, 4.73e-6, 4.0e-7],
            torque_loss_coeffs,
            friction_torque: Table1D::new(&[
                (600.0, 110.0),
                (1000.0, 130.0),
                (1400.0, 155.0),
                (1800.0, 185.0),
                (2100.0, 210.0),
            ])
            .expect("static table"),
            max_torque: Table1D::new(&[
                (800.0, 1800.0),
                (1000.0, 2500.0),
                (1100.0, 2600.0),
                (1400.0, 2600.0),
                (1600.0, 2450.0),
                (1800.0, 2200.0),
                (2000.0, 1950.0),
                (2100.0, 1800.0),
            ])
            .expect("static table"),
            max_brake_torque: Table1D::new(&[
                (600.0, 0.0),
                (800.0, 250.0),
                (1000.0, 600.0),
                (1200.0, 1000.0),
                (1500.0, 1500.0),
                (1800.0, 1800.0),
                (2100.0, 1900.0),
            ])
            .expect("static table"),
            omega_min: 800.0,
            omega_max: 2100.0,
            fuel_energy: 42_800.0,
            eta_opt: 0.45,
        }
    }

    /// Keeps only the `n` highest gears (smallest ratios), preserving the
    /// per-gear arrays. Used for small enumerable instances.
    pub fn with_top_gears(mut self, n: usize) -> Self {
        let total = self.gear_ratios.len();
        let n = n.clamp(1, total);
        let skip = total - n;
        self.gear_ratios.drain(..skip);
        self.powertrain_inertia.drain(..skip);
        self.torque_loss_coeffs.drain(..skip);
        self
    }

    pub fn n_gears(&self) -> usize {
        self.gear_ratios.len()
    }

    /// Checks every invariant and reports the first violation with its key.
    pub fn validate(&self) -> Result<(), ParamError> {
        fn positive(key: &str, v: f64) -> Result<(), ParamError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamError::new(key, format!("must be > 0, got {v}")))
            }
        }
        fn non_negative(key: &str, v: f64) -> Result<(), ParamError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ParamError::new(key, format!("must be >= 0, got {v}")))
            }
        }

        positive("m", self.mass)?;
        non_negative("rho_a", self.air_density)?;
        non_negative("c_d", self.drag_coefficient)?;
        non_negative("A_f", self.frontal_area)?;
        positive("g", self.gravity)?;
        non_negative("c_rr", self.rolling_resistance)?;
        positive("r_w", self.wheel_radius)?;
        positive("i_r", self.final_drive_ratio)?;
        let eta_r = self.final_drive_efficiency;
        if !(eta_r > 0.0 && eta_r <= 1.0) {
            return Err(ParamError::new("eta_r", format!("must lie in (0, 1], got {eta_r}")));
        }

        let n = self.gear_ratios.len();
        if n == 0 {
            return Err(ParamError::new("gears", "at least one gear is required"));
        }
        if n > u8::MAX as usize - 1 {
            return Err(ParamError::new("gears", "too many gears"));
        }
        for (i, &r) in self.gear_ratios.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(ParamError::new("gears", format!("gear {} ratio must be > 0", i + 1)));
            }
            if i > 0 && r >= self.gear_ratios[i - 1] {
                return Err(ParamError::new(
                    "gears",
                    format!("ratios must strictly decrease (gear {})", i + 1),
                ));
            }
        }
        if self.gear_ratios[n - 1] != 1.0 {
            return Err(ParamError::new("gears", "the highest gear must be direct drive (ratio 1)"));
        }

        non_negative("J_dt", self.driveline_inertia)?;
        if self.powertrain_inertia.len() != n {
            return Err(ParamError::new("J_pt", format!("expected {n} entries")));
        }
        for &j in &self.powertrain_inertia {
            non_negative("J_pt", j)?;
        }
        positive("omega_idle", self.omega_idle)?;
        non_negative("mdot_f_idle", self.idle_fuel_rate)?;
        if self.fuel_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ParamError::new("fuel_coeffs", "coefficients must be finite"));
        }
        if self.torque_loss_coeffs.len() != n {
            return Err(ParamError::new("tloss_coeffs", format!("expected {n} entries")));
        }
        for (i, c) in self.torque_loss_coeffs.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(ParamError::new("tloss_coeffs", format!("gear {} not finite", i + 1)));
            }
            if c[1] >= 1.0 {
                return Err(ParamError::new(
                    "tloss_coeffs",
                    format!("gear {}: c2 must be < 1", i + 1),
                ));
            }
        }

        positive("omega_min", self.omega_min)?;
        positive("omega_max", self.omega_max)?;
        if self.omega_min >= self.omega_max {
            return Err(ParamError::new("omega_max", "must exceed omega_min"));
        }
        let probe = |t: &Table1D| -> Vec<f64> {
            let mut ws = vec![self.omega_min, self.omega_max];
            ws.extend(
                t.xs()
                    .iter()
                    .copied()
                    .filter(|&w| w > self.omega_min && w < self.omega_max),
            );
            ws
        };
        for w in probe(&self.max_torque) {
            if !(self.max_torque.eval(w) > 0.0) {
                return Err(ParamError::new("T_e_max", format!("must be > 0 at {w} RPM")));
            }
        }
        for w in probe(&self.max_brake_torque) {
            if !(self.max_brake_torque.eval(w) >= 0.0) {
                return Err(ParamError::new("T_eb_max", format!("must be >= 0 at {w} RPM")));
            }
        }
        for w in probe(&self.friction_torque) {
            if !(self.friction_torque.eval(w) >= 0.0) {
                return Err(ParamError::new("T_in_fr", format!("must be >= 0 at {w} RPM")));
            }
        }
        positive("Q", self.fuel_energy)?;
        if !(self.eta_opt > 0.0 && self.eta_opt < 1.0) {
            return Err(ParamError::new("eta_opt", "must lie in (0, 1)"));
        }
        Ok(())
    }
}
