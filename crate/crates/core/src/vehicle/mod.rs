//! Longitudinal truck model: resistance, driveline losses, engine map and the
//! space-domain dynamics of the six driving modes.

mod bsfc;
mod mode;
mod params;

use alloc::vec::Vec;

pub use bsfc::{BsfcLine, DEFAULT_LINE_POINTS};
pub use mode::{DrivingMode, ModeGear};
pub use params::VehicleParams;

use crate::error::{Infeasibility, ParamError, VehicleError};
use crate::math::{cos, sin, Table1D, PI, RPM_TO_RAD_S};

/// Road grade with its trigonometric values cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grade {
    pub alpha: f64,
    sin: f64,
    cos: f64,
}

impl Grade {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            sin: sin(alpha),
            cos: cos(alpha),
        }
    }
}

/// Per-gear quantities at one velocity, shared by every mode in that gear.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GearState {
    pub gear: u8,
    pub omega: f64,
    pub range: Result<(), Infeasibility>,
    force_per_torque: f64,
    mass_eff: f64,
    loss: [f64; 3],
    t_fr: f64,
}

/// Validated vehicle with the derived tables used by the solver.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct Vehicle {
    p: VehicleParams,
    line: BsfcLine,
    omega_per_v: Vec<f64>,
    force_per_torque: Vec<f64>,
    mass_eff: Vec<f64>,
    mass_eff_dt: f64,
    max_brake_power: f64,
    max_inertia: f64,
}

impl Vehicle {
    pub fn new(params: VehicleParams) -> Result<Self, ParamError> {
        Self::with_line_points(params, DEFAULT_LINE_POINTS)
    }

    /// Like [`Vehicle::new`] with a custom number of power levels for the
    /// BSFC line table.
    pub fn with_line_points(params: VehicleParams, points: usize) -> Result<Self, ParamError> {
        params.validate()?;
        let p = params;
        let line = BsfcLine::build(&p, points);
        let rw = p.wheel_radius;
        let omega_per_v = p
            .gear_ratios
            .iter()
            .map(|&it| 30.0 * it * p.final_drive_ratio / (PI * rw))
            .collect();
        let force_per_torque = p
            .gear_ratios
            .iter()
            .map(|&it| p.final_drive_efficiency * it * p.final_drive_ratio / rw)
            .collect();
        let mass_eff = p
            .powertrain_inertia
            .iter()
            .map(|&j| p.mass + j / (rw * rw))
            .collect();
        let mass_eff_dt = p.mass + p.driveline_inertia / (rw * rw);
        let (_, brake) = bsfc::max_speed_torque_product(
            &[&p.friction_torque, &p.max_brake_torque],
            p.omega_min,
            p.omega_max,
        );
        let max_inertia = p
            .powertrain_inertia
            .iter()
            .copied()
            .fold(p.driveline_inertia, f64::max);
        Ok(Self {
            line,
            omega_per_v,
            force_per_torque,
            mass_eff,
            mass_eff_dt,
            max_brake_power: brake * RPM_TO_RAD_S,
            max_inertia,
            p,
        })
    }

    pub fn representative() -> Self {
        Self::new(VehicleParams::representative()).expect("representative parameters are valid")
    }

    pub fn params(&self) -> &VehicleParams {
        &self.p
    }

    pub fn n_gears(&self) -> usize {
        self.p.gear_ratios.len()
    }

    pub fn bsfc_line(&self) -> &BsfcLine {
        &self.line
    }

    /// Largest engine power within the speed limits [W].
    pub fn max_power(&self) -> f64 {
        self.line.max_power()
    }

    /// Largest braking power of engine friction plus engine brake within the
    /// speed limits [W].
    pub fn max_brake_power(&self) -> f64 {
        self.max_brake_power
    }

    /// Largest rotational inertia over all gears and neutral [kg·m²].
    pub fn max_inertia(&self) -> f64 {
        self.max_inertia
    }

    /// Effective translational mass in `gear` (0 = neutral) [kg].
    pub fn effective_mass(&self, gear: u8) -> f64 {
        if gear == 0 {
            self.mass_eff_dt
        } else {
            self.mass_eff[gear as usize - 1]
        }
    }

    /// Total driving resistance from air drag, rolling and grade [N].
    pub fn resistance_force(&self, v: f64, alpha: f64) -> f64 {
        self.resistance(v, &Grade::new(alpha))
    }

    #[inline]
    pub fn resistance(&self, v: f64, grade: &Grade) -> f64 {
        let p = &self.p;
        0.5 * p.air_density * p.drag_coefficient * p.frontal_area * v * v
            + p.mass * p.gravity * p.rolling_resistance * grade.cos
            + p.mass * p.gravity * grade.sin
    }

    fn check_gear(&self, gear: u8) -> Result<usize, VehicleError> {
        if gear >= 1 && gear as usize <= self.n_gears() {
            Ok(gear as usize - 1)
        } else {
            Err(VehicleError::UndefinedGear(gear))
        }
    }

    /// Gearbox torque loss `c1·ω + c2·T + c3`, clamped below at zero [N·m].
    pub fn transmission_loss(&self, torque: f64, omega: f64, gear: u8) -> Result<f64, VehicleError> {
        let c = self.p.torque_loss_coeffs[self.check_gear(gear)?];
        Ok((c[0] * omega + c[1] * torque.abs() + c[2]).max(0.0))
    }

    /// Gearbox efficiency `1 − T_loss/|T|`, clamped to `[0, 1]`.
    pub fn transmission_efficiency(&self, torque: f64, omega: f64, gear: u8) -> Result<f64, VehicleError> {
        let loss = self.transmission_loss(torque, omega, gear)?;
        if loss == 0.0 {
            return Ok(1.0);
        }
        if torque == 0.0 {
            return Ok(0.0);
        }
        Ok((1.0 - loss / torque.abs()).max(0.0))
    }

    /// Engine speed in `gear` at velocity `v` [RPM]; idle speed in neutral.
    ///
    /// # Panics
    /// If `gear` exceeds the number of gears.
    #[inline]
    pub fn engine_speed(&self, gear: u8, v: f64) -> f64 {
        if gear == 0 {
            self.p.omega_idle
        } else {
            self.omega_per_v[gear as usize - 1] * v
        }
    }

    /// Fuel-map rate at torque `t` and speed `omega` [g/s].
    #[inline]
    pub fn fuel_rate(&self, t: f64, omega: f64) -> f64 {
        bsfc::fuel_poly(&self.p.fuel_coeffs, t, omega)
    }

    /// Torque–speed pair on the optimal BSFC line delivering `power` [W].
    pub fn bsfc_optimal_torque(&self, power: f64) -> Result<(f64, f64), VehicleError> {
        let max = self.line.max_power();
        if !(power > 0.0) || power > max {
            return Err(VehicleError::PowerAboveMax {
                requested: power,
                max,
            });
        }
        Ok(bsfc::optimal_point(
            &self.p,
            power,
            self.line.omega_at_max_power(),
            max,
        ))
    }

    /// Accelerate-mode engine torque at engine speed `omega` [N·m].
    #[inline]
    pub fn efficient_torque(&self, omega: f64) -> f64 {
        self.line.torque_at_speed(omega, &self.p.max_torque)
    }

    pub fn max_torque(&self) -> &Table1D {
        &self.p.max_torque
    }

    /// Wheel force from engine torque `t` in `gear` at engine speed `omega`,
    /// signed like `t`; drag torque (`t < 0`) goes through the same loss
    /// model as the braking modes.
    pub(crate) fn wheel_force(&self, gear: u8, omega: f64, t: f64) -> f64 {
        let i = gear as usize - 1;
        let c = &self.p.torque_loss_coeffs[i];
        if t >= 0.0 {
            self.force_per_torque[i] * net_torque(c, omega, t)
        } else {
            -self.force_per_torque[i] * net_torque(c, omega, -t)
        }
    }

    #[inline]
    pub(crate) fn gear_state(&self, gear: u8, v: f64) -> GearState {
        let i = gear as usize - 1;
        let omega = self.omega_per_v[i] * v;
        let range = if omega < self.p.omega_min {
            Err(Infeasibility::OmegaBelowMin)
        } else if omega > self.p.omega_max {
            Err(Infeasibility::OmegaAboveMax)
        } else {
            Ok(())
        };
        GearState {
            gear,
            omega,
            range,
            force_per_torque: self.force_per_torque[i],
            mass_eff: self.mass_eff[i],
            loss: self.p.torque_loss_coeffs[i],
            // only engaged modes read the friction torque, and only in range
            t_fr: if range.is_ok() { self.p.friction_torque.eval(omega) } else { f64::NAN },
        }
    }

    // --- per-mode kernels, shared by the single and batched paths ---

    #[inline]
    fn coast_rate(gs: &GearState, fres: f64, v: f64) -> f64 {
        let net = net_torque(&gs.loss, gs.omega, gs.t_fr);
        -(gs.force_per_torque * net + fres) / (gs.mass_eff * v)
    }

    #[inline]
    fn engine_brake_rate(&self, gs: &GearState, fres: f64, v: f64) -> f64 {
        let t = gs.t_fr + self.p.max_brake_torque.eval(gs.omega);
        let net = net_torque(&gs.loss, gs.omega, t);
        -(gs.force_per_torque * net + fres) / (gs.mass_eff * v)
    }

    #[inline]
    fn accelerate_rate(&self, gs: &GearState, fres: f64, v: f64) -> f64 {
        let t = self.efficient_torque(gs.omega);
        let net = net_torque(&gs.loss, gs.omega, t);
        (gs.force_per_torque * net - fres) / (gs.mass_eff * v)
    }

    #[inline]
    fn eco_roll_rate(&self, fres: f64, v: f64) -> f64 {
        -fres / (self.mass_eff_dt * v)
    }

    /// Engine torque holding the speed against `fres > 0`.
    #[inline]
    fn cruise_torque(gs: &GearState, fres: f64) -> f64 {
        invert_net_torque(&gs.loss, gs.omega, fres / gs.force_per_torque)
    }

    /// Engine-brake torque on top of friction holding the speed against
    /// `fres < 0`; may be negative when coasting alone decelerates.
    #[inline]
    fn downhill_torque(gs: &GearState, fres: f64) -> f64 {
        invert_net_torque(&gs.loss, gs.omega, -fres / gs.force_per_torque) - gs.t_fr
    }

    /// True if no speed-feasible gear decelerates when coasting.
    fn coast_cannot_brake(&self, v: f64, fres: f64) -> bool {
        (1..=self.n_gears() as u8).all(|g| {
            let gs = self.gear_state(g, v);
            gs.range.is_err() || Self::coast_rate(&gs, fres, v) >= 0.0
        })
    }

    /// Whether `mg` can be applied at `(v, α)`, with the reason if not.
    pub fn mode_feasible(&self, mg: ModeGear, v: f64, alpha: f64) -> Result<(), Infeasibility> {
        self.feasible_at(mg, v, &Grade::new(alpha))
    }

    pub(crate) fn feasible_at(&self, mg: ModeGear, v: f64, grade: &Grade) -> Result<(), Infeasibility> {
        if !mg.is_consistent(self.n_gears()) {
            return Err(Infeasibility::InvalidGear);
        }
        if mg.mode == DrivingMode::EcoRoll {
            return Ok(());
        }
        let gs = self.gear_state(mg.gear, v);
        gs.range?;
        let fres = self.resistance(v, grade);
        match mg.mode {
            DrivingMode::Cruise => {
                if fres <= 0.0 {
                    return Err(Infeasibility::ModeDisabled);
                }
                if Self::cruise_torque(&gs, fres) > self.p.max_torque.eval(gs.omega) {
                    return Err(Infeasibility::EngineTorque);
                }
                Ok(())
            }
            DrivingMode::Downhill => {
                if fres >= 0.0 || !self.coast_cannot_brake(v, fres) {
                    return Err(Infeasibility::ModeDisabled);
                }
                if Self::downhill_torque(&gs, fres) > self.p.max_brake_torque.eval(gs.omega) {
                    return Err(Infeasibility::BrakeTorque);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Velocity change per metre `dv/ds` of `mg` at `(v, α)` [1/s].
    pub fn mode_dynamics(&self, mg: ModeGear, v: f64, alpha: f64) -> Result<f64, VehicleError> {
        self.dynamics_at(mg, v, &Grade::new(alpha))
    }

    pub(crate) fn dynamics_at(&self, mg: ModeGear, v: f64, grade: &Grade) -> Result<f64, VehicleError> {
        self.feasible_at(mg, v, grade)
            .map_err(VehicleError::Infeasible)?;
        let fres = self.resistance(v, grade);
        Ok(match mg.mode {
            DrivingMode::Cruise | DrivingMode::Downhill => 0.0,
            DrivingMode::EcoRoll => self.eco_roll_rate(fres, v),
            DrivingMode::Coast => Self::coast_rate(&self.gear_state(mg.gear, v), fres, v),
            DrivingMode::EngineBrake => {
                self.engine_brake_rate(&self.gear_state(mg.gear, v), fres, v)
            }
            DrivingMode::Accelerate => self.accelerate_rate(&self.gear_state(mg.gear, v), fres, v),
        })
    }

    /// Extra engine-brake torque that holds the speed in Downhill [N·m].
    pub fn downhill_brake_torque(&self, gear: u8, v: f64, alpha: f64) -> Result<f64, VehicleError> {
        self.check_gear(gear)?;
        self.mode_feasible(ModeGear::new(DrivingMode::Downhill, gear), v, alpha)
            .map_err(VehicleError::Infeasible)?;
        let gs = self.gear_state(gear, v);
        Ok(Self::downhill_torque(&gs, self.resistance_force(v, alpha)).max(0.0))
    }

    /// Engine torque `mg` runs at, if the mode is feasible [N·m]. Zero for
    /// eco-roll; friction (plus brake) torque for the braking modes.
    pub fn mode_torque(&self, mg: ModeGear, v: f64, alpha: f64) -> Result<f64, VehicleError> {
        let grade = Grade::new(alpha);
        self.feasible_at(mg, v, &grade)
            .map_err(VehicleError::Infeasible)?;
        if mg.mode == DrivingMode::EcoRoll {
            return Ok(0.0);
        }
        let gs = self.gear_state(mg.gear, v);
        let fres = self.resistance(v, &grade);
        Ok(match mg.mode {
            DrivingMode::Cruise => Self::cruise_torque(&gs, fres),
            DrivingMode::Accelerate => self.efficient_torque(gs.omega),
            DrivingMode::Coast => gs.t_fr,
            DrivingMode::EngineBrake => gs.t_fr + self.p.max_brake_torque.eval(gs.omega),
            DrivingMode::Downhill => gs.t_fr + Self::downhill_torque(&gs, fres).max(0.0),
            DrivingMode::EcoRoll => unreachable!(),
        })
    }

    /// Fuel used per metre by `mg` at `(v, α)` [g/m].
    pub fn mode_fuel_per_meter(&self, mg: ModeGear, v: f64, alpha: f64) -> Result<f64, VehicleError> {
        let grade = Grade::new(alpha);
        self.feasible_at(mg, v, &grade)
            .map_err(VehicleError::Infeasible)?;
        Ok(self.fuel_per_meter_unchecked(mg, v, &grade))
    }

    /// Fuel per metre without the feasibility check; used at the midpoint
    /// velocity of a stage, which may sit just outside the speed limits.
    #[inline]
    pub(crate) fn fuel_per_meter_unchecked(&self, mg: ModeGear, v: f64, grade: &Grade) -> f64 {
        match mg.mode {
            DrivingMode::Coast | DrivingMode::EngineBrake | DrivingMode::Downhill => 0.0,
            DrivingMode::EcoRoll => self.p.idle_fuel_rate / v,
            DrivingMode::Cruise => {
                let gs = self.gear_state(mg.gear, v);
                let t = Self::cruise_torque(&gs, self.resistance(v, grade));
                self.fuel_rate(t, gs.omega) / v
            }
            DrivingMode::Accelerate => {
                let omega = self.engine_speed(mg.gear, v);
                self.fuel_rate(self.efficient_torque(omega), omega) / v
            }
        }
    }

    /// Every feasible mode–gear at `(v, grade)` with its `dv/ds`, in
    /// tie-breaking order. Bit-identical to calling
    /// [`Vehicle::mode_dynamics`] per combination.
    pub(crate) fn expand(
        &self,
        v: f64,
        grade: &Grade,
        states: &mut Vec<GearState>,
        out: &mut Vec<(ModeGear, f64)>,
    ) {
        out.clear();
        states.clear();
        let fres = self.resistance(v, grade);
        let mut coast_brakes = false;
        for g in 1..=self.n_gears() as u8 {
            let gs = self.gear_state(g, v);
            if gs.range.is_ok() && Self::coast_rate(&gs, fres, v) < 0.0 {
                coast_brakes = true;
            }
            states.push(gs);
        }
        let ok = |gs: &GearState| gs.range.is_ok();
        use DrivingMode::*;
        if fres > 0.0 {
            for gs in states.iter().filter(|g| ok(g)) {
                if Self::cruise_torque(gs, fres) <= self.p.max_torque.eval(gs.omega) {
                    out.push((ModeGear::new(Cruise, gs.gear), 0.0));
                }
            }
        }
        out.push((ModeGear::ECO_ROLL, self.eco_roll_rate(fres, v)));
        for gs in states.iter().filter(|g| ok(g)) {
            out.push((ModeGear::new(Coast, gs.gear), Self::coast_rate(gs, fres, v)));
        }
        for gs in states.iter().filter(|g| ok(g)) {
            out.push((ModeGear::new(EngineBrake, gs.gear), self.engine_brake_rate(gs, fres, v)));
        }
        for gs in states.iter().filter(|g| ok(g)) {
            out.push((ModeGear::new(Accelerate, gs.gear), self.accelerate_rate(gs, fres, v)));
        }
        if fres < 0.0 && !coast_brakes {
            for gs in states.iter().filter(|g| ok(g)) {
                if Self::downhill_torque(gs, fres) <= self.p.max_brake_torque.eval(gs.omega) {
                    out.push((ModeGear::new(Downhill, gs.gear), 0.0));
                }
            }
        }
    }
}

/// Torque reaching the wheels side of the gearbox, `T − T_loss` with the
/// loss clamped to `[0, T]`, for `t ≥ 0`.
#[inline]
fn net_torque(c: &[f64; 3], omega: f64, t: f64) -> f64 {
    let loss = (c[0] * omega + c[1] * t + c[2]).max(0.0);
    (t - loss).max(0.0)
}

/// Smallest torque `T` with `net_torque(T) = target` for `target > 0`.
#[inline]
fn invert_net_torque(c: &[f64; 3], omega: f64, target: f64) -> f64 {
    let t = (target + c[0] * omega + c[2]) / (1.0 - c[1]);
    if c[0] * omega + c[1] * t + c[2] >= 0.0 {
        t
    } else {
        target
    }
}

#[cfg(test)]
mod tests;
