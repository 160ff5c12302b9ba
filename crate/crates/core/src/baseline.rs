//! Reference human driver: PI speed tracking of the limit with a preview of
//! upcoming drops and a threshold gear-shift rule, integrated in time.

use alloc::vec::Vec;

use crate::error::ParamError;
use crate::mpc::{route_stages, Trajectory};
use crate::route::RouteProfile;
use crate::vehicle::{DrivingMode, Grade, Vehicle};

#[derive(Debug, Clone, PartialEq)]
pub struct DriverParams {
    /// Proportional gain [N·m per m/s] on the wheel torque demand.
    pub k_p: f64,
    /// Integral gain [N·m per m/s·s].
    pub k_i: f64,
    /// Preview time at zero speed excess [s].
    pub preview_offset: f64,
    /// Extra preview time per m/s above the lowest previewed limit [s²/m].
    pub preview_slope: f64,
    pub upshift_rpm: f64,
    pub downshift_rpm: f64,
    /// Integration step [s].
    pub dt: f64,
    /// Largest service-brake deceleration [m/s²].
    pub service_decel: f64,
    /// Grade below which a low gear is held while braking [rad].
    pub downhill_grade: f64,
    /// Allowed excursion outside the limits before a step is flagged [m/s].
    pub tolerance: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            k_p: 10000.0,
            k_i: 1.0,
            preview_offset: 2.8,
            preview_slope: 0.25,
            upshift_rpm: 2000.0,
            downshift_rpm: 1000.0,
            dt: 0.1,
            service_decel: 1.5,
            downhill_grade: -0.01,
            tolerance: 0.5,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let pos = |key: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ParamError::new(key, "must be positive"))
            }
        };
        pos("k_p", self.k_p)?;
        pos("dt", self.dt)?;
        pos("service_decel", self.service_decel)?;
        pos("upshift_rpm", self.upshift_rpm)?;
        if !(self.k_i >= 0.0) {
            return Err(ParamError::new("k_i", "must be nonnegative"));
        }
        if !(self.preview_offset >= 0.0 && self.preview_slope >= 0.0) {
            return Err(ParamError::new("preview", "must be nonnegative"));
        }
        if !(self.downshift_rpm > 0.0 && self.downshift_rpm < self.upshift_rpm) {
            return Err(ParamError::new("downshift_rpm", "must lie in (0, upshift_rpm)"));
        }
        Ok(())
    }

    /// How far ahead, in time, the driver looks for lower limits.
    pub fn preview_time(&self, v: f64, lowest_ahead: f64) -> f64 {
        self.preview_offset + self.preview_slope * (v - lowest_ahead).max(0.0)
    }
}

/// `2.8 + 0.25·(v − lowest previewed limit)`, never below 2.8 s.
pub fn preview_time(v: f64, lowest_ahead: f64) -> f64 {
    DriverParams::default().preview_time(v, lowest_ahead)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    pub trajectory: Trajectory,
    /// Integration steps with the speed outside the limits by more than the
    /// tolerance.
    pub violations: usize,
    pub shifts: usize,
}

/// Lowest upper limit the driver reacts to from `(s, v)`: a limit `u` at
/// distance `d` ahead counts once `d ≤ v · t_prev(v, u)`.
fn previewed_limit(route: &RouteProfile, dp: &DriverParams, s: f64, v: f64) -> f64 {
    let pts = route.points();
    let mut lowest = route.at(s).v_max;
    for p in &pts[route.index_at(s) + 1..] {
        let d = p.s - s;
        if d > v * dp.preview_time(v, 0.0) {
            break;
        }
        if d <= v * dp.preview_time(v, p.v_max) {
            lowest = lowest.min(p.v_max);
        }
    }
    lowest
}

struct Sample {
    v: f64,
    fuel: f64,
    time: f64,
}

/// Simulates the driver over the whole route, starting at the initial limit,
/// and reports the result on the `ds` grid.
pub fn simulate_driver(veh: &Vehicle, route: &RouteProfile, dp: &DriverParams, ds: f64) -> BaselineRun {
    let p = veh.params();
    let total = route_stages(route, ds);
    let end = total as f64 * ds;
    let n = veh.n_gears() as u8;
    let mut v = route.at(0.0).v_max;
    let omega_of = |g: u8, v: f64| veh.engine_speed(g, v);
    let mut gear = (1..=n)
        .rev()
        .find(|&g| omega_of(g, v) >= dp.downshift_rpm.max(p.omega_min))
        .unwrap_or(1);
    let (mut s, mut t, mut fuel, mut integral) = (0.0, 0.0, 0.0, 0.0);
    let mut violations = 0;
    let mut shifts = 0;
    // grid crossings and the control in force at each
    let mut samples: Vec<Sample> = Vec::with_capacity(total + 1);
    let mut labels: Vec<(DrivingMode, u8)> = Vec::with_capacity(total + 1);
    samples.push(Sample { v, fuel: 0.0, time: 0.0 });
    let max_time = 100.0 * end / route.at(0.0).v_max.max(1.0) + 1000.0;

    while samples.len() <= total && t < max_time {
        let here = route.at(s);
        let grade = Grade::new(route.at(s).alpha);
        let v_ref = previewed_limit(route, dp, s, v);

        let omega = omega_of(gear, v).clamp(p.omega_min, p.omega_max);
        let ratio = p.gear_ratios[gear as usize - 1] * p.final_drive_ratio;
        let f_res = veh.resistance(v, &grade);
        let err = v_ref - v;
        let demand = p.wheel_radius * f_res + dp.k_p * err + dp.k_i * integral;
        let t_fr = p.friction_torque.eval(omega);
        let t_max = p.max_torque.eval(omega);
        let t_min = -(t_fr + p.max_brake_torque.eval(omega));
        let t_want = demand / ratio;
        let t_e = t_want.clamp(t_min, t_max);
        let saturated = t_want != t_e;
        let mut force = veh.wheel_force(gear, omega, t_e);
        let mut braking = false;
        if t_want < t_min {
            // the rest comes from the service brake
            let extra = ((t_min - t_want) * ratio / p.wheel_radius).min(p.mass * dp.service_decel);
            force -= extra;
            braking = true;
        }
        if !saturated {
            integral += err * dp.dt;
        }
        let accel = (force - f_res) / veh.effective_mass(gear);
        let rate = if t_e > 0.0 {
            veh.fuel_rate(t_e, omega)
        } else {
            p.idle_fuel_rate
        };
        let mode = if braking {
            DrivingMode::EngineBrake
        } else if t_e <= 0.0 {
            DrivingMode::Coast
        } else if accel > 0.05 {
            DrivingMode::Accelerate
        } else {
            DrivingMode::Cruise
        };

        let v_next = (v + accel * dp.dt).max(0.1);
        let s_next = s + 0.5 * (v + v_next) * dp.dt;
        let fuel_next = fuel + rate * dp.dt;
        // record every grid point crossed during this step
        while samples.len() <= total {
            let k = samples.len();
            let sk = k as f64 * ds;
            if sk > s_next {
                break;
            }
            let x = if s_next > s { (sk - s) / (s_next - s) } else { 1.0 };
            samples.push(Sample {
                v: v + x * (v_next - v),
                fuel: fuel + x * (fuel_next - fuel),
                time: t + x * dp.dt,
            });
            labels.push((mode, gear));
        }
        let s_mid = 0.5 * (s + s_next);
        let lim = route.at(s_mid.min(end));
        if v_next > lim.v_max + dp.tolerance || v_next < lim.v_min - dp.tolerance {
            violations += 1;
        }
        v = v_next;
        s = s_next;
        t += dp.dt;
        fuel = fuel_next;

        // threshold shifting, one gear per step
        let w = omega_of(gear, v);
        let hold = braking && here.alpha < dp.downhill_grade;
        if w > dp.upshift_rpm && gear < n && !hold {
            gear += 1;
            shifts += 1;
        } else if w < dp.downshift_rpm && gear > 1 {
            gear -= 1;
            shifts += 1;
        }
    }

    let mut traj = Trajectory::default();
    for i in 0..samples.len().saturating_sub(1) {
        let (mode, g) = labels[i];
        let f = samples[i + 1].fuel - samples[i].fuel;
        let dt = samples[i + 1].time - samples[i].time;
        traj.push(i as f64 * ds, samples[i].v, mode, g, f, dt);
    }
    traj.v_end = samples.last().map_or(v, |x| x.v);
    BaselineRun {
        trajectory: traj,
        violations,
        shifts,
    }
}
