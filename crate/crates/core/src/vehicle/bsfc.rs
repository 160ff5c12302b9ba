//! Optimal brake-specific fuel consumption line of the engine map.

use alloc::vec::Vec;

use super::params::VehicleParams;
use crate::math::{golden_section, Table1D, RPM_TO_RAD_S};

/// Default number of power levels the line is tabulated at.
pub const DEFAULT_LINE_POINTS: usize = 200;

/// Evaluates the fuel-map polynomial, clamped below at zero.
#[inline]
pub(crate) fn fuel_poly(c: &[f64; 6], t: f64, w: f64) -> f64 {
    let r = c[0] + c[1] * w + c[2] * t + c[3] * w * w + c[4] * w * t + c[5] * t * t;
    r.max(0.0)
}

/// Maximum of `ω·Σ tables(ω)` over `[lo, hi]`, evaluated exactly per
/// piecewise-linear segment. Returns `(ω, ω·Σ)` with ω in RPM.
pub(crate) fn max_speed_torque_product(tables: &[&Table1D], lo: f64, hi: f64) -> (f64, f64) {
    let mut knots: Vec<f64> = Vec::new();
    knots.push(lo);
    for t in tables {
        knots.extend(t.xs().iter().copied().filter(|&x| x > lo && x < hi));
    }
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let torque = |w: f64| tables.iter().map(|t| t.eval(w)).sum::<f64>();
    let mut best = (lo, lo * torque(lo));
    let mut consider = |w: f64| {
        let p = w * torque(w);
        if p > best.1 {
            best = (w, p);
        }
    };
    for win in knots.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        consider(x1);
        // torque is a + s·ω on the segment; ω(a + sω) peaks at -a/(2s)
        let (y0, y1) = (torque(x0), torque(x1));
        let s = (y1 - y0) / (x1 - x0);
        if s < 0.0 {
            let a = y0 - s * x0;
            let w = -a / (2.0 * s);
            if w > x0 && w < x1 {
                consider(w);
            }
        }
    }
    best
}

/// The torque–speed pairs minimising fuel per unit of power, tabulated over
/// power, together with its projection onto engine speed.
#[derive(Debug, Clone, PartialEq)]
pub struct BsfcLine {
    powers: Vec<f64>,
    omegas: Vec<f64>,
    torques: Vec<f64>,
    by_speed: Table1D,
    speed_end: f64,
    max_power: f64,
    omega_at_max_power: f64,
}

impl BsfcLine {
    pub(crate) fn build(p: &VehicleParams, n: usize) -> Self {
        let (w_star, prod) = max_speed_torque_product(&[&p.max_torque], p.omega_min, p.omega_max);
        let max_power = prod * RPM_TO_RAD_S;
        let n = n.max(2);
        let mut powers = Vec::with_capacity(n);
        let mut omegas = Vec::with_capacity(n);
        let mut torques = Vec::with_capacity(n);
        for k in 1..=n {
            let power = max_power * k as f64 / n as f64;
            let (t, w) = if k == n {
                (p.max_torque.eval(w_star), w_star)
            } else {
                optimal_point(p, power, w_star, max_power)
            };
            powers.push(power);
            omegas.push(w);
            torques.push(t);
        }

        // project onto speed: keep the top of vertical runs, drop any point
        // that would make speed decrease
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (&w, &t) in omegas.iter().zip(&torques) {
            match pts.last_mut() {
                Some(last) if (w - last.0).abs() <= 1e-9 * w => last.1 = last.1.max(t),
                Some(last) if w < last.0 => {}
                _ => pts.push((w, t)),
            }
        }
        let speed_end = pts.last().map(|p| p.0).unwrap_or(w_star);
        let by_speed = Table1D::new(&pts).expect("line points are increasing");
        Self {
            powers,
            omegas,
            torques,
            by_speed,
            speed_end,
            max_power,
            omega_at_max_power: w_star,
        }
    }

    /// Largest engine power deliverable within the speed limits [W].
    pub fn max_power(&self) -> f64 {
        self.max_power
    }

    /// Engine speed at which the largest power is delivered [RPM].
    pub fn omega_at_max_power(&self) -> f64 {
        self.omega_at_max_power
    }

    /// Tabulated `(P [W], ω [RPM], T [N·m])` points, by increasing power.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.powers
            .iter()
            .zip(&self.omegas)
            .zip(&self.torques)
            .map(|((&p, &w), &t)| (p, w, t))
    }

    /// Torque on the line at engine speed `omega`; full-load torque above
    /// the speed where the line meets the full-load curve.
    #[inline]
    pub(crate) fn torque_at_speed(&self, omega: f64, max_torque: &Table1D) -> f64 {
        let t_max = max_torque.eval(omega);
        if omega >= self.speed_end {
            t_max
        } else {
            self.by_speed.eval(omega).min(t_max)
        }
    }
}

/// Torque–speed pair with least fuel per unit of power at fixed power.
/// `power` must lie in `(0, max_power]`.
pub(crate) fn optimal_point(p: &VehicleParams, power: f64, w_star: f64, max_power: f64) -> (f64, f64) {
    if power >= max_power {
        return (p.max_torque.eval(w_star), w_star);
    }
    let c = RPM_TO_RAD_S;
    let margin = |w: f64| p.max_torque.eval(w) * c * w - power;

    // the feasible speed set is taken as the interval around the peak-power speed
    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if margin(mid) >= 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() <= 1e-12 * inside {
                break;
            }
        }
        inside
    };
    let lo = if margin(p.omega_min) >= 0.0 {
        p.omega_min
    } else {
        edge(w_star, p.omega_min)
    };
    let hi = if margin(p.omega_max) >= 0.0 {
        p.omega_max
    } else {
        edge(w_star, p.omega_max)
    };

    let cost = |w: f64| {
        let t = power / (c * w);
        if t > p.max_torque.eval(w) * (1.0 + 1e-12) {
            f64::INFINITY
        } else {
            fuel_poly(&p.fuel_coeffs, t, w)
        }
    };
    const SCAN: usize = 400;
    let step = (hi - lo) / SCAN as f64;
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..=SCAN {
        let f = cost(lo + step * i as f64);
        if f < best_f {
            best_f = f;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let (w, _) = golden_section(cost, a, b, 200);
    let t = (power / (c * w)).min(p.max_torque.eval(w));
    (t, w)
}
