//! Route data, resampling onto the solver grid, and speed-bound tightening.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::RouteError;
use crate::math::sqrt;
use crate::vehicle::{Grade, Vehicle};

/// One record of a route: from `s` on, until the next record, the grade and
/// speed limits are constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutePoint {
    /// Distance from the origin [m].
    pub s: f64,
    /// Road grade [rad].
    pub alpha: f64,
    /// Lower speed limit [m/s].
    pub v_min: f64,
    /// Upper speed limit [m/s].
    pub v_max: f64,
}

/// A validated route with piecewise-constant data. The last point marks the
/// end of the route; its values apply only at `s = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteProfile {
    points: Vec<RoutePoint>,
    pub name: String,
    pub source: String,
}

impl RouteProfile {
    pub fn new(points: Vec<RoutePoint>) -> Result<Self, RouteError> {
        if points.len() < 2 {
            return Err(RouteError::TooShort);
        }
        for (i, p) in points.iter().enumerate() {
            let finite = p.s.is_finite() && p.alpha.is_finite() && p.v_min.is_finite() && p.v_max.is_finite();
            if !finite || p.v_min < 0.0 || p.v_max <= 0.0 {
                return Err(RouteError::InvalidValue { index: i });
            }
            if p.v_min > p.v_max {
                return Err(RouteError::BoundsInverted {
                    index: i,
                    v_min: p.v_min,
                    v_max: p.v_max,
                });
            }
            let ok = if i == 0 { p.s == 0.0 } else { p.s > points[i - 1].s };
            if !ok {
                return Err(RouteError::NotIncreasing { index: i });
            }
        }
        Ok(Self {
            points,
            name: String::new(),
            source: String::new(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn points(&self) -> &[RoutePoint] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.points[self.points.len() - 1].s
    }

    /// Index of the record in force at distance `s`.
    pub fn index_at(&self, s: f64) -> usize {
        self.points.partition_point(|p| p.s <= s).saturating_sub(1)
    }

    pub fn at(&self, s: f64) -> &RoutePoint {
        &self.points[self.index_at(s)]
    }

    /// Tightest limits over `[a, b)`: largest `v_min` and smallest `v_max` of
    /// every record overlapping the interval. For `a == b` the record at `a`.
    pub fn bounds_over(&self, a: f64, b: f64) -> (f64, f64) {
        let first = self.index_at(a);
        let mut lo = self.points[first].v_min;
        let mut hi = self.points[first].v_max;
        for p in &self.points[first + 1..] {
            if p.s >= b {
                break;
            }
            lo = lo.max(p.v_min);
            hi = hi.min(p.v_max);
        }
        (lo, hi)
    }

    /// Samples an `n`-stage horizon of step `ds` starting at `s0`. The grade
    /// of a stage is taken at its midpoint; the limits at node `i` are the
    /// tightest ones over the stage `[s_i, s_i + ds)` that starts there (the
    /// final node uses the record at its position).
    pub fn resample(&self, s0: f64, n: usize, ds: f64) -> Result<Horizon, RouteError> {
        let end = s0 + n as f64 * ds;
        let length = self.length();
        if end > length * (1.0 + 1e-12) || s0 < 0.0 {
            return Err(RouteError::HorizonExceedsRoute { end, length });
        }
        let mut alpha = Vec::with_capacity(n);
        let mut v_min = Vec::with_capacity(n + 1);
        let mut v_max = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let si = s0 + i as f64 * ds;
            let (lo, hi) = if i < n {
                alpha.push(self.at(si + 0.5 * ds).alpha);
                self.bounds_over(si, si + ds)
            } else {
                self.bounds_over(si.min(length), si.min(length))
            };
            v_min.push(lo);
            v_max.push(hi);
        }
        Ok(Horizon {
            s0,
            ds,
            alpha,
            v_min,
            v_max,
        })
    }
}

/// Route data sampled on the solver grid: `n` stages, `n + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Horizon {
    pub s0: f64,
    pub ds: f64,
    /// Grade per stage, `n` entries [rad].
    pub alpha: Vec<f64>,
    /// Lower speed bound per node, `n + 1` entries [m/s].
    pub v_min: Vec<f64>,
    /// Upper speed bound per node, `n + 1` entries [m/s].
    pub v_max: Vec<f64>,
}

impl Horizon {
    /// Horizon with constant data, mostly for tests and examples.
    pub fn constant(n: usize, ds: f64, alpha: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            s0: 0.0,
            ds,
            alpha: alloc::vec![alpha; n],
            v_min: alloc::vec![v_min; n + 1],
            v_max: alloc::vec![v_max; n + 1],
        }
    }

    pub fn stages(&self) -> usize {
        self.alpha.len()
    }

    pub fn contains(&self, node: usize, v: f64) -> bool {
        v >= self.v_min[node] && v <= self.v_max[node]
    }
}

/// Absolute slack added when moving a bound, so that repeated passes settle.
const SLACK: f64 = 1e-9;

/// Ideal one-stage velocity envelopes at a fixed grade: the largest and
/// smallest next velocity any driving mode can produce from `v`.
///
/// The acceleration side applies the peak engine power, the deceleration
/// side the peak braking power of friction plus engine brake, both through
/// the final-drive efficiency only. The inertial mass is chosen per sign so
/// that every mode's forward-Euler step stays inside the envelope.
#[derive(Debug, Clone, Copy)]
pub struct SpeedEnvelope {
    ds: f64,
    drag: f64,
    static_force: f64,
    drive: f64,
    brake: f64,
    masses: [f64; 2],
    /// Critical points of the upper map, per mass.
    upper_crit: [Option<f64>; 2],
    /// Critical points of the lower map, per mass.
    lower_crit: [[Option<f64>; 2]; 2],
}

impl SpeedEnvelope {
    pub fn new(veh: &Vehicle, alpha: f64, ds: f64) -> Self {
        let p = veh.params();
        let grade = Grade::new(alpha);
        let static_force = veh.resistance(0.0, &grade);
        let drag = 0.5 * p.air_density * p.drag_coefficient * p.frontal_area;
        let drive = p.final_drive_efficiency * veh.max_power();
        let brake = p.final_drive_efficiency * veh.max_brake_power();
        let rw = p.wheel_radius;
        let masses = [p.mass, p.mass + veh.max_inertia() / (rw * rw)];
        let mut upper_crit = [None; 2];
        let mut lower_crit = [[None; 2]; 2];
        for (k, &m) in masses.iter().enumerate() {
            let kk = m / ds - drag;
            // upper: v + ds(drive - F v)/(M v²) has derivative sign of K v³ + b v - 2·drive
            upper_crit[k] = positive_cubic_roots(kk, static_force, -2.0 * drive)[0];
            // lower: derivative sign of K v³ + b v + 2·brake
            lower_crit[k] = positive_cubic_roots(kk, static_force, 2.0 * brake);
        }
        Self {
            ds,
            drag,
            static_force,
            drive,
            brake,
            masses,
            upper_crit,
            lower_crit,
        }
    }

    #[inline]
    fn force(&self, v: f64) -> f64 {
        self.drag * v * v + self.static_force
    }

    fn upper_with(&self, k: usize, v: f64) -> f64 {
        v + self.ds * (self.drive - self.force(v) * v) / (self.masses[k] * v * v)
    }

    fn lower_with(&self, k: usize, v: f64) -> f64 {
        v - self.ds * (self.brake + self.force(v) * v) / (self.masses[k] * v * v)
    }

    /// Largest next velocity reachable from `v` in one stage.
    pub fn upper(&self, v: f64) -> f64 {
        self.upper_with(0, v).max(self.upper_with(1, v))
    }

    /// Smallest next velocity reachable from `v` in one stage.
    pub fn lower(&self, v: f64) -> f64 {
        self.lower_with(0, v).min(self.lower_with(1, v))
    }

    /// `[lo, hi]` split at the critical points of one map.
    fn pieces(lo: f64, hi: f64, crit: &[Option<f64>]) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = Vec::with_capacity(4);
        cuts.push(lo);
        for c in crit.iter().flatten() {
            if *c > lo && *c < hi {
                cuts.push(*c);
            }
        }
        cuts.push(hi);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Supremum of [`SpeedEnvelope::upper`] over `[lo, hi]`.
    pub fn sup_upper(&self, lo: f64, hi: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for k in 0..2 {
            for (a, b) in Self::pieces(lo, hi, &self.upper_crit[k..k + 1]) {
                best = best.max(self.upper_with(k, a)).max(self.upper_with(k, b));
            }
        }
        best
    }

    /// Infimum of [`SpeedEnvelope::lower`] over `[lo, hi]`.
    pub fn inf_lower(&self, lo: f64, hi: f64) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..2 {
            for (a, b) in Self::pieces(lo, hi, &self.lower_crit[k]) {
                best = best.min(self.lower_with(k, a)).min(self.lower_with(k, b));
            }
        }
        best
    }

    /// Largest `v` in `[lo, hi]` whose lower map does not exceed `cap`.
    pub fn last_below(&self, lo: f64, hi: f64, cap: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for k in 0..2 {
            let f = |v: f64| self.lower_with(k, v) <= cap;
            for (a, b) in Self::pieces(lo, hi, &self.lower_crit[k]).into_iter().rev() {
                let x = if f(b) {
                    Some(b)
                } else if f(a) {
                    Some(bisect_edge(a, b, f))
                } else {
                    None
                };
                if let Some(x) = x {
                    best = Some(best.map_or(x, |y| y.max(x)));
                    break;
                }
            }
        }
        best
    }

    /// Smallest `v` in `[lo, hi]` whose upper map reaches `floor`.
    pub fn first_above(&self, lo: f64, hi: f64, floor: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for k in 0..2 {
            let f = |v: f64| self.upper_with(k, v) >= floor;
            for (a, b) in Self::pieces(lo, hi, &self.upper_crit[k..k + 1]) {
                let x = if f(a) {
                    Some(a)
                } else if f(b) {
                    Some(bisect_edge(b, a, f))
                } else {
                    None
                };
                if let Some(x) = x {
                    best = Some(best.map_or(x, |y| y.min(x)));
                    break;
                }
            }
        }
        best
    }
}

/// Given `pred(inside)` true and `pred(outside)` false, returns a point with
/// `pred` true within round-off of the switch.
fn bisect_edge(mut inside: f64, mut outside: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Positive roots of `k v³ + b v + d` for `k > 0`, ascending.
fn positive_cubic_roots(k: f64, b: f64, d: f64) -> [Option<f64>; 2] {
    let f = |v: f64| k * v * v * v + b * v + d;
    let grow = |mut lo: f64| {
        let mut hi = lo.max(1.0);
        while f(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        (lo, hi)
    };
    // f(neg) <= 0 < f(pos)
    let root = |neg: f64, pos: f64| bisect_edge(neg, pos, |v| f(v) <= 0.0);
    if b >= 0.0 {
        if d < 0.0 {
            let (lo, hi) = grow(0.0);
            return [Some(root(lo, hi)), None];
        }
        return [None, None];
    }
    let vstar = sqrt(-b / (3.0 * k));
    if f(vstar) >= 0.0 {
        return [None, None];
    }
    let (lo, hi) = grow(vstar);
    let second = root(lo, hi);
    if d > 0.0 {
        [Some(root(vstar, 0.0)), Some(second)]
    } else {
        [Some(second), None]
    }
}

/// Narrows the speed bounds to what the ideal envelopes can actually reach
/// from the start and still leave feasible at the end. The result lies
/// inside the input and is a fixpoint (tightening it again changes nothing).
pub fn tighten_bounds(h: &Horizon, veh: &Vehicle) -> Result<Horizon, RouteError> {
    let n = h.stages();
    let envs: Vec<SpeedEnvelope> = h
        .alpha
        .iter()
        .map(|&a| SpeedEnvelope::new(veh, a, h.ds))
        .collect();
    let mut lo: Vec<f64> = h.v_min.iter().map(|&v| v.max(1e-6)).collect();
    let mut hi = h.v_max.clone();
    for i in 0..=n {
        if lo[i] > hi[i] {
            return Err(RouteError::InfeasibleBounds { stage: i });
        }
    }
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let e = &envs[i];
            let up = e.sup_upper(lo[i], hi[i]) + SLACK;
            let down = e.inf_lower(lo[i], hi[i]) - SLACK;
            if up < hi[i + 1] {
                hi[i + 1] = up;
                changed = true;
            }
            if down > lo[i + 1] {
                lo[i + 1] = down;
                changed = true;
            }
            if lo[i + 1] > hi[i + 1] {
                return Err(RouteError::InfeasibleBounds { stage: i + 1 });
            }
        }
        for i in (0..n).rev() {
            let e = &envs[i];
            let cap = hi[i + 1] + SLACK;
            match e.last_below(lo[i], hi[i], cap) {
                Some(v) if v < hi[i] => {
                    hi[i] = v;
                    changed = true;
                }
                Some(_) => {}
                None => return Err(RouteError::InfeasibleBounds { stage: i }),
            }
            let floor = lo[i + 1] - SLACK;
            match e.first_above(lo[i], hi[i], floor) {
                Some(v) if v > lo[i] => {
                    lo[i] = v;
                    changed = true;
                }
                Some(_) => {}
                None => return Err(RouteError::InfeasibleBounds { stage: i }),
            }
        }
        if !changed {
            break;
        }
    }
    // the 1e-6 floor only guards the envelope maps; keep the caller's zero
    for (l, &raw) in lo.iter_mut().zip(&h.v_min) {
        if *l == 1e-6 && raw < 1e-6 {
            *l = raw;
        }
    }
    Ok(Horizon {
        s0: h.s0,
        ds: h.ds,
        alpha: h.alpha.clone(),
        v_min: lo,
        v_max: hi,
    })
}

#[cfg(test)]
mod tests;
