//! Cost-to-go lower bound from an energy and time balance, tabulated over
//! stage and velocity.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cbrt, floor, golden_section, sqrt};
use crate::ocp::{terminal_cost, Weights};
use crate::route::Horizon;
use crate::vehicle::{Grade, Vehicle};

/// Per-horizon data needed to evaluate and minimise the cost-to-go bound.
#[derive(Debug, Clone)]
pub struct CostToGo {
    n: usize,
    ds: f64,
    mass: f64,
    /// ½ρ c_d A_f [kg/m]
    drag: f64,
    /// `w_f / (Q η_opt)` [1/J]
    fuel_per_joule: f64,
    w_time: f64,
    beta: f64,
    v_f: f64,
    /// Work of rolling and grade from stage `j` to the end [J], `n + 1` entries.
    static_work: Vec<f64>,
    /// Box for the mean velocity from stage `j` on, `n` entries.
    mean_lo: Vec<f64>,
    mean_hi: Vec<f64>,
    final_lo: f64,
    final_hi: f64,
}

impl CostToGo {
    /// `h` must carry the (tightened) bounds the box is derived from.
    pub fn new(veh: &Vehicle, h: &Horizon, w: Weights, beta: f64, v_f: f64) -> Self {
        let p = veh.params();
        let n = h.stages();
        let ds = h.ds;
        let mut static_work = vec![0.0; n + 1];
        for k in (0..n).rev() {
            let f = veh.resistance(0.0, &Grade::new(h.alpha[k]));
            static_work[k] = static_work[k + 1] + f * ds;
        }
        // mean of the stage midpoint speeds = trapezoid-weighted mean of nodes
        let mut mean_lo = vec![0.0; n];
        let mut mean_hi = vec![0.0; n];
        let (mut sum_lo, mut sum_hi) = (0.5 * h.v_min[n], 0.5 * h.v_max[n]);
        for j in (0..n).rev() {
            let stages = (n - j) as f64;
            mean_lo[j] = ((sum_lo + 0.5 * h.v_min[j]) / stages).max(1e-6);
            mean_hi[j] = ((sum_hi + 0.5 * h.v_max[j]) / stages).max(mean_lo[j]);
            sum_lo += h.v_min[j];
            sum_hi += h.v_max[j];
        }
        Self {
            n,
            ds,
            mass: p.mass,
            drag: 0.5 * p.air_density * p.drag_coefficient * p.frontal_area,
            fuel_per_joule: w.fuel / (p.fuel_energy * p.eta_opt),
            w_time: w.time,
            beta,
            v_f,
            static_work,
            mean_lo,
            mean_hi,
            final_lo: h.v_min[n],
            final_hi: h.v_max[n],
        }
    }

    pub fn stages(&self) -> usize {
        self.n
    }

    /// The bound `J` for a node at stage `j` with velocity `v_i`, given the
    /// mean velocity `v_mean` over the rest of the horizon and the final
    /// velocity `v_n`.
    pub fn evaluate(&self, j: usize, v_i: f64, v_mean: f64, v_n: f64) -> f64 {
        let dist = (self.n - j) as f64 * self.ds;
        let air = dist * self.drag * v_mean * v_mean;
        let de = 0.5 * self.mass * (v_n * v_n - v_i * v_i) + self.static_work[j] + air;
        self.fuel_per_joule * de.max(0.0) + self.w_time * dist / v_mean + terminal_cost(v_n, self.v_f, self.beta)
    }

    /// Minimum over the mean velocity for fixed `v_n`, in closed form.
    fn best_mean(&self, j: usize, v_i: f64, v_n: f64) -> f64 {
        let dist = (self.n - j) as f64 * self.ds;
        let a = 0.5 * self.mass * (v_n * v_n - v_i * v_i) + self.static_work[j];
        let c = dist * self.drag;
        let t = self.w_time * dist;
        // stationary point of K(a + c x²) + t/x
        let free = if c > 0.0 {
            cbrt(t / (2.0 * self.fuel_per_joule * c))
        } else {
            f64::INFINITY
        };
        // below the kink the energy term is clamped and only t/x remains
        let kink = if a < 0.0 && c > 0.0 {
            sqrt(-a / c)
        } else if a < 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        free.max(kink).clamp(self.mean_lo[j], self.mean_hi[j])
    }

    /// `h(j, v_i)`: minimum of the bound over the box. `+∞` if the box is
    /// empty.
    pub fn minimize(&self, j: usize, v_i: f64) -> f64 {
        if j >= self.n {
            return terminal_cost(v_i, self.v_f, self.beta);
        }
        if self.final_lo > self.final_hi || self.mean_lo[j] > self.mean_hi[j] {
            return f64::INFINITY;
        }
        let g = |v_n: f64| self.evaluate(j, v_i, self.best_mean(j, v_i, v_n), v_n);
        let (_, val) = golden_section(g, self.final_lo, self.final_hi, 120);
        val
    }

    /// Minimiser `(v_mean, v_n)` of the bound, for inspection.
    pub fn argmin(&self, j: usize, v_i: f64) -> (f64, f64) {
        let g = |v_n: f64| self.evaluate(j, v_i, self.best_mean(j, v_i, v_n), v_n);
        let (v_n, _) = golden_section(g, self.final_lo, self.final_hi, 120);
        (self.best_mean(j, v_i, v_n), v_n)
    }

    pub fn mean_box(&self, j: usize) -> (f64, f64) {
        (self.mean_lo[j], self.mean_hi[j])
    }
}

/// Cost-to-go bound tabulated on a stage × velocity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicLut {
    stages: usize,
    v0: f64,
    step: f64,
    n_v: usize,
    values: Vec<f64>,
}

impl HeuristicLut {
    /// Tabulates `h` for every stage `0..=N` on a velocity grid covering the
    /// bounds of `h_tight`. Grid points farther than one step outside the
    /// bounds of their stage hold `+∞`.
    pub fn build(veh: &Vehicle, h_tight: &Horizon, w: Weights, beta: f64, v_f: f64, step: f64) -> Self {
        let ctg = CostToGo::new(veh, h_tight, w, beta, v_f);
        let n = h_tight.stages();
        let lo = h_tight.v_min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = h_tight.v_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v0 = floor(lo / step) * step;
        let n_v = ((hi - v0) / step) as usize + 2;
        let mut values = vec![f64::INFINITY; (n + 1) * n_v];
        for j in 0..=n {
            let (a, b) = (h_tight.v_min[j] - step, h_tight.v_max[j] + step);
            for k in 0..n_v {
                let v = v0 + k as f64 * step;
                if v >= a && v <= b && v > 0.0 {
                    values[j * n_v + k] = ctg.minimize(j, v);
                }
            }
        }
        Self {
            stages: n,
            v0,
            step,
            n_v,
            values,
        }
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Grid velocities.
    pub fn velocities(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_v).map(move |k| self.v0 + k as f64 * self.step)
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n_v + k]
    }

    /// `(stage, velocity, h)` for every grid point.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..=self.stages).flat_map(move |j| {
            (0..self.n_v).map(move |k| (j, self.v0 + k as f64 * self.step, self.entry(j, k)))
        })
    }

    /// Conservative lookup: the smaller of the two grid values bracketing
    /// `v`, or `+∞` off the grid.
    #[inline]
    pub fn sample(&self, j: usize, v: f64) -> f64 {
        let x = (v - self.v0) / self.step;
        if !(x >= 0.0) || j > self.stages {
            return f64::INFINITY;
        }
        let k = x as usize;
        if k >= self.n_v {
            return f64::INFINITY;
        }
        let at = self.v0 + k as f64 * self.step;
        let row = &self.values[j * self.n_v..(j + 1) * self.n_v];
        if at == v || k + 1 == self.n_v {
            if at == v {
                return row[k];
            }
            return f64::INFINITY;
        }
        row[k].min(row[k + 1])
    }
}

#[cfg(test)]
mod tests;
