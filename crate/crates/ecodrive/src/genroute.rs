//! Synthetic routes with the structural features that matter to the solver:
//! grade changes, speed-limit steps and stop events.
//!
//! Placement rules (all positions are multiples of [`GRID`]):
//!
//! - Open road is limited to [80 km/h] with a lower limit of [60 km/h].
//! - `hill`: 500 m flat lead-in, then segments of 400..1200 m whose grades
//!   alternate in sign with magnitude 1..4 %, ending with 500 m flat.
//! - `stops`: flat road with a stop every 2500..3500 m (first one after
//!   1500..2500 m, none in the last 1250 m). A stop is a 50 m window limited
//!   to 5..10 km/h, and the lower limit drops to 10 km/h from 1000 m before
//!   to 1000 m after the window.
//! - `mixed`: the `hill` grade profile, a 60 km/h zone (lower limit 40 km/h)
//!   of 1000..1500 m starting near a third of the route, and one stop placed
//!   near two thirds of the route on a flattened section.
//!
//! [80 km/h]: V_MAX
//! [60 km/h]: V_MIN

use ecodrive_core::{RoutePoint, RouteProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Placement grid [m].
pub const GRID: f64 = 25.0;
pub const V_MAX: f64 = 80.0 / 3.6;
pub const V_MIN: f64 = 60.0 / 3.6;
pub const ZONE_V_MAX: f64 = 60.0 / 3.6;
pub const ZONE_V_MIN: f64 = 40.0 / 3.6;
pub const STOP_V_MAX: f64 = 10.0 / 3.6;
pub const STOP_V_MIN: f64 = 5.0 / 3.6;
pub const STOP_WINDOW: f64 = 50.0;
pub const STOP_APPROACH: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RouteKind {
    Flat,
    Hill,
    Stops,
    Mixed,
}

impl RouteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RouteKind::Flat => "flat",
            RouteKind::Hill => "hill",
            RouteKind::Stops => "stops",
            RouteKind::Mixed => "mixed",
        }
    }
}

/// Piecewise-constant layer over `[0, length)`: sorted breakpoints with the
/// value in force from each.
struct Layer(Vec<(f64, f64)>);

impl Layer {
    fn constant(v: f64) -> Self {
        Layer(vec![(0.0, v)])
    }

    fn at(&self, s: f64) -> f64 {
        let i = self.0.partition_point(|&(x, _)| x <= s);
        self.0[i.saturating_sub(1)].1
    }

    /// Sets `value` on `[a, b)`, keeping what lies outside.
    fn paint(&mut self, a: f64, b: f64, value: f64) {
        let after = self.at(b);
        self.0.retain(|&(x, _)| x < a || x > b);
        self.0.push((a, value));
        self.0.push((b, after));
        self.0.sort_by(|x, y| x.0.total_cmp(&y.0));
    }

    fn breaks(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|p| p.0)
    }
}

fn snap(x: f64) -> f64 {
    (x / GRID).round() * GRID
}

fn grades(rng: &mut ChaCha8Rng, length: f64) -> Layer {
    let mut layer = Layer::constant(0.0);
    let lead = 500.0_f64.min(length / 4.0);
    let mut s = snap(lead);
    let mut sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    while s < length - lead {
        let seg = snap(rng.gen_range(400.0..1200.0)).min(snap(length - lead) - s);
        if seg < GRID {
            break;
        }
        let percent: f64 = rng.gen_range(1.0..4.0);
        let alpha = (sign * percent / 100.0).atan();
        layer.paint(s, s + seg, (alpha * 1e5).round() / 1e5);
        sign = -sign;
        s += seg;
    }
    layer
}

fn add_stop(v_min: &mut Layer, v_max: &mut Layer, at: f64) {
    v_min.paint(at - STOP_APPROACH, at + STOP_WINDOW + STOP_APPROACH, STOP_V_MAX);
    v_min.paint(at, at + STOP_WINDOW, STOP_V_MIN);
    v_max.paint(at, at + STOP_WINDOW, STOP_V_MAX);
}

/// Deterministic synthetic route of `length` metres (rounded to the grid).
pub fn generate(kind: RouteKind, length: f64, seed: u64) -> RouteProfile {
    let length = snap(length).max(2.0 * GRID);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha = Layer::constant(0.0);
    let mut v_min = Layer::constant(V_MIN);
    let mut v_max = Layer::constant(V_MAX);
    match kind {
        RouteKind::Flat => {}
        RouteKind::Hill => alpha = grades(&mut rng, length),
        RouteKind::Stops => {
            let mut at = snap(rng.gen_range(1500.0..2500.0));
            while at + STOP_WINDOW + 1250.0 <= length {
                add_stop(&mut v_min, &mut v_max, at);
                at += snap(rng.gen_range(2500.0..3500.0));
            }
        }
        RouteKind::Mixed => {
            alpha = grades(&mut rng, length);
            let zone_start = snap(length / 3.0 + rng.gen_range(-250.0..250.0));
            let zone_len = snap(rng.gen_range(1000.0..1500.0));
            v_max.paint(zone_start, zone_start + zone_len, ZONE_V_MAX);
            v_min.paint(zone_start, zone_start + zone_len, ZONE_V_MIN);
            let stop = snap(2.0 * length / 3.0 + rng.gen_range(-250.0..250.0));
            if stop + STOP_WINDOW + 1250.0 <= length && stop - STOP_APPROACH > 0.0 {
                alpha.paint(stop - 200.0, stop + STOP_WINDOW + 200.0, 0.0);
                add_stop(&mut v_min, &mut v_max, stop);
            }
        }
    }
    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(alpha.breaks())
        .chain(v_min.breaks())
        .chain(v_max.breaks())
        .filter(|&s| s >= 0.0 && s < length)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut pts: Vec<RoutePoint> = Vec::with_capacity(breaks.len() + 1);
    for s in breaks.into_iter().chain(std::iter::once(length)) {
        let at = if s < length { s } else { s - GRID };
        let p = RoutePoint {
            s,
            alpha: alpha.at(at),
            v_min: v_min.at(at),
            v_max: v_max.at(at),
        };
        // drop records that repeat the one in force
        if let Some(last) = pts.last() {
            if s < length && (last.alpha, last.v_min, last.v_max) == (p.alpha, p.v_min, p.v_max) {
                continue;
            }
        }
        pts.push(p);
    }
    RouteProfile::new(pts)
        .expect("generated routes are valid")
        .with_name(kind.as_str())
        .with_source(format!("genroute {} {} {}", kind.as_str(), length, seed))
}
