//! Feasible starting sequences that seed the search with an upper bound.

use alloc::vec::Vec;

use crate::bnb::Problem;
use crate::ocp::{evaluate_sequence, expand_transitions, ExpandScratch, Transition};
use crate::vehicle::{Grade, ModeGear};

/// A feasible sequence and its cost, or an empty sequence with `ub = +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartResult {
    pub sequence: Vec<ModeGear>,
    pub velocities: Vec<f64>,
    pub ub: f64,
}

impl WarmStartResult {
    pub fn infeasible() -> Self {
        Self {
            sequence: Vec::new(),
            velocities: Vec::new(),
            ub: f64::INFINITY,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.ub.is_finite()
    }
}

pub trait WarmStartGenerator {
    fn generate(&self, pb: &Problem) -> WarmStartResult;
}

/// Splits `v_max` (one entry per node) into runs of equal value. Each run
/// yields `(last node, value)`; the final event is `(N, v_f)`.
pub fn segment_events(v_max: &[f64], v_f: f64) -> Vec<(usize, f64)> {
    let mut events = Vec::new();
    let n = v_max.len().saturating_sub(1);
    for i in 0..n {
        if v_max[i] != v_max[i + 1] {
            events.push((i, v_max[i]));
        }
    }
    events.push((n, v_f));
    events
}

/// Tracks the speed limit plateaus, braking in time for every drop.
///
/// A backward pass finds, per node, the highest speed from which the
/// strongest available mode still reaches the next node's braking limit.
/// The forward pass then picks, stage by stage, the move landing closest to
/// `min(v_max, braking limit)`; moves within `band` of the closest are
/// compared by stage cost.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeWarmStart {
    pub band: f64,
}

impl Default for EnvelopeWarmStart {
    fn default() -> Self {
        Self { band: 0.02 }
    }
}

fn min_next(pb: &Problem, v: f64, grade: &Grade, scratch: &mut ExpandScratch, out: &mut Vec<Transition>) -> f64 {
    expand_transitions(pb.vehicle, v, grade, pb.horizon.ds, pb.weights, scratch, out);
    out.iter().map(|t| t.v_next).fold(f64::INFINITY, f64::min)
}

impl EnvelopeWarmStart {
    /// Highest speed per node from which braking keeps the rest of the
    /// horizon below its targets.
    pub fn braking_limit(&self, pb: &Problem) -> Vec<f64> {
        let h = pb.horizon;
        let n = h.stages();
        let mut scratch = ExpandScratch::default();
        let mut out = Vec::new();
        let mut b = alloc::vec![0.0; n + 1];
        b[n] = pb.v_f.clamp(h.v_min[n], h.v_max[n]);
        for k in (0..n).rev() {
            let grade = Grade::new(h.alpha[k]);
            let (lo, hi) = (h.v_min[k], h.v_max[k]);
            let mut reaches = |v: f64| min_next(pb, v, &grade, &mut scratch, &mut out) <= b[k + 1];
            b[k] = if reaches(hi) {
                hi
            } else if !reaches(lo) {
                lo
            } else {
                let (mut a, mut c) = (lo, hi);
                for _ in 0..40 {
                    let m = 0.5 * (a + c);
                    if reaches(m) {
                        a = m;
                    } else {
                        c = m;
                    }
                }
                a
            };
        }
        b
    }
}

impl WarmStartGenerator for EnvelopeWarmStart {
    fn generate(&self, pb: &Problem) -> WarmStartResult {
        let h = pb.horizon;
        let n = h.stages();
        let limit = self.braking_limit(pb);
        let mut scratch = ExpandScratch::default();
        let mut moves = Vec::new();
        let mut seq = Vec::with_capacity(n);
        let mut v = pb.v0;
        for k in 0..n {
            let grade = Grade::new(h.alpha[k]);
            expand_transitions(pb.vehicle, v, &grade, h.ds, pb.weights, &mut scratch, &mut moves);
            let target = h.v_max[k + 1].min(limit[k + 1]);
            let inside = |t: &&Transition| h.contains(k + 1, t.v_next);
            let safe = |t: &&Transition| t.v_next <= limit[k + 1];
            let pool: Vec<&Transition> = if moves.iter().filter(inside).any(|t| safe(&t)) {
                moves.iter().filter(inside).filter(safe).collect()
            } else {
                moves.iter().filter(inside).collect()
            };
            let Some(closest) = pool.iter().map(|t| (t.v_next - target).abs()).reduce(f64::min) else {
                return WarmStartResult::infeasible();
            };
            let pick = pool
                .iter()
                .filter(|t| (t.v_next - target).abs() <= closest + self.band)
                .min_by(|a, b| a.cost.weighted.total_cmp(&b.cost.weighted).then(a.mg.cmp(&b.mg)))
                .expect("pool holds the closest move");
            seq.push(pick.mg);
            v = pick.v_next;
        }
        match evaluate_sequence(pb.vehicle, h, pb.v0, &seq, pb.weights, pb.v_f, pb.beta, true) {
            Ok(eval) if eval.cost.is_finite() => WarmStartResult {
                sequence: seq,
                velocities: eval.velocities,
                ub: eval.cost,
            },
            _ => WarmStartResult::infeasible(),
        }
    }
}
