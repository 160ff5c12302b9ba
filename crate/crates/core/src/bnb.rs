//! Level-wise bounded breadth-first branch-and-bound over mode–gear
//! sequences, with greedy depth probing and velocity-bin elimination.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::SolveError;
use crate::heuristic::HeuristicLut;
use crate::math::floor;
use crate::ocp::{evaluate_sequence, expand_within, terminal_cost, ExpandScratch, Transition, Weights};
use crate::route::Horizon;
use crate::vehicle::{Grade, ModeGear, Vehicle};
use crate::warmstart::WarmStartResult;

/// Source of "time is up" for the anytime search.
pub trait Deadline {
    fn expired(&mut self) -> bool;
}

/// Never expires.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDeadline;

impl Deadline for NoDeadline {
    fn expired(&mut self) -> bool {
        false
    }
}

/// Already expired: the solver returns the warm start untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Expired;

impl Deadline for Expired {
    fn expired(&mut self) -> bool {
        true
    }
}

/// Expires after a fixed number of checks; deterministic stand-in for a
/// clock in tests.
#[derive(Debug, Clone, Copy)]
pub struct CheckBudget(pub u64);

impl Deadline for CheckBudget {
    fn expired(&mut self) -> bool {
        if self.0 == 0 {
            true
        } else {
            self.0 -= 1;
            false
        }
    }
}

/// Hook called for every node the search branches.
pub trait SearchObserver {
    fn expanded(&mut self, stage: usize, v: f64, g: f64, h: f64);
}

impl SearchObserver for () {
    fn expanded(&mut self, _: usize, _: f64, _: f64, _: f64) {}
}

/// One optimisation problem over a horizon.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub vehicle: &'a Vehicle,
    /// Horizon carrying the tightened speed bounds.
    pub horizon: &'a Horizon,
    pub v0: f64,
    pub v_f: f64,
    pub weights: Weights,
    pub beta: f64,
    pub epsilon: f64,
}

impl Problem<'_> {
    pub fn stages(&self) -> usize {
        self.horizon.stages()
    }
}

/// A search node. `parent` indexes the arena; the root has none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub stage: usize,
    pub v: f64,
    pub mg: ModeGear,
    pub g: f64,
    pub h: f64,
    pub parent: Option<u32>,
}

impl Node {
    #[inline]
    pub fn lb(&self) -> f64 {
        self.g + self.h
    }
}

/// Ordering used for every sort: bound, then velocity, then mode and gear.
fn by_bound(a: &Node, b: &Node) -> Ordering {
    a.lb()
        .total_cmp(&b.lb())
        .then(a.v.total_cmp(&b.v))
        .then(a.mg.cmp(&b.mg))
}

/// Why the search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// All levels processed.
    Completed,
    /// Every branch was pruned before the last stage.
    Exhausted,
    /// The deadline expired.
    TimeLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Exhausted => "exhausted",
            Termination::TimeLimit => "time_limit",
        }
    }
}

/// Where the returned sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionSource {
    WarmStart,
    Probe,
    Search,
}

impl SolutionSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SolutionSource::WarmStart => "warm_start",
            SolutionSource::Probe => "probe",
            SolutionSource::Search => "search",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    /// Nodes branched, including along probes.
    pub expanded: u64,
    /// Children generated (feasible and inside the bounds).
    pub children: u64,
    /// Mode–gear combinations rejected by the vehicle model or the bounds.
    pub eliminated_feasibility: u64,
    /// Children discarded because their bound reached the incumbent.
    pub eliminated_bound: u64,
    /// Children merged away by velocity binning.
    pub eliminated_binning: u64,
    pub probes: u64,
    pub ub_updates: u64,
    /// Deepest stage at which a node existed.
    pub deepest_stage: usize,
    /// Largest number of nodes in a frontier.
    pub max_frontier: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub sequence: Vec<ModeGear>,
    pub velocities: Vec<f64>,
    /// Objective value of the sequence (the final upper bound).
    pub cost: f64,
    pub fuel: f64,
    pub time: f64,
    pub source: SolutionSource,
    pub termination: Termination,
    pub stats: SolveStats,
}

struct Search<'a, 'p> {
    pb: &'a Problem<'p>,
    lut: &'a HeuristicLut,
    grades: Vec<Grade>,
    n_combos: u64,
    arena: Vec<Node>,
    scratch: ExpandScratch,
    moves: Vec<Transition>,
    ub: f64,
    best: Option<(Vec<ModeGear>, SolutionSource)>,
    stats: SolveStats,
    checks: u32,
}

impl<'a, 'p> Search<'a, 'p> {
    fn new(pb: &'a Problem<'p>, lut: &'a HeuristicLut) -> Self {
        let n_gears = pb.vehicle.n_gears();
        Self {
            pb,
            lut,
            grades: pb.horizon.alpha.iter().map(|&a| Grade::new(a)).collect(),
            n_combos: ModeGear::all(n_gears).count() as u64,
            arena: Vec::new(),
            scratch: ExpandScratch::default(),
            moves: Vec::new(),
            ub: f64::INFINITY,
            best: None,
            stats: SolveStats::default(),
            checks: 0,
        }
    }

    fn path_to(&self, mut idx: Option<u32>, tail: &[ModeGear]) -> Vec<ModeGear> {
        let mut seq = Vec::with_capacity(self.pb.stages());
        while let Some(i) = idx {
            let node = &self.arena[i as usize];
            if node.stage == 0 {
                break;
            }
            seq.push(node.mg);
            idx = node.parent;
        }
        seq.reverse();
        seq.extend_from_slice(tail);
        seq
    }

    /// Children of `node` inside the bounds, bound-pruned against the
    /// incumbent. Leaves carry the exact terminal cost as `h`.
    fn branch(&mut self, node: &Node, parent: Option<u32>, obs: &mut dyn SearchObserver, out: &mut Vec<Node>) {
        let pb = self.pb;
        let k = node.stage;
        let n = pb.stages();
        obs.expanded(k, node.v, node.g, node.h);
        self.stats.expanded += 1;
        expand_within(
            pb.vehicle,
            node.v,
            &self.grades[k],
            pb.horizon.ds,
            pb.weights,
            (pb.horizon.v_min[k + 1], pb.horizon.v_max[k + 1]),
            &mut self.scratch,
            &mut self.moves,
        );
        let kept = self.moves.len() as u64;
        for t in &self.moves {
            let g = node.g + t.cost.weighted;
            let h = if k + 1 == n {
                terminal_cost(t.v_next, pb.v_f, pb.beta)
            } else {
                self.lut.sample(k + 1, t.v_next)
            };
            if g + h >= self.ub {
                self.stats.eliminated_bound += 1;
                continue;
            }
            out.push(Node {
                stage: k + 1,
                v: t.v_next,
                mg: t.mg,
                g,
                h,
                parent,
            });
        }
        self.stats.children += kept;
        self.stats.eliminated_feasibility += self.n_combos - kept;
    }

    fn offer(&mut self, cost: f64, seq: impl FnOnce(&Self) -> Vec<ModeGear>, source: SolutionSource) {
        if cost < self.ub {
            self.ub = cost;
            self.best = Some((seq(self), source));
            self.stats.ub_updates += 1;
        }
    }

    /// Follows the lowest-bound child down to the last stage.
    fn probe(&mut self, first: Node, obs: &mut dyn SearchObserver) {
        self.stats.probes += 1;
        let n = self.pb.stages();
        let mut node = first;
        let mut tail = Vec::with_capacity(n - first.stage);
        tail.push(first.mg);
        let mut level = Vec::new();
        while node.stage < n {
            level.clear();
            self.branch(&node, None, obs, &mut level);
            let Some(next) = level.iter().min_by(|a, b| by_bound(a, b)).copied() else {
                return;
            };
            if next.lb() >= self.ub {
                return;
            }
            tail.push(next.mg);
            node = next;
        }
        let parent = first.parent;
        self.offer(node.g + node.h, |s| s.path_to(parent, &tail), SolutionSource::Probe);
    }

    fn deadline_hit(&mut self, deadline: &mut dyn Deadline) -> bool {
        self.checks = self.checks.wrapping_add(1);
        self.checks % 64 == 0 && deadline.expired()
    }
}

/// Keeps one node per velocity bin of width `epsilon` (bit-identical
/// velocities for `epsilon = 0`): the one with the lowest accumulated cost,
/// ties broken by bound, velocity, mode and gear. Survivors keep their
/// input order.
pub fn context_eliminate(nodes: &[Node], v_min: f64, epsilon: f64) -> Vec<Node> {
    let better = |x: &Node, y: &Node| x.g.total_cmp(&y.g).then_with(|| by_bound(x, y)) == Ordering::Less;
    let mut keep = alloc::vec![false; nodes.len()];
    let bins = |v: f64| floor((v - v_min) / epsilon);
    let hi = nodes.iter().map(|n| n.v).fold(f64::NEG_INFINITY, f64::max);
    let lo = nodes.iter().map(|n| n.v).fold(f64::INFINITY, f64::min);
    let span = if epsilon > 0.0 { bins(hi) - bins(lo) } else { f64::INFINITY };
    if span.is_finite() && span < 4.0 * nodes.len() as f64 + 1024.0 {
        // direct table over the occupied bin range
        let first = bins(lo);
        let mut best: Vec<Option<usize>> = alloc::vec![None; span as usize + 1];
        for (i, n) in nodes.iter().enumerate() {
            let slot = &mut best[(bins(n.v) - first) as usize];
            match *slot {
                Some(j) if !better(n, &nodes[j]) => {}
                _ => *slot = Some(i),
            }
        }
        for i in best.into_iter().flatten() {
            keep[i] = true;
        }
    } else {
        let key = |v: f64| -> i64 {
            if epsilon > 0.0 {
                bins(v) as i64
            } else {
                v.to_bits() as i64
            }
        };
        let mut order: Vec<(i64, usize)> = nodes.iter().enumerate().map(|(i, n)| (key(n.v), i)).collect();
        order.sort_by(|a, b| {
            a.0.cmp(&b.0).then_with(|| {
                let (x, y) = (&nodes[a.1], &nodes[b.1]);
                x.g.total_cmp(&y.g).then_with(|| by_bound(x, y))
            })
        });
        let mut last = None;
        for &(bin, i) in &order {
            if last != Some(bin) {
                keep[i] = true;
                last = Some(bin);
            }
        }
    }
    nodes
        .iter()
        .zip(keep)
        .filter_map(|(n, k)| k.then_some(*n))
        .collect()
}

/// Children of `node` with bound below `ub`, in expansion order.
pub fn branch(pb: &Problem, lut: &HeuristicLut, node: &Node, ub: f64) -> Vec<Node> {
    let mut s = Search::new(pb, lut);
    s.ub = ub;
    let mut out = Vec::new();
    s.branch(node, None, &mut (), &mut out);
    out
}

/// Root node of a problem.
pub fn root(pb: &Problem, lut: &HeuristicLut) -> Node {
    Node {
        stage: 0,
        v: pb.v0,
        mg: ModeGear::ECO_ROLL,
        g: 0.0,
        h: lut.sample(0, pb.v0),
        parent: None,
    }
}

/// Runs the search. `warm` seeds the incumbent; `deadline` is polled at every
/// level and every 64 branched nodes.
pub fn solve(
    pb: &Problem,
    lut: &HeuristicLut,
    warm: &WarmStartResult,
    deadline: &mut dyn Deadline,
    obs: &mut dyn SearchObserver,
) -> Result<SolveResult, SolveError> {
    let n = pb.stages();
    let mut s = Search::new(pb, lut);
    if warm.ub.is_finite() && warm.sequence.len() == n {
        s.ub = warm.ub;
        s.best = Some((warm.sequence.clone(), SolutionSource::WarmStart));
    }
    s.arena.push(root(pb, lut));
    let mut frontier: Vec<u32> = alloc::vec![0];
    let mut children: Vec<Node> = Vec::new();
    let mut termination = Termination::Completed;

    'levels: for k in 0..n {
        if deadline.expired() {
            termination = Termination::TimeLimit;
            break;
        }
        // single-level bounded breadth-first search
        children.clear();
        for &idx in &frontier {
            if s.deadline_hit(deadline) {
                termination = Termination::TimeLimit;
                break 'levels;
            }
            let node = s.arena[idx as usize];
            if node.lb() >= s.ub && k > 0 {
                s.stats.eliminated_bound += 1;
                continue;
            }
            s.branch(&node, Some(idx), obs, &mut children);
        }
        if !children.is_empty() {
            s.stats.deepest_stage = k + 1;
        }
        if k + 1 == n {
            // leaves: the bound is the exact cost
            if let Some(best) = children.iter().min_by(|a, b| by_bound(a, b)).copied() {
                let tail = [best.mg];
                s.offer(best.lb(), |s| s.path_to(best.parent, &tail), SolutionSource::Search);
            }
            break;
        }
        if children.is_empty() {
            termination = Termination::Exhausted;
            break;
        }
        let best = *children.iter().min_by(|a, b| by_bound(a, b)).expect("nonempty");
        s.probe(best, obs);
        let before = children.len();
        let ub = s.ub;
        children.retain(|c| c.lb() < ub);
        s.stats.eliminated_bound += (before - children.len()) as u64;
        let mut survivors = context_eliminate(&children, pb.horizon.v_min[k + 1], pb.epsilon);
        survivors.sort_by(by_bound);
        s.stats.eliminated_binning += (children.len() - survivors.len()) as u64;
        s.stats.max_frontier = s.stats.max_frontier.max(survivors.len());
        frontier.clear();
        for node in survivors {
            frontier.push(s.arena.len() as u32);
            s.arena.push(node);
        }
        if frontier.is_empty() {
            termination = Termination::Exhausted;
            break;
        }
    }

    let stats = s.stats;
    let Some((sequence, source)) = s.best else {
        return Err(SolveError::Infeasible {
            deepest_stage: stats.deepest_stage,
        });
    };
    let eval = evaluate_sequence(
        pb.vehicle,
        pb.horizon,
        pb.v0,
        &sequence,
        pb.weights,
        pb.v_f,
        pb.beta,
        false,
    )
    .expect("incumbent sequences are feasible by construction");
    Ok(SolveResult {
        sequence,
        velocities: eval.velocities,
        cost: s.ub,
        fuel: eval.fuel,
        time: eval.time,
        source,
        termination,
        stats,
    })
}
