use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, SolveOptions, SolveOutcome};
use serde::{Deserialize, Serialize};

use super::lp::kernel_problem;
use crate::model::{MilpModel, Sense};

/// Stopping rules for [`solve_milp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: u64,
    /// Relative gap `(incumbent - bound) / max(1, |incumbent|)` at which the
    /// incumbent counts as optimal.
    pub gap: f64,
    pub int_tol: f64,
    /// Stop after this many improving incumbents.
    pub solution_limit: Option<usize>,
    /// Open nodes that keep a copy of their parent's factorized LP for a
    /// warm restart; the rest re-solve from scratch. `None` sizes the pool
    /// from the model dimensions.
    pub warm_start_nodes: Option<usize>,
}

impl Default for MilpLimits {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: 1_000_000,
            gap: 1e-6,
            int_tol: 1e-6,
            solution_limit: None,
            warm_start_nodes: None,
        }
    }
}

impl MilpLimits {
    pub fn with_time_limit(time_limit: Option<Duration>) -> Self {
        Self {
            time_limit,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    /// An incumbent exists but a limit stopped the search before the gap closed.
    Feasible,
    Infeasible,
    /// A time or node limit was reached before any incumbent was found.
    TimeLimitNoIncumbent,
    Unbounded,
}

impl MilpStatus {
    pub fn has_incumbent(self) -> bool {
        matches!(self, MilpStatus::Optimal | MilpStatus::Feasible)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub nodes: u64,
    pub elapsed: Duration,
    pub bound: f64,
    pub incumbent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Incumbent column values, integer columns snapped.
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    pub nodes: u64,
    pub elapsed: Duration,
    pub first_incumbent_time: Option<Duration>,
    pub trace: Vec<TracePoint>,
    /// Nodes dropped because the LP kernel failed on them; nonzero values
    /// mean optimality was not proven.
    pub numerical_failures: u64,
}

impl MilpResult {
    pub fn gap(&self) -> Option<f64> {
        self.objective
            .map(|inc| ((inc - self.best_bound) / inc.abs().max(1.0)).max(0.0))
    }
}

/// Bound tightenings from the root to a node, shared between siblings.
struct PathStep {
    col: usize,
    upper: bool,
    value: f64,
    parent: Option<Rc<PathStep>>,
}

struct Node {
    id: u64,
    bound: f64,
    path: Option<Rc<PathStep>>,
    warm: Option<Rc<microlp::Solution>>,
}

struct Best(Node);

impl PartialEq for Best {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Best {}
impl PartialOrd for Best {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Best {
    // Max-heap: the smallest bound, then the smallest id, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then(other.0.id.cmp(&self.0.id))
    }
}

enum NodeLp {
    Solved(Rc<microlp::Solution>, Vec<f64>),
    Infeasible,
    Unbounded,
    TimedOut,
    Failed,
}

struct Search<'a> {
    model: &'a MilpModel,
    root_bounds: Vec<(f64, f64)>,
    deadline: Option<Instant>,
    /// Kernel column handles; every kernel problem creates its columns in
    /// model order, so these are valid for all of them.
    cols: Vec<microlp::Variable>,
}

impl Search<'_> {
    fn remaining(&self) -> Option<Duration> {
        self.deadline
            .map(|d| d.saturating_duration_since(Instant::now()).max(Duration::from_millis(1)))
    }

    fn bounds_for(&self, path: &Option<Rc<PathStep>>) -> Vec<(f64, f64)> {
        let mut bounds = self.root_bounds.clone();
        let mut step = path.as_deref();
        while let Some(s) = step {
            let b = &mut bounds[s.col];
            if s.upper {
                b.1 = b.1.min(s.value);
            } else {
                b.0 = b.0.max(s.value);
            }
            step = s.parent.as_deref();
        }
        bounds
    }

    fn solve_cold(&self, path: &Option<Rc<PathStep>>) -> NodeLp {
        let bounds = self.bounds_for(path);
        if bounds.iter().any(|&(lo, hi)| lo > hi) {
            return NodeLp::Infeasible;
        }
        let Some((problem, _)) = kernel_problem(self.model, &bounds) else {
            return NodeLp::Infeasible;
        };
        let mut options = SolveOptions::default();
        options.time_limit = self.remaining();
        self.finish(problem.solve_with(options))
    }

    fn solve_warm(&self, warm: Rc<microlp::Solution>, step: &PathStep) -> NodeLp {
        let sol = Rc::try_unwrap(warm).unwrap_or_else(|rc| (*rc).clone());
        let op = if step.upper {
            ComparisonOp::Le
        } else {
            ComparisonOp::Ge
        };
        self.finish(sol.add_constraint([(self.cols[step.col], 1.0)], op, step.value))
    }

    fn finish(&self, outcome: Result<SolveOutcome, microlp::Error>) -> NodeLp {
        match outcome {
            Ok(SolveOutcome::Solution(sol)) => {
                let values = self.cols.iter().map(|&c| sol.var_value_raw(c)).collect();
                NodeLp::Solved(Rc::new(sol), values)
            }
            Ok(SolveOutcome::Interrupted(_)) => NodeLp::TimedOut,
            Err(microlp::Error::Infeasible) => NodeLp::Infeasible,
            Err(microlp::Error::Unbounded) => NodeLp::Unbounded,
            Err(_) => NodeLp::Failed,
        }
    }
}

/// Most fractional integer column, ties to the lowest index.
fn branching_column(model: &MilpModel, values: &[f64], int_tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (k, v) in model.variables.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let x = values[k];
        let frac = x - x.floor();
        let dist = frac.min(1.0 - frac);
        if dist > int_tol && best.is_none_or(|b| dist > b.2) {
            best = Some((k, x, dist));
        }
    }
    best.map(|(k, x, _)| (k, x))
}

fn snap(model: &MilpModel, values: &mut [f64]) {
    for (v, x) in model.variables.iter().zip(values.iter_mut()) {
        if v.integer {
            *x = x.round();
        }
        *x = x.clamp(v.lower, v.upper);
    }
}

const INCUMBENT_TOL: f64 = 1e-5;

/// Per integer column, whether raising (`.0`) or lowering (`.1`) it can
/// violate some row.
fn rounding_locks(model: &MilpModel) -> Vec<(bool, bool)> {
    let mut locks = vec![(false, false); model.n_vars()];
    for c in &model.constraints {
        for &(k, a) in &c.terms {
            if a == 0.0 {
                continue;
            }
            let (up, down) = match c.sense {
                Sense::Le => (a > 0.0, a < 0.0),
                Sense::Ge => (a < 0.0, a > 0.0),
                Sense::Eq => (true, true),
            };
            locks[k].0 |= up;
            locks[k].1 |= down;
        }
    }
    locks
}

/// Rounds every fractional integer column in a direction no row objects
/// to. `None` when some column is locked both ways or the result breaks a
/// bound.
fn simple_rounding(
    model: &MilpModel,
    locks: &[(bool, bool)],
    values: &[f64],
    int_tol: f64,
) -> Option<Vec<f64>> {
    let mut out = values.to_vec();
    for (k, v) in model.variables.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let x = values[k];
        if (x - x.round()).abs() <= int_tol {
            out[k] = x.round();
            continue;
        }
        out[k] = match locks[k] {
            (false, _) => x.ceil(),
            (true, false) => x.floor(),
            (true, true) => return None,
        };
    }
    (model.max_violation(&out) <= INCUMBENT_TOL).then_some(out)
}

/// Branch-and-bound over the integer columns of `model`.
///
/// Branches on the most fractional integer column. Dives depth-first,
/// taking the up branch first, until the first incumbent is found, then
/// switches to best-bound order. Node LPs are re-optimized from a copy of
/// the parent's final simplex state when one is available. Fractional node
/// solutions are also tried with lock-based rounding as a source of
/// incumbents.
pub fn solve_milp(model: &MilpModel, limits: &MilpLimits) -> MilpResult {
    let started = Instant::now();
    let mut handles = microlp::Problem::new(microlp::OptimizationDirection::Minimize);
    let search = Search {
        model,
        root_bounds: model.variables.iter().map(|v| (v.lower, v.upper)).collect(),
        deadline: limits.time_limit.map(|t| started + t),
        cols: (0..model.n_vars()).map(|_| handles.add_var(0.0, (0.0, 0.0))).collect(),
    };
    let locks = rounding_locks(model);
    let warm_budget = limits
        .warm_start_nodes
        .unwrap_or_else(|| (4_000_000 / (model.n_vars() + model.n_constraints() + 1)).clamp(4, 20_000));

    let mut result = MilpResult {
        status: MilpStatus::Infeasible,
        values: None,
        objective: None,
        best_bound: f64::NEG_INFINITY,
        nodes: 0,
        elapsed: Duration::ZERO,
        first_incumbent_time: None,
        trace: Vec::new(),
        numerical_failures: 0,
    };

    let mut dive: Vec<Node> = Vec::new();
    let mut heap: BinaryHeap<Best> = BinaryHeap::new();
    let mut warm_open = 0usize;
    let mut next_id = 1u64;
    let mut incumbents = 0usize;
    let mut limit_hit = false;
    let mut pending: Option<Node> = Some(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        path: None,
        warm: None,
    });

    let cutoff = |inc: Option<f64>| inc.map(|v| v - limits.gap * v.abs().max(1.0));

    loop {
        let node = match pending.take() {
            Some(n) => n,
            None => {
                let next = if result.objective.is_none() {
                    dive.pop()
                } else {
                    heap.pop().map(|b| b.0)
                };
                match next {
                    Some(n) => n,
                    None => break,
                }
            }
        };
        if node.warm.is_some() {
            warm_open -= 1;
        }
        if let Some(c) = cutoff(result.objective) {
            if node.bound >= c {
                continue;
            }
        }
        let over_time = search.deadline.is_some_and(|d| Instant::now() >= d);
        if over_time || result.nodes >= limits.node_limit {
            limit_hit = true;
            heap.push(Best(Node { warm: None, ..node }));
            break;
        }
        result.nodes += 1;

        let lp = match (&node.warm, &node.path) {
            (Some(_), Some(step)) => {
                let warm = node.warm.clone().unwrap();
                match search.solve_warm(warm, step) {
                    NodeLp::Failed => search.solve_cold(&node.path),
                    other => other,
                }
            }
            _ => search.solve_cold(&node.path),
        };
        let (sol, mut values) = match lp {
            NodeLp::Solved(sol, values) => (sol, values),
            NodeLp::Infeasible => continue,
            NodeLp::Unbounded => {
                if node.path.is_none() {
                    result.status = MilpStatus::Unbounded;
                    result.elapsed = started.elapsed();
                    return result;
                }
                continue;
            }
            NodeLp::TimedOut => {
                limit_hit = true;
                heap.push(Best(Node { warm: None, ..node }));
                break;
            }
            NodeLp::Failed => {
                result.numerical_failures += 1;
                continue;
            }
        };
        let objective = model.objective_value(&values);
        if node.path.is_none() {
            result.best_bound = objective;
        }
        if let Some(c) = cutoff(result.objective) {
            if objective >= c {
                continue;
            }
        }

        let branch = branching_column(model, &values, limits.int_tol);
        let candidate = match branch {
            None => {
                snap(model, &mut values);
                if model.max_violation(&values) > INCUMBENT_TOL {
                    result.numerical_failures += 1;
                    continue;
                }
                Some(values)
            }
            Some(_) => simple_rounding(model, &locks, &values, limits.int_tol),
        };
        if let Some(values) = candidate {
            let value = model.objective_value(&values);
            if result.objective.is_none_or(|inc| value < inc) {
                let first = result.objective.is_none();
                result.objective = Some(value);
                result.values = Some(values);
                incumbents += 1;
                if first {
                    result.first_incumbent_time = Some(started.elapsed());
                    while let Some(n) = dive.pop() {
                        heap.push(Best(n));
                    }
                }
                let bound = open_bound(&dive, &heap, value);
                result.trace.push(TracePoint {
                    nodes: result.nodes,
                    elapsed: started.elapsed(),
                    bound,
                    incumbent: result.objective,
                });
                if limits.solution_limit.is_some_and(|k| incumbents >= k) {
                    limit_hit = true;
                    if branch.is_some() {
                        heap.push(Best(Node {
                            id: next_id,
                            bound: objective,
                            path: node.path.clone(),
                            warm: None,
                        }));
                    }
                    break;
                }
            }
        }

        match branch {
            None => {}
            Some(_) if cutoff(result.objective).is_some_and(|c| objective >= c) => {}
            Some((col, x)) => {
                let down = Rc::new(PathStep {
                    col,
                    upper: true,
                    value: x.floor(),
                    parent: node.path.clone(),
                });
                let up = Rc::new(PathStep {
                    col,
                    upper: false,
                    value: x.ceil(),
                    parent: node.path.clone(),
                });
                let (first, second) = (up, down);
                let mut children = Vec::with_capacity(2);
                let diving = result.objective.is_none();
                for (i, path) in [second, first].into_iter().enumerate() {
                    // The dive child is solved next, so its parent state is
                    // never held for long.
                    let keep = warm_open < warm_budget || (diving && i == 1);
                    let warm = keep.then(|| {
                        warm_open += 1;
                        sol.clone()
                    });
                    children.push(Node {
                        id: next_id,
                        bound: objective,
                        path: Some(path),
                        warm,
                    });
                    next_id += 1;
                }
                drop(sol);
                if result.objective.is_none() {
                    dive.extend(children);
                } else {
                    heap.extend(children.into_iter().map(Best));
                }
            }
        }
        if result.nodes % 64 == 0 {
            let bound = open_bound(&dive, &heap, result.objective.unwrap_or(f64::INFINITY));
            result.trace.push(TracePoint {
                nodes: result.nodes,
                elapsed: started.elapsed(),
                bound,
                incumbent: result.objective,
            });
        }
    }

    let exhausted = !limit_hit && dive.is_empty() && heap.is_empty();
    let proven = result.numerical_failures == 0;
    result.elapsed = started.elapsed();
    match result.objective {
        Some(inc) => {
            let bound = if exhausted && proven {
                inc
            } else {
                open_bound(&dive, &heap, inc).max(result.best_bound).min(inc)
            };
            result.best_bound = bound;
            let gap_closed = (inc - bound) / inc.abs().max(1.0) <= limits.gap;
            result.status = if (exhausted && proven) || gap_closed {
                MilpStatus::Optimal
            } else {
                MilpStatus::Feasible
            };
        }
        None => {
            if exhausted {
                result.status = MilpStatus::Infeasible;
                result.best_bound = f64::INFINITY;
            } else {
                result.status = MilpStatus::TimeLimitNoIncumbent;
                result.best_bound = open_bound(&dive, &heap, f64::INFINITY).max(result.best_bound);
            }
        }
    }
    result.trace.push(TracePoint {
        nodes: result.nodes,
        elapsed: result.elapsed,
        bound: result.best_bound,
        incumbent: result.objective,
    });
    result
}

fn open_bound(dive: &[Node], heap: &BinaryHeap<Best>, fallback: f64) -> f64 {
    let from_heap = heap.peek().map(|b| b.0.bound).unwrap_or(f64::INFINITY);
    dive.iter()
        .map(|n| n.bound)
        .fold(from_heap, f64::min)
        .min(fallback)
}
