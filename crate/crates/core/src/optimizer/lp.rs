use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOptions, SolveOutcome};
use serde::{Deserialize, Serialize};

use crate::model::{MilpModel, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped by the time budget before optimality was proven.
    IterationLimit,
    /// The simplex kernel broke down; see the diagnostic.
    Numerical,
}

/// Where the primal values sit relative to their bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub at_lower: usize,
    pub at_upper: usize,
    pub between: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// Column values; empty unless `status` is optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub basis: BasisSummary,
    pub diagnostic: Option<String>,
    pub elapsed: Duration,
}

const BOUND_TOL: f64 = 1e-9;

pub(crate) fn basis_summary(model: &MilpModel, values: &[f64]) -> BasisSummary {
    let mut summary = BasisSummary::default();
    for (v, &x) in model.variables.iter().zip(values) {
        if (x - v.lower).abs() <= BOUND_TOL {
            summary.at_lower += 1;
        } else if (x - v.upper).abs() <= BOUND_TOL {
            summary.at_upper += 1;
        } else {
            summary.between += 1;
        }
    }
    summary
}

/// Kernel problem for `model` with column bounds replaced by `bounds`.
/// Returns `None` when an empty row is violated by its right-hand side.
pub(crate) fn kernel_problem(
    model: &MilpModel,
    bounds: &[(f64, f64)],
) -> Option<(Problem, Vec<microlp::Variable>)> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let cols: Vec<microlp::Variable> = model
        .variables
        .iter()
        .zip(bounds)
        .map(|(v, &b)| problem.add_var(v.cost, b))
        .collect();
    for c in &model.constraints {
        let terms: Vec<(microlp::Variable, f64)> = c
            .terms
            .iter()
            .filter(|t| t.1 != 0.0)
            .map(|&(k, a)| (cols[k], a))
            .collect();
        if terms.is_empty() {
            let ok = match c.sense {
                Sense::Le => 0.0 <= c.rhs + BOUND_TOL,
                Sense::Ge => 0.0 >= c.rhs - BOUND_TOL,
                Sense::Eq => c.rhs.abs() <= BOUND_TOL,
            };
            if !ok {
                return None;
            }
            continue;
        }
        problem.add_constraint(terms, comparison(c.sense), c.rhs);
    }
    Some((problem, cols))
}

pub(crate) fn comparison(sense: Sense) -> ComparisonOp {
    match sense {
        Sense::Le => ComparisonOp::Le,
        Sense::Ge => ComparisonOp::Ge,
        Sense::Eq => ComparisonOp::Eq,
    }
}

/// Solves the continuous relaxation of `model` (integrality flags ignored).
pub fn solve_lp(model: &MilpModel) -> LpResult {
    solve_lp_with_limit(model, None)
}

pub fn solve_lp_with_limit(model: &MilpModel, time_limit: Option<Duration>) -> LpResult {
    let started = Instant::now();
    let bounds: Vec<(f64, f64)> = model.variables.iter().map(|v| (v.lower, v.upper)).collect();
    let mut result = LpResult {
        status: LpStatus::Infeasible,
        values: Vec::new(),
        objective: f64::INFINITY,
        basis: BasisSummary::default(),
        diagnostic: None,
        elapsed: Duration::ZERO,
    };
    if bounds.iter().any(|&(lo, hi)| lo > hi + BOUND_TOL) {
        result.diagnostic = Some("crossed column bounds".into());
        result.elapsed = started.elapsed();
        return result;
    }
    let Some((problem, cols)) = kernel_problem(model, &bounds) else {
        result.diagnostic = Some("empty row cannot be satisfied".into());
        result.elapsed = started.elapsed();
        return result;
    };
    let mut options = SolveOptions::default();
    options.time_limit = time_limit;
    match problem.solve_with(options) {
        Ok(SolveOutcome::Solution(sol)) => {
            let values: Vec<f64> = cols.iter().map(|&c| sol.var_value_raw(c)).collect();
            result.status = LpStatus::Optimal;
            result.objective = model.objective_value(&values);
            result.basis = basis_summary(model, &values);
            result.values = values;
        }
        Ok(SolveOutcome::Interrupted(_)) => result.status = LpStatus::IterationLimit,
        Err(microlp::Error::Infeasible) => result.status = LpStatus::Infeasible,
        Err(microlp::Error::Unbounded) => {
            result.status = LpStatus::Unbounded;
            result.objective = f64::NEG_INFINITY;
        }
        Err(e) => {
            result.status = LpStatus::Numerical;
            result.diagnostic = Some(e.to_string());
        }
    }
    result.elapsed = started.elapsed();
    result
}
