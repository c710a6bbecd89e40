//! Rounding of a relaxed transfer plan into an integral one.
//!
//! SKUs are rounded one at a time on the network built by
//! [`build_rounding_network`]. Arc costs favour movements whose packages
//! still have spare room, and a package of the cheapest type is added
//! whenever the rounded units no longer fit. The pass is repeated with
//! shuffled SKU orders and perturbed costs and the cheapest pass is kept.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Instance, ObjectiveTerms, Solution, SolverConfig};
use crate::error::{Error, Result};
use crate::mcf::{build_rounding_network, solve_min_cost_flow};
use crate::model::evaluate_objective;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingRunConfig {
    pub max_runs: usize,
    /// Consecutive runs without a new best cost before stopping.
    pub stall_limit: usize,
    /// Relative tolerance for "same cost as the relaxation".
    pub cost_match_tolerance: f64,
    /// Range of the per-arc multiplicative cost noise in runs after the first.
    pub perturbation: (f64, f64),
    pub rng_seed: u64,
}

impl Default for RoundingRunConfig {
    fn default() -> Self {
        Self {
            max_runs: 50,
            stall_limit: 5,
            cost_match_tolerance: 1e-6,
            perturbation: (0.8, 1.2),
            rng_seed: 0,
        }
    }
}

impl RoundingRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_runs == 0 {
            return Err(Error::InvalidConfig("max_runs must be at least 1".into()));
        }
        if self.stall_limit == 0 {
            return Err(Error::InvalidConfig("stall_limit must be at least 1".into()));
        }
        let (lo, hi) = self.perturbation;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(Error::InvalidConfig(format!(
                "perturbation range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        if !(self.cost_match_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("cost_match_tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingOutcome {
    /// Best integral plan found.
    pub solution: Solution,
    pub terms: ObjectiveTerms,
    pub runs: usize,
    /// Packages added on top of the relaxed `Y`, per run.
    pub packages_added: Vec<u64>,
    /// Objective of each run.
    pub run_costs: Vec<f64>,
    /// 0-based index of the run that produced `solution`.
    pub best_run: usize,
    /// Objective of the relaxed plan that was rounded.
    pub relaxed_cost: f64,
}

const MIN_AVERAGE_COST: f64 = 1e-9;

/// Rounding cost of every movement: minus the unused capacity of its
/// packages, in units of its average package cost. `x_so_far` holds the
/// units already rounded in the current pass.
pub fn rounding_costs(instance: &Instance, x_so_far: &[Vec<f64>], y: &[Vec<u64>]) -> Vec<f64> {
    (0..instance.n_movements())
        .map(|m| {
            let capacity: f64 = y[m]
                .iter()
                .zip(&instance.capacity)
                .map(|(&n, &c)| n as f64 * c)
                .sum();
            if capacity == 0.0 {
                return 0.0;
            }
            let used: f64 = x_so_far[m]
                .iter()
                .zip(&instance.weight)
                .map(|(&x, &w)| x * w)
                .sum();
            let average = instance.mean_package_cost(m).max(MIN_AVERAGE_COST);
            -(capacity - used) / average
        })
        .collect()
}

fn shipped_weight(instance: &Instance, x: &[f64]) -> f64 {
    x.iter().zip(&instance.weight).map(|(&x, &w)| x * w).sum()
}

fn shipped_capacity(instance: &Instance, y: &[u64]) -> f64 {
    y.iter().zip(&instance.capacity).map(|(&n, &c)| n as f64 * c).sum()
}

/// Adds cheapest packages to every overfull movement; returns how many.
fn add_packages(instance: &Instance, x: &[Vec<f64>], y: &mut [Vec<u64>]) -> Result<u64> {
    let mut added = 0;
    for m in 0..instance.n_movements() {
        let weight = shipped_weight(instance, &x[m]);
        if weight <= shipped_capacity(instance, &y[m]) + 1e-9 {
            continue;
        }
        let p = instance.cheapest_package(m).ok_or_else(|| {
            Error::InvalidInstance("a movement carries units but there are no package types".into())
        })?;
        if instance.capacity[p] <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "cheapest package type {p} has no capacity"
            )));
        }
        while weight > shipped_capacity(instance, &y[m]) + 1e-9 {
            y[m][p] += 1;
            added += 1;
        }
    }
    Ok(added)
}

struct Run {
    solution: Solution,
    added: u64,
    cost: f64,
}

fn one_run(
    instance: &Instance,
    relaxed: &Solution,
    order: &[usize],
    noise: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<Run> {
    let n_mov = instance.n_movements();
    let mut x = vec![vec![0.0; instance.n_skus()]; n_mov];
    let mut y = relaxed.y.clone();
    let mut added = 0;
    for &s in order {
        let mut c_hat = rounding_costs(instance, &x, &y);
        if let Some(noise) = noise {
            for (c, f) in c_hat.iter_mut().zip(noise) {
                *c *= f;
            }
        }
        let x_rel: Vec<f64> = relaxed.x.iter().map(|row| row[s]).collect();
        let net = build_rounding_network(instance.n_facilities(), &instance.movements, &x_rel, &c_hat);
        let flow = solve_min_cost_flow(&net.network)?;
        for (m, v) in net.transfers(&flow.flows).into_iter().enumerate() {
            x[m][s] = v as f64;
        }
        added += add_packages(instance, &x, &mut y)?;
    }
    let solution = Solution { x, y };
    let cost = evaluate_objective(instance, &solution, config).total;
    Ok(Run {
        solution,
        added,
        cost,
    })
}

/// Rounds `relaxed` (a plan of the relaxed model) into a plan that is
/// feasible for the transfer problem.
///
/// The first run takes SKUs by decreasing weight; later runs shuffle them
/// and perturb the arc costs. Stops after a run that adds no package and
/// matches the relaxed cost, after `stall_limit` runs without a new best,
/// or after `max_runs` runs.
pub fn round_all(
    instance: &Instance,
    relaxed: &Solution,
    config: &SolverConfig,
    run_config: &RoundingRunConfig,
) -> Result<RoundingOutcome> {
    run_config.validate()?;
    relaxed.check_shape(instance)?;
    let relaxed_cost = evaluate_objective(instance, relaxed, config).total;
    let mut rng = ChaCha8Rng::seed_from_u64(run_config.rng_seed);
    let mut order: Vec<usize> = (0..instance.n_skus()).collect();
    order.sort_by(|&a, &b| instance.weight[b].total_cmp(&instance.weight[a]).then(a.cmp(&b)));
    let (lo, hi) = run_config.perturbation;

    let mut best: Option<Run> = None;
    let mut best_run = 0;
    let mut packages_added = Vec::new();
    let mut run_costs = Vec::new();
    let mut stall = 0;
    for k in 0..run_config.max_runs {
        let noise: Option<Vec<f64>> = if k == 0 {
            None
        } else {
            order.shuffle(&mut rng);
            Some(
                (0..instance.n_movements())
                    .map(|_| if lo < hi { rng.gen_range(lo..hi) } else { lo })
                    .collect(),
            )
        };
        let run = one_run(instance, relaxed, &order, noise.as_deref(), config)?;
        packages_added.push(run.added);
        run_costs.push(run.cost);
        let matched = run.added == 0
            && run.cost - relaxed_cost <= run_config.cost_match_tolerance * relaxed_cost.abs().max(1.0);
        let improved = best.as_ref().is_none_or(|b| run.cost < b.cost);
        if improved {
            best = Some(run);
            best_run = k;
            stall = 0;
        } else {
            stall += 1;
        }
        if matched || stall >= run_config.stall_limit {
            break;
        }
    }
    let best = best.expect("at least one run");
    Ok(RoundingOutcome {
        terms: evaluate_objective(instance, &best.solution, config),
        solution: best.solution,
        runs: run_costs.len(),
        packages_added,
        run_costs,
        best_run,
        relaxed_cost,
    })
}
