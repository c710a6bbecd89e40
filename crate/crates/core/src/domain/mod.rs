//! Core data model: instances, movement policies, solver settings, solutions.
//!
//! Facilities, SKUs and package types are dense 0-based indices in file
//! order. Per-facility matrices (`initial_stock`, `fixed_demand`, ...) are
//! stored row-major as `[facility][sku]`; warehouse rows of the outlet-only
//! parameters must be zero. Per-movement data (`cost`, `Solution::x`,
//! `Solution::y`) follow the order of `Instance::movements`.

mod dimensions;
mod io;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dimensions::{model_dimensions, DimensionReport, SetSizes};
pub use io::{InstanceFile, SolutionFile};

/// Directed movement `from -> to` between two facilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Movement {
    pub from: usize,
    pub to: usize,
}

impl Movement {
    pub fn new(from: usize, to: usize) -> Self {
        Self { from, to }
    }
}

/// Which facility pairs may exchange stock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MovementPolicy {
    /// Every movement touches a warehouse; no lateral transshipment.
    #[serde(rename = "CR")]
    Centralized,
    /// No outlet -> warehouse movements.
    #[serde(rename = "DR")]
    Decentralized,
    /// All ordered pairs without self-loops.
    #[serde(rename = "GR")]
    General,
}

impl MovementPolicy {
    pub const ALL: [MovementPolicy; 3] = [
        MovementPolicy::Centralized,
        MovementPolicy::Decentralized,
        MovementPolicy::General,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            MovementPolicy::Centralized => "CR",
            MovementPolicy::Decentralized => "DR",
            MovementPolicy::General => "GR",
        }
    }

    fn allows(self, from_is_warehouse: bool, to_is_warehouse: bool) -> bool {
        match self {
            MovementPolicy::Centralized => from_is_warehouse || to_is_warehouse,
            MovementPolicy::Decentralized => !to_is_warehouse,
            MovementPolicy::General => true,
        }
    }
}

impl fmt::Display for MovementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for MovementPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CR" => Ok(MovementPolicy::Centralized),
            "DR" => Ok(MovementPolicy::Decentralized),
            "GR" => Ok(MovementPolicy::General),
            other => Err(Error::InvalidConfig(format!(
                "unknown movement policy '{other}' (expected CR, DR or GR)"
            ))),
        }
    }
}

/// Movement set of `policy` over facilities `0..n_facilities`, in row-major
/// `(from, to)` order.
pub fn movements_for_policy(
    n_facilities: usize,
    warehouses: &[usize],
    policy: MovementPolicy,
) -> Result<Vec<Movement>> {
    if n_facilities == 0 {
        return Err(Error::InvalidInstance("facility set is empty".into()));
    }
    if warehouses.is_empty() {
        return Err(Error::InvalidInstance("warehouse set is empty".into()));
    }
    let mut is_warehouse = vec![false; n_facilities];
    for &w in warehouses {
        if w >= n_facilities {
            return Err(Error::InvalidInstance(format!(
                "warehouse index {w} out of range for {n_facilities} facilities"
            )));
        }
        is_warehouse[w] = true;
    }
    let mut out = Vec::new();
    for from in 0..n_facilities {
        for to in 0..n_facilities {
            if from != to && policy.allows(is_warehouse[from], is_warehouse[to]) {
                out.push(Movement::new(from, to));
            }
        }
    }
    Ok(out)
}

/// Which outflow limit applies to outlets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SendRule {
    /// Outlets only ship stock in excess of their own fixed demand.
    #[default]
    ExcessOnly,
    /// Outlets may ship up to their whole initial stock.
    UpToStock,
}

impl FromStr for SendRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "excess_only" => Ok(SendRule::ExcessOnly),
            "up_to_stock" => Ok(SendRule::UpToStock),
            other => Err(Error::InvalidConfig(format!(
                "unknown send rule '{other}' (expected excess_only or up_to_stock)"
            ))),
        }
    }
}

impl fmt::Display for SendRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SendRule::ExcessOnly => "excess_only",
            SendRule::UpToStock => "up_to_stock",
        })
    }
}

/// Objective weights and run settings shared by every solution scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Weight on unmet variable demand.
    pub alpha: f64,
    /// Weight on the number of transferred units; keeps useless transfers out.
    pub epsilon: f64,
    /// Fraction of package capacity usable by the relaxed model.
    pub delta: f64,
    pub send_rule: SendRule,
    pub time_limit: Option<Duration>,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            epsilon: 1e-4,
            delta: 1.0,
            send_rule: SendRule::ExcessOnly,
            time_limit: Some(Duration::from_secs(300)),
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be finite and nonnegative, got {}",
                self.alpha
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        check_delta(self.delta)
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "delta must lie in (0, 1], got {delta}"
        )))
    }
}

/// A redistribution problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    pub facilities: Vec<String>,
    /// Facility indices of the warehouses, ascending.
    pub warehouses: Vec<usize>,
    pub skus: Vec<String>,
    pub package_types: Vec<String>,
    pub movements: Vec<Movement>,
    /// `[facility][sku]`
    pub initial_stock: Vec<Vec<i64>>,
    /// `[facility][sku]`, zero on warehouses.
    pub fixed_demand: Vec<Vec<i64>>,
    /// `[facility][sku]`, zero on warehouses.
    pub variable_demand: Vec<Vec<i64>>,
    /// `[facility][sku]` in `[0, 1]`, zero on warehouses.
    pub priority: Vec<Vec<f64>>,
    /// Per SKU.
    pub weight: Vec<f64>,
    /// Per package type.
    pub capacity: Vec<f64>,
    /// `[movement][package type]`
    pub cost: Vec<Vec<f64>>,
}

impl Instance {
    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    pub fn n_skus(&self) -> usize {
        self.skus.len()
    }

    pub fn n_packages(&self) -> usize {
        self.package_types.len()
    }

    pub fn n_movements(&self) -> usize {
        self.movements.len()
    }

    pub fn is_warehouse(&self, facility: usize) -> bool {
        self.warehouses.contains(&facility)
    }

    pub fn outlets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_facilities()).filter(move |&i| !self.is_warehouse(i))
    }

    pub fn n_outlets(&self) -> usize {
        self.n_facilities() - self.warehouses.len()
    }

    /// Network-wide stock of `sku`.
    pub fn sku_stock(&self, sku: usize) -> i64 {
        self.initial_stock.iter().map(|row| row[sku]).sum()
    }

    pub fn total_stock(&self) -> i64 {
        (0..self.n_skus()).map(|s| self.sku_stock(s)).sum()
    }

    /// Index of movement `(from, to)`, if present.
    pub fn movement_index(&self, from: usize, to: usize) -> Option<usize> {
        self.movements
            .iter()
            .position(|m| m.from == from && m.to == to)
    }

    pub fn set_sizes(&self) -> SetSizes {
        SetSizes {
            facilities: self.n_facilities(),
            warehouses: self.warehouses.len(),
            skus: self.n_skus(),
            packages: self.n_packages(),
            movements: self.n_movements(),
        }
    }

    /// Mean package cost on movement `m` over all package types.
    pub fn mean_package_cost(&self, m: usize) -> f64 {
        let row = &self.cost[m];
        if row.is_empty() {
            0.0
        } else {
            row.iter().sum::<f64>() / row.len() as f64
        }
    }

    /// Cheapest package type on movement `m`; ties go to the lower index.
    pub fn cheapest_package(&self, m: usize) -> Option<usize> {
        let row = &self.cost[m];
        (0..row.len()).min_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)))
    }

    /// Copy restricted to the movements of `policy`. Costs of retained
    /// movements are carried over unchanged.
    pub fn with_policy(&self, policy: MovementPolicy) -> Result<Instance> {
        let movements = movements_for_policy(self.n_facilities(), &self.warehouses, policy)?;
        let mut cost = Vec::with_capacity(movements.len());
        for mv in &movements {
            let m = self.movement_index(mv.from, mv.to).ok_or_else(|| {
                Error::InvalidInstance(format!(
                    "movement ({}, {}) required by {policy} has no cost data",
                    mv.from, mv.to
                ))
            })?;
            cost.push(self.cost[m].clone());
        }
        Ok(Instance {
            movements,
            cost,
            ..self.clone()
        })
    }

    /// Multiplies the package costs of every movement that starts or ends at
    /// a warehouse by `factor`.
    pub fn scale_warehouse_costs(&mut self, factor: f64) {
        for (m, mv) in self.movements.iter().enumerate() {
            if self.warehouses.contains(&mv.from) || self.warehouses.contains(&mv.to) {
                for c in &mut self.cost[m] {
                    *c *= factor;
                }
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One problem found by [`validate_instance`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyFacilities,
    FacilityOutOfRange { from: usize, to: usize },
    SelfLoop { facility: usize },
    DuplicateMovement { from: usize, to: usize },
    NegativeStock { facility: usize, sku: usize, value: i64 },
    NegativeDemand { facility: usize, sku: usize, value: i64 },
    WarehouseDemand { facility: usize, sku: usize },
    PriorityOutOfRange { facility: usize, sku: usize, value: f64 },
    NegativeWeight { sku: usize, value: f64 },
    NonPositiveCapacity { package: usize, value: f64 },
    NegativeCost { movement: usize, package: usize, value: f64 },
    AggregateInfeasible { sku: usize, stock: i64, fixed_demand: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyFacilities => write!(f, "empty facility set"),
            Violation::FacilityOutOfRange { from, to } => {
                write!(f, "movement ({from}, {to}) references an unknown facility")
            }
            Violation::SelfLoop { facility } => write!(f, "self-loop at facility {facility}"),
            Violation::DuplicateMovement { from, to } => {
                write!(f, "duplicate movement ({from}, {to})")
            }
            Violation::NegativeStock {
                facility,
                sku,
                value,
            } => write!(f, "negative stock {value} at facility {facility}, sku {sku}"),
            Violation::NegativeDemand {
                facility,
                sku,
                value,
            } => write!(f, "negative demand {value} at facility {facility}, sku {sku}"),
            Violation::WarehouseDemand { facility, sku } => write!(
                f,
                "warehouse {facility} carries outlet-only data for sku {sku}"
            ),
            Violation::PriorityOutOfRange {
                facility,
                sku,
                value,
            } => write!(
                f,
                "priority {value} outside [0, 1] at facility {facility}, sku {sku}"
            ),
            Violation::NegativeWeight { sku, value } => {
                write!(f, "negative weight {value} for sku {sku}")
            }
            Violation::NonPositiveCapacity { package, value } => {
                write!(f, "non-positive capacity {value} for package type {package}")
            }
            Violation::NegativeCost {
                movement,
                package,
                value,
            } => write!(
                f,
                "negative cost {value} on movement {movement}, package type {package}"
            ),
            Violation::AggregateInfeasible {
                sku,
                stock,
                fixed_demand,
            } => write!(
                f,
                "aggregate infeasibility for sku {sku}: fixed demand {fixed_demand} exceeds network stock {stock}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks value domains and per-SKU aggregate feasibility.
///
/// Matrix shapes are assumed consistent (they are enforced when an instance
/// is read from a file). Whether stock can actually reach the outlets that
/// need it under the movement set is left to the solver.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let nf = instance.n_facilities();
    if nf == 0 {
        violations.push(Violation::EmptyFacilities);
    }
    let mut seen = std::collections::HashSet::new();
    for mv in &instance.movements {
        if mv.from >= nf || mv.to >= nf {
            violations.push(Violation::FacilityOutOfRange {
                from: mv.from,
                to: mv.to,
            });
        }
        if mv.from == mv.to {
            violations.push(Violation::SelfLoop { facility: mv.from });
        }
        if !seen.insert(*mv) {
            violations.push(Violation::DuplicateMovement {
                from: mv.from,
                to: mv.to,
            });
        }
    }
    for i in 0..nf {
        let warehouse = instance.is_warehouse(i);
        for s in 0..instance.n_skus() {
            let stock = instance.initial_stock[i][s];
            if stock < 0 {
                violations.push(Violation::NegativeStock {
                    facility: i,
                    sku: s,
                    value: stock,
                });
            }
            for value in [instance.fixed_demand[i][s], instance.variable_demand[i][s]] {
                if value < 0 {
                    violations.push(Violation::NegativeDemand {
                        facility: i,
                        sku: s,
                        value,
                    });
                }
            }
            let pi = instance.priority[i][s];
            if !(0.0..=1.0).contains(&pi) {
                violations.push(Violation::PriorityOutOfRange {
                    facility: i,
                    sku: s,
                    value: pi,
                });
            }
            if warehouse
                && (instance.fixed_demand[i][s] != 0
                    || instance.variable_demand[i][s] != 0
                    || pi != 0.0)
            {
                violations.push(Violation::WarehouseDemand { facility: i, sku: s });
            }
        }
    }
    for (s, &w) in instance.weight.iter().enumerate() {
        if !(w.is_finite() && w >= 0.0) {
            violations.push(Violation::NegativeWeight { sku: s, value: w });
        }
    }
    for (p, &c) in instance.capacity.iter().enumerate() {
        if !(c.is_finite() && c > 0.0) {
            violations.push(Violation::NonPositiveCapacity {
                package: p,
                value: c,
            });
        }
    }
    for (m, row) in instance.cost.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                violations.push(Violation::NegativeCost {
                    movement: m,
                    package: p,
                    value: c,
                });
            }
        }
    }
    for s in 0..instance.n_skus() {
        let stock = instance.sku_stock(s);
        let fixed_demand: i64 = instance.outlets().map(|i| instance.fixed_demand[i][s]).sum();
        if fixed_demand > stock {
            violations.push(Violation::AggregateInfeasible {
                sku: s,
                stock,
                fixed_demand,
            });
        }
    }
    ValidationReport { violations }
}

/// Breakdown of the transfer objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub transport: f64,
    pub shortfall: f64,
    pub tiebreak: f64,
    pub total: f64,
}

/// Transfer plan: units per movement and SKU, packages per movement and type.
///
/// `x` is integral for solutions of the transfer problem and may be
/// fractional for relaxed solutions; `y` is always integral.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// `[movement][sku]`
    pub x: Vec<Vec<f64>>,
    /// `[movement][package type]`
    pub y: Vec<Vec<u64>>,
}

impl Solution {
    /// The do-nothing plan.
    pub fn empty(instance: &Instance) -> Self {
        Self {
            x: vec![vec![0.0; instance.n_skus()]; instance.n_movements()],
            y: vec![vec![0; instance.n_packages()]; instance.n_movements()],
        }
    }

    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        let ok = self.x.len() == instance.n_movements()
            && self.y.len() == instance.n_movements()
            && self.x.iter().all(|r| r.len() == instance.n_skus())
            && self.y.iter().all(|r| r.len() == instance.n_packages());
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "expected {} movements x {} skus / {} package types",
                instance.n_movements(),
                instance.n_skus(),
                instance.n_packages()
            )))
        }
    }

    /// Final stock per facility and SKU: initial stock plus inflow minus outflow.
    pub fn final_stock(&self, instance: &Instance) -> Vec<Vec<f64>> {
        let mut fs: Vec<Vec<f64>> = instance
            .initial_stock
            .iter()
            .map(|row| row.iter().map(|&v| v as f64).collect())
            .collect();
        for (m, mv) in instance.movements.iter().enumerate() {
            for (s, &units) in self.x[m].iter().enumerate() {
                fs[mv.from][s] -= units;
                fs[mv.to][s] += units;
            }
        }
        fs
    }

    pub fn total_packages(&self) -> u64 {
        self.y.iter().flatten().sum()
    }

    pub fn transport_cost(&self, instance: &Instance) -> f64 {
        self.y
            .iter()
            .zip(&instance.cost)
            .map(|(ys, cs)| ys.iter().zip(cs).map(|(&y, &c)| y as f64 * c).sum::<f64>())
            .sum()
    }

    /// Total weight shipped on movement `m`.
    pub fn shipped_weight(&self, instance: &Instance, m: usize) -> f64 {
        self.x[m]
            .iter()
            .zip(&instance.weight)
            .map(|(&x, &w)| x * w)
            .sum()
    }

    /// Total package capacity sent on movement `m`.
    pub fn shipped_capacity(&self, instance: &Instance, m: usize) -> f64 {
        self.y[m]
            .iter()
            .zip(&instance.capacity)
            .map(|(&y, &c)| y as f64 * c)
            .sum()
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        self.x.iter().flatten().all(|v| (v - v.round()).abs() <= tol)
    }

    /// Snaps `x` to the nearest integers.
    pub fn rounded(&self) -> Solution {
        Solution {
            x: self
                .x
                .iter()
                .map(|r| r.iter().map(|v| v.round().max(0.0)).collect())
                .collect(),
            y: self.y.clone(),
        }
    }
}
