//! Generic MILP container plus the transfer model built from an instance.
//!
//! The transfer model has one column per transfer `X[i,j,s]`, package count
//! `Y[i,j,p]`, final stock `FS[i,s]` and outlet shortfall `U[i,s]`. Rows are,
//! in order: final-stock definitions, fixed-demand floors on outlets, outlet
//! send limits, movement capacity links and shortfall linearizations.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{check_delta, Instance, ObjectiveTerms, SendRule, Solution, SolverConfig};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(column, coefficient)` pairs.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// Amount by which `values` violate the row; zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimization MILP with bounded columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integer: bool,
        cost: f64,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integer,
            cost,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_int_vars(&self) -> usize {
        self.variables.iter().filter(|v| v.integer).count()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, &x)| v.cost * x)
            .sum()
    }

    /// Column index by name.
    pub fn name_map(&self) -> HashMap<&str, usize> {
        self.variables
            .iter()
            .enumerate()
            .map(|(k, v)| (v.name.as_str(), k))
            .collect()
    }

    /// Largest bound, row or integrality violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.integer {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values));
        }
        worst
    }
}

/// Column indices of the transfer model, in instance index order.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferLayout {
    /// `[movement][sku]`
    pub x: Vec<Vec<usize>>,
    /// `[movement][package type]`
    pub y: Vec<Vec<usize>>,
    /// `[facility][sku]`
    pub fs: Vec<Vec<usize>>,
    /// `[facility][sku]`, `None` on warehouses.
    pub u: Vec<Vec<Option<usize>>>,
}

#[derive(Clone, Debug)]
pub struct TransferModel {
    pub model: MilpModel,
    pub layout: TransferLayout,
    pub relaxed: bool,
    /// Capacity fraction used in the capacity links (1 for the exact model).
    pub delta: f64,
}

impl TransferModel {
    /// Reads a plan out of a column vector. Integral columns are rounded;
    /// continuous transfers within `1e-9` of an integer are snapped.
    pub fn extract_solution(&self, values: &[f64]) -> Solution {
        let x = self
            .layout
            .x
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| {
                        let v = values[c].max(0.0);
                        if !self.relaxed || (v - v.round()).abs() <= 1e-9 {
                            v.round()
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let y = self
            .layout
            .y
            .iter()
            .map(|row| row.iter().map(|&c| values[c].round().max(0.0) as u64).collect())
            .collect();
        Solution { x, y }
    }

    /// Column vector for `solution`, with final stock and shortfall columns
    /// filled in consistently.
    pub fn column_values(&self, instance: &Instance, solution: &Solution) -> Vec<f64> {
        let mut values = vec![0.0; self.model.n_vars()];
        for (row, vals) in self.layout.x.iter().zip(&solution.x) {
            for (&c, &v) in row.iter().zip(vals) {
                values[c] = v;
            }
        }
        for (row, vals) in self.layout.y.iter().zip(&solution.y) {
            for (&c, &v) in row.iter().zip(vals) {
                values[c] = v as f64;
            }
        }
        let fs = solution.final_stock(instance);
        for (i, row) in self.layout.fs.iter().enumerate() {
            for (s, &c) in row.iter().enumerate() {
                values[c] = fs[i][s];
                if let Some(u) = self.layout.u[i][s] {
                    let need = (instance.fixed_demand[i][s] + instance.variable_demand[i][s]) as f64;
                    values[u] = (need - fs[i][s]).max(0.0);
                }
            }
        }
        values
    }
}

/// Outflow limit of an outlet for one SKU under `rule`.
pub fn send_limit(instance: &Instance, facility: usize, sku: usize, rule: SendRule) -> i64 {
    let stock = instance.initial_stock[facility][sku];
    match rule {
        SendRule::ExcessOnly => (stock - instance.fixed_demand[facility][sku]).max(0),
        SendRule::UpToStock => stock,
    }
}

/// Builds the transfer model, or its relaxation with continuous transfers
/// and capacity scaled by `config.delta` when `relaxed` is set.
pub fn build_transfer_model(
    instance: &Instance,
    config: &SolverConfig,
    relaxed: bool,
) -> Result<TransferModel> {
    config.validate()?;
    let delta = if relaxed { config.delta } else { 1.0 };
    check_delta(delta)?;

    let nf = instance.n_facilities();
    let ns = instance.n_skus();
    let np = instance.n_packages();
    let mut model = MilpModel::new(if relaxed { "RT" } else { "T" });

    let sku_stock: Vec<i64> = (0..ns).map(|s| instance.sku_stock(s)).collect();
    let network_weight: f64 = (0..ns).map(|s| instance.weight[s] * sku_stock[s] as f64).sum();

    let mut x = Vec::with_capacity(instance.n_movements());
    let mut y = Vec::with_capacity(instance.n_movements());
    for (m, mv) in instance.movements.iter().enumerate() {
        let (i, j) = (mv.from, mv.to);
        let xs: Vec<usize> = (0..ns)
            .map(|s| {
                let upper = if instance.is_warehouse(i) {
                    sku_stock[s]
                } else {
                    send_limit(instance, i, s, config.send_rule).min(sku_stock[s])
                };
                model.add_var(
                    format!("X_{i}_{j}_{s}"),
                    0.0,
                    upper as f64,
                    !relaxed,
                    config.epsilon,
                )
            })
            .collect();
        let ys: Vec<usize> = (0..np)
            .map(|p| {
                let upper = (network_weight / (delta * instance.capacity[p]) - 1e-9).ceil().max(0.0);
                model.add_var(format!("Y_{i}_{j}_{p}"), 0.0, upper, true, instance.cost[m][p])
            })
            .collect();
        x.push(xs);
        y.push(ys);
    }

    let mut fs = Vec::with_capacity(nf);
    let mut u = Vec::with_capacity(nf);
    for i in 0..nf {
        let warehouse = instance.is_warehouse(i);
        let mut fs_row = Vec::with_capacity(ns);
        let mut u_row = Vec::with_capacity(ns);
        for s in 0..ns {
            fs_row.push(model.add_var(format!("FS_{i}_{s}"), 0.0, sku_stock[s] as f64, false, 0.0));
            u_row.push((!warehouse).then(|| {
                let need = instance.fixed_demand[i][s] + instance.variable_demand[i][s];
                model.add_var(
                    format!("U_{i}_{s}"),
                    0.0,
                    need.max(0) as f64,
                    false,
                    config.alpha * instance.priority[i][s],
                )
            }));
        }
        fs.push(fs_row);
        u.push(u_row);
    }

    // Final stock = initial stock + inflow - outflow.
    for i in 0..nf {
        for s in 0..ns {
            let mut terms = vec![(fs[i][s], 1.0)];
            for (m, mv) in instance.movements.iter().enumerate() {
                if mv.to == i {
                    terms.push((x[m][s], -1.0));
                } else if mv.from == i {
                    terms.push((x[m][s], 1.0));
                }
            }
            model.add_constraint(
                format!("STOCK_{i}_{s}"),
                terms,
                Sense::Eq,
                instance.initial_stock[i][s] as f64,
            );
        }
    }
    for i in instance.outlets() {
        for s in 0..ns {
            model.add_constraint(
                format!("FIXDEM_{i}_{s}"),
                vec![(fs[i][s], 1.0)],
                Sense::Ge,
                instance.fixed_demand[i][s] as f64,
            );
        }
    }
    for i in instance.outlets() {
        for s in 0..ns {
            let terms = instance
                .movements
                .iter()
                .enumerate()
                .filter(|(_, mv)| mv.from == i)
                .map(|(m, _)| (x[m][s], 1.0))
                .collect();
            model.add_constraint(
                format!("SEND_{i}_{s}"),
                terms,
                Sense::Le,
                send_limit(instance, i, s, config.send_rule) as f64,
            );
        }
    }
    for (m, mv) in instance.movements.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = (0..ns)
            .filter(|&s| instance.weight[s] != 0.0)
            .map(|s| (x[m][s], instance.weight[s]))
            .collect();
        terms.extend((0..np).map(|p| (y[m][p], -delta * instance.capacity[p])));
        model.add_constraint(format!("CAP_{}_{}", mv.from, mv.to), terms, Sense::Le, 0.0);
    }
    for i in instance.outlets() {
        for s in 0..ns {
            let need = instance.fixed_demand[i][s] + instance.variable_demand[i][s];
            if let Some(col) = u[i][s] {
                model.add_constraint(
                    format!("SHORT_{i}_{s}"),
                    vec![(col, 1.0), (fs[i][s], 1.0)],
                    Sense::Ge,
                    need as f64,
                );
            }
        }
    }

    Ok(TransferModel {
        model,
        layout: TransferLayout { x, y, fs, u },
        relaxed,
        delta,
    })
}

/// Objective breakdown of a plan. Shortfall is summed over outlets only.
pub fn evaluate_objective(
    instance: &Instance,
    solution: &Solution,
    config: &SolverConfig,
) -> ObjectiveTerms {
    let transport = solution.transport_cost(instance);
    let fs = solution.final_stock(instance);
    let mut shortfall = 0.0;
    for i in instance.outlets() {
        for s in 0..instance.n_skus() {
            let need = (instance.fixed_demand[i][s] + instance.variable_demand[i][s]) as f64;
            shortfall += instance.priority[i][s] * (need - fs[i][s]).max(0.0);
        }
    }
    let shortfall = config.alpha * shortfall;
    let tiebreak = config.epsilon * solution.x.iter().flatten().sum::<f64>();
    ObjectiveTerms {
        transport,
        shortfall,
        tiebreak,
        total: transport + shortfall + tiebreak,
    }
}

/// Tolerance used by [`check_feasibility`].
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Shape,
    NegativeTransfer,
    FractionalTransfer,
    NegativeFinalStock,
    FixedDemand,
    SendLimit,
    Capacity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub kind: ViolationKind,
    pub name: String,
    /// How far the constraint is from being satisfied (positive).
    pub amount: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<ConstraintViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{:?} {} violated by {}", v.kind, v.name, v.amount)?;
        }
        Ok(())
    }
}

/// Checks a plan against the transfer constraints. With `delta = None` the
/// exact model is checked (integral transfers, full capacity); with
/// `Some(d)` the relaxed model with capacity fraction `d`.
pub fn check_feasibility(
    instance: &Instance,
    solution: &Solution,
    config: &SolverConfig,
    delta: Option<f64>,
) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut push = |kind, name: String, amount: f64| {
        if amount > FEASIBILITY_TOL {
            violations.push(ConstraintViolation { kind, name, amount });
        }
    };
    if let Err(e) = solution.check_shape(instance) {
        push(ViolationKind::Shape, e.to_string(), f64::INFINITY);
        return FeasibilityReport { violations };
    }
    let factor = delta.unwrap_or(1.0);

    for (m, mv) in instance.movements.iter().enumerate() {
        for (s, &v) in solution.x[m].iter().enumerate() {
            let name = format!("X_{}_{}_{s}", mv.from, mv.to);
            push(ViolationKind::NegativeTransfer, name.clone(), -v);
            if delta.is_none() {
                push(ViolationKind::FractionalTransfer, name, (v - v.round()).abs());
            }
        }
        let load = solution.shipped_weight(instance, m);
        let cap = factor * solution.shipped_capacity(instance, m);
        push(
            ViolationKind::Capacity,
            format!("CAP_{}_{}", mv.from, mv.to),
            load - cap,
        );
    }

    let fs = solution.final_stock(instance);
    for i in 0..instance.n_facilities() {
        let warehouse = instance.is_warehouse(i);
        for s in 0..instance.n_skus() {
            push(
                ViolationKind::NegativeFinalStock,
                format!("FS_{i}_{s}"),
                -fs[i][s],
            );
            if warehouse {
                continue;
            }
            push(
                ViolationKind::FixedDemand,
                format!("FIXDEM_{i}_{s}"),
                instance.fixed_demand[i][s] as f64 - fs[i][s],
            );
            let sent: f64 = instance
                .movements
                .iter()
                .enumerate()
                .filter(|(_, mv)| mv.from == i)
                .map(|(m, _)| solution.x[m][s])
                .sum();
            push(
                ViolationKind::SendLimit,
                format!("SEND_{i}_{s}"),
                sent - send_limit(instance, i, s, config.send_rule) as f64,
            );
        }
    }
    FeasibilityReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{model_dimensions, Movement};
    use crate::fixtures;

    fn cfg(rule: SendRule) -> SolverConfig {
        SolverConfig {
            alpha: 0.0,
            send_rule: rule,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn column_and_row_counts() {
        let inst = fixtures::send_rule_example();
        let tm = build_transfer_model(&inst, &cfg(SendRule::ExcessOnly), false).unwrap();
        let dims = model_dimensions(&inst.set_sizes());
        let outlet_cells = inst.n_outlets() * inst.n_skus();
        assert_eq!(tm.model.n_vars(), dims.n_vars + outlet_cells);
        assert_eq!(tm.model.n_int_vars(), dims.n_int_vars_t);
        assert_eq!(
            tm.model.n_constraints() + inst.n_skus(),
            dims.n_constraints + outlet_cells
        );
        let rt = build_transfer_model(&inst, &cfg(SendRule::ExcessOnly), true).unwrap();
        assert_eq!(rt.model.n_int_vars(), dims.n_int_vars_rt);
    }

    #[test]
    fn relaxed_capacity_is_scaled() {
        let mut inst = fixtures::fragmentation();
        inst.weight = vec![3.0];
        inst.capacity = vec![10.0];
        let config = SolverConfig {
            delta: 0.8,
            ..SolverConfig::default()
        };
        let tm = build_transfer_model(&inst, &config, true).unwrap();
        let cap = tm.model.constraints.iter().find(|c| c.name == "CAP_0_1").unwrap();
        let ycol = tm.layout.y[0][0];
        let coef = cap.terms.iter().find(|t| t.0 == ycol).unwrap().1;
        assert!((coef + 8.0).abs() < 1e-12);
        // 9 units of weight over 8 usable capacity need two packages.
        let mut sol = Solution::empty(&inst);
        sol.x[0][0] = 3.0;
        sol.y[0][0] = 1;
        assert!(!check_feasibility(&inst, &sol, &config, Some(0.8)).is_feasible());
        sol.y[0][0] = 2;
        assert!(check_feasibility(&inst, &sol, &config, Some(0.8)).is_feasible());
    }

    #[test]
    fn bad_delta_is_rejected() {
        let inst = fixtures::send_rule_example();
        let config = SolverConfig {
            delta: 1.5,
            ..SolverConfig::default()
        };
        assert!(build_transfer_model(&inst, &config, true).is_err());
    }

    #[test]
    fn zero_transfer_objective() {
        let mut inst = fixtures::send_rule_example();
        inst.fixed_demand = vec![vec![0; 3]; 3];
        inst.variable_demand = vec![vec![0; 3], vec![2, 0, 1], vec![0, 3, 0]];
        let config = SolverConfig {
            alpha: 2.0,
            ..SolverConfig::default()
        };
        let terms = evaluate_objective(&inst, &Solution::empty(&inst), &config);
        // O1 holds one unit of s2 and one of s3.
        assert_eq!(terms.transport, 0.0);
        assert_eq!(terms.tiebreak, 0.0);
        assert!((terms.shortfall - 2.0 * (2.0 + 0.0 + 3.0)).abs() < 1e-12);
        let zero_alpha = SolverConfig {
            alpha: 0.0,
            ..config
        };
        assert_eq!(evaluate_objective(&inst, &Solution::empty(&inst), &zero_alpha).shortfall, 0.0);
    }

    fn send_rule_example_plan(inst: &Instance, o1_sends_s3: bool) -> Solution {
        let mut sol = Solution::empty(inst);
        let wo1 = inst.movement_index(0, 1).unwrap();
        let wo2 = inst.movement_index(0, 2).unwrap();
        let o1o2 = inst.movement_index(1, 2).unwrap();
        sol.x[wo1][0] = 1.0;
        sol.x[o1o2][1] = 1.0;
        sol.y[wo1][0] = 1;
        sol.y[o1o2][0] = 1;
        if o1_sends_s3 {
            sol.x[wo1][2] = 1.0;
            sol.x[o1o2][2] = 1.0;
        } else {
            sol.x[wo2][2] = 1.0;
            sol.y[wo2][0] = 1;
        }
        sol
    }

    #[test]
    fn send_rule_distinguishes_plans() {
        let inst = fixtures::send_rule_example();
        let two = send_rule_example_plan(&inst, true);
        let three = send_rule_example_plan(&inst, false);
        let excess = cfg(SendRule::ExcessOnly);
        let stock = cfg(SendRule::UpToStock);
        let report = check_feasibility(&inst, &two, &excess, None);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::SendLimit && v.name == "SEND_1_2"));
        assert!(check_feasibility(&inst, &two, &stock, None).is_feasible());
        assert!(check_feasibility(&inst, &three, &excess, None).is_feasible());
        assert!(check_feasibility(&inst, &three, &stock, None).is_feasible());
        let terms = evaluate_objective(&inst, &three, &excess);
        assert_eq!(terms.transport, 3.0);
    }

    #[test]
    fn unit_without_package_violates_capacity() {
        let inst = fixtures::send_rule_example();
        let mut sol = send_rule_example_plan(&inst, false);
        sol.y[0][0] = 0;
        let report = check_feasibility(&inst, &sol, &cfg(SendRule::ExcessOnly), None);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::Capacity);
        assert!((report.violations[0].amount - 1.0).abs() < 1e-12);
    }

    #[test]
    fn column_values_satisfy_the_model() {
        let inst = fixtures::send_rule_example();
        let config = cfg(SendRule::ExcessOnly);
        let tm = build_transfer_model(&inst, &config, false).unwrap();
        let sol = send_rule_example_plan(&inst, false);
        let values = tm.column_values(&inst, &sol);
        assert!(tm.model.max_violation(&values) < 1e-12);
        assert_eq!(tm.extract_solution(&values), sol);
        let terms = evaluate_objective(&inst, &sol, &config);
        assert!((tm.model.objective_value(&values) - terms.total).abs() < 1e-12);
    }

    #[test]
    fn empty_movement_set_builds() {
        let mut inst = fixtures::send_rule_example();
        inst.movements = Vec::<Movement>::new();
        inst.cost = Vec::new();
        inst.fixed_demand = vec![vec![0; 3]; 3];
        let tm = build_transfer_model(&inst, &cfg(SendRule::ExcessOnly), false).unwrap();
        assert_eq!(tm.model.n_int_vars(), 0);
    }
}
