//! JSON file forms of instances and solutions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Instance, Movement, ObjectiveTerms, Solution};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FacilityRef {
    Index(usize),
    Name(String),
}

/// On-disk instance layout. Costs are keyed `"(i,j,p)"` with facility and
/// package indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    facilities: Vec<String>,
    warehouses: Vec<FacilityRef>,
    skus: Vec<String>,
    package_types: Vec<String>,
    movements: Vec<[usize; 2]>,
    initial_stock: Vec<Vec<i64>>,
    fixed_demand: Vec<Vec<i64>>,
    variable_demand: Vec<Vec<i64>>,
    priority: Vec<Vec<f64>>,
    weight: Vec<f64>,
    capacity: Vec<f64>,
    cost: BTreeMap<String, f64>,
}

fn cost_key(from: usize, to: usize, p: usize) -> String {
    format!("({from},{to},{p})")
}

fn parse_cost_key(key: &str) -> Option<(usize, usize, usize)> {
    let inner = key.trim().strip_prefix('(')?.strip_suffix(')')?;
    let mut parts = inner.split(',').map(|t| t.trim().parse::<usize>());
    let out = (parts.next()?.ok()?, parts.next()?.ok()?, parts.next()?.ok()?);
    parts.next().is_none().then_some(out)
}

fn check_matrix<T>(name: &str, m: &[Vec<T>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInstance(format!(
            "{name} must be a {rows} x {cols} matrix"
        )));
    }
    Ok(())
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Instance> {
        let nf = file.facilities.len();
        let ns = file.skus.len();
        let np = file.package_types.len();

        let mut warehouses = Vec::with_capacity(file.warehouses.len());
        for w in &file.warehouses {
            let idx = match w {
                FacilityRef::Index(i) => *i,
                FacilityRef::Name(name) => file
                    .facilities
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| {
                        Error::InvalidInstance(format!("unknown warehouse '{name}'"))
                    })?,
            };
            if idx >= nf {
                return Err(Error::InvalidInstance(format!(
                    "warehouse index {idx} out of range"
                )));
            }
            warehouses.push(idx);
        }
        warehouses.sort_unstable();
        warehouses.dedup();

        check_matrix("initial_stock", &file.initial_stock, nf, ns)?;
        check_matrix("fixed_demand", &file.fixed_demand, nf, ns)?;
        check_matrix("variable_demand", &file.variable_demand, nf, ns)?;
        check_matrix("priority", &file.priority, nf, ns)?;
        if file.weight.len() != ns {
            return Err(Error::InvalidInstance(format!("weight must have {ns} entries")));
        }
        if file.capacity.len() != np {
            return Err(Error::InvalidInstance(format!("capacity must have {np} entries")));
        }

        let movements: Vec<Movement> = file
            .movements
            .iter()
            .map(|&[from, to]| Movement::new(from, to))
            .collect();
        let index: std::collections::HashMap<(usize, usize), usize> = movements
            .iter()
            .enumerate()
            .map(|(m, mv)| ((mv.from, mv.to), m))
            .collect();
        let mut cost = vec![vec![f64::NAN; np]; movements.len()];
        for (key, &value) in &file.cost {
            let (from, to, p) = parse_cost_key(key).ok_or_else(|| {
                Error::InvalidInstance(format!("malformed cost key '{key}'"))
            })?;
            let m = index.get(&(from, to)).ok_or_else(|| {
                Error::InvalidInstance(format!("cost key '{key}' names no movement"))
            })?;
            if p >= np {
                return Err(Error::InvalidInstance(format!(
                    "cost key '{key}' names an unknown package type"
                )));
            }
            cost[*m][p] = value;
        }
        for (m, row) in cost.iter().enumerate() {
            if let Some(p) = row.iter().position(|c| c.is_nan()) {
                let mv = movements[m];
                return Err(Error::InvalidInstance(format!(
                    "missing cost for {}",
                    cost_key(mv.from, mv.to, p)
                )));
            }
        }

        Ok(Instance {
            facilities: file.facilities,
            warehouses,
            skus: file.skus,
            package_types: file.package_types,
            movements,
            initial_stock: file.initial_stock,
            fixed_demand: file.fixed_demand,
            variable_demand: file.variable_demand,
            priority: file.priority,
            weight: file.weight,
            capacity: file.capacity,
            cost,
        })
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        let mut cost = BTreeMap::new();
        for (mv, row) in inst.movements.iter().zip(&inst.cost) {
            for (p, &c) in row.iter().enumerate() {
                cost.insert(cost_key(mv.from, mv.to, p), c);
            }
        }
        InstanceFile {
            warehouses: inst
                .warehouses
                .iter()
                .map(|&w| FacilityRef::Name(inst.facilities[w].clone()))
                .collect(),
            movements: inst.movements.iter().map(|m| [m.from, m.to]).collect(),
            facilities: inst.facilities,
            skus: inst.skus,
            package_types: inst.package_types,
            initial_stock: inst.initial_stock,
            fixed_demand: inst.fixed_demand,
            variable_demand: inst.variable_demand,
            priority: inst.priority,
            weight: inst.weight,
            capacity: inst.capacity,
            cost,
        }
    }
}

/// On-disk solution: sparse `[i, j, s, units]` and `[i, j, p, count]` triples
/// (facility indices, not movement indices) plus the objective breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(rename = "X")]
    pub x: Vec<(usize, usize, usize, f64)>,
    #[serde(rename = "Y")]
    pub y: Vec<(usize, usize, usize, u64)>,
    pub objective_terms: ObjectiveTerms,
}

impl SolutionFile {
    pub fn new(instance: &Instance, solution: &Solution, terms: ObjectiveTerms) -> Self {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (m, mv) in instance.movements.iter().enumerate() {
            for (s, &v) in solution.x[m].iter().enumerate() {
                if v != 0.0 {
                    x.push((mv.from, mv.to, s, v));
                }
            }
            for (p, &n) in solution.y[m].iter().enumerate() {
                if n != 0 {
                    y.push((mv.from, mv.to, p, n));
                }
            }
        }
        Self {
            x,
            y,
            objective_terms: terms,
        }
    }

    pub fn to_solution(&self, instance: &Instance) -> Result<Solution> {
        let mut sol = Solution::empty(instance);
        for &(i, j, s, v) in &self.x {
            let m = instance.movement_index(i, j).ok_or_else(|| {
                Error::ShapeMismatch(format!("X entry on unknown movement ({i}, {j})"))
            })?;
            if s >= instance.n_skus() {
                return Err(Error::ShapeMismatch(format!("X entry on unknown sku {s}")));
            }
            sol.x[m][s] = v;
        }
        for &(i, j, p, n) in &self.y {
            let m = instance.movement_index(i, j).ok_or_else(|| {
                Error::ShapeMismatch(format!("Y entry on unknown movement ({i}, {j})"))
            })?;
            if p >= instance.n_packages() {
                return Err(Error::ShapeMismatch(format!(
                    "Y entry on unknown package type {p}"
                )));
            }
            sol.y[m][p] = n;
        }
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn instance_json_round_trip() {
        let inst = fixtures::send_rule_example();
        let text = inst.to_json().unwrap();
        assert!(text.contains("\"(0,1,0)\""));
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn warehouses_by_index_are_accepted() {
        let inst = fixtures::send_rule_example();
        let mut value: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        value["warehouses"] = serde_json::json!([0]);
        let back: Instance = serde_json::from_value(value).unwrap();
        assert_eq!(back.warehouses, vec![0]);
    }

    #[test]
    fn missing_cost_is_rejected() {
        let inst = fixtures::send_rule_example();
        let mut value: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        value["cost"].as_object_mut().unwrap().remove("(1,2,0)");
        let err = serde_json::from_value::<Instance>(value).unwrap_err();
        assert!(err.to_string().contains("missing cost"), "{err}");
    }

    #[test]
    fn bad_matrix_shape_is_rejected() {
        let inst = fixtures::send_rule_example();
        let mut value: serde_json::Value = serde_json::from_str(&inst.to_json().unwrap()).unwrap();
        value["initial_stock"][0] = serde_json::json!([1, 2]);
        assert!(serde_json::from_value::<Instance>(value).is_err());
    }

    #[test]
    fn cost_key_parsing() {
        assert_eq!(parse_cost_key("(1,2,3)"), Some((1, 2, 3)));
        assert_eq!(parse_cost_key("( 10 , 0 , 1 )"), Some((10, 0, 1)));
        assert_eq!(parse_cost_key("(1,2)"), None);
        assert_eq!(parse_cost_key("(1,2,3,4)"), None);
        assert_eq!(parse_cost_key("1,2,3"), None);
    }

    #[test]
    fn solution_file_round_trip() {
        let inst = fixtures::send_rule_example();
        let mut sol = Solution::empty(&inst);
        sol.x[0][0] = 1.0;
        sol.y[0][0] = 1;
        sol.x[2][1] = 1.0;
        sol.y[2][0] = 1;
        let file = SolutionFile::new(&inst, &sol, ObjectiveTerms::default());
        assert_eq!(file.x, vec![(0, 1, 0, 1.0), (1, 2, 1, 1.0)]);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"X\"") && text.contains("objective_terms"));
        let back: SolutionFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_solution(&inst).unwrap(), sol);
    }
}
