//! Small hand-built instances used by the tests, the docs and the CLI smoke
//! checks.

use crate::domain::{Instance, Movement};

/// Three facilities (warehouse `W`, outlets `O1`, `O2`) and three SKUs.
///
/// Movements are `W -> O1`, `W -> O2` and `O1 -> O2`. One package type of
/// capacity 10 costs 1 on every movement and all SKUs weigh 1, so capacity
/// never binds. Fixed demand forces `s1` to `O1` and `s2` to `O2`; `s3` is
/// needed at both outlets while `O1` holds exactly one unit of it. Under the
/// excess-only send rule the optimum ships three packages, under the
/// up-to-stock rule two.
pub fn send_rule_example() -> Instance {
    let names = |p: &str, n: usize| (1..=n).map(|k| format!("{p}{k}")).collect::<Vec<_>>();
    Instance {
        facilities: vec!["W".into(), "O1".into(), "O2".into()],
        warehouses: vec![0],
        skus: names("s", 3),
        package_types: vec!["box".into()],
        movements: vec![Movement::new(0, 1), Movement::new(0, 2), Movement::new(1, 2)],
        initial_stock: vec![vec![5, 0, 5], vec![0, 1, 1], vec![0, 0, 0]],
        fixed_demand: vec![vec![0, 0, 0], vec![1, 0, 1], vec![0, 1, 1]],
        variable_demand: vec![vec![0; 3]; 3],
        priority: vec![vec![0.0; 3], vec![1.0; 3], vec![1.0; 3]],
        weight: vec![1.0; 3],
        capacity: vec![10.0],
        cost: vec![vec![1.0]; 3],
    }
}

/// One movement carrying three units of weight 3 with a single package type
/// of capacity 5: the aggregate capacity bound admits two packages, an
/// actual packing needs three.
pub fn fragmentation() -> Instance {
    Instance {
        facilities: vec!["W".into(), "O1".into()],
        warehouses: vec![0],
        skus: vec!["heavy".into()],
        package_types: vec!["box".into()],
        movements: vec![Movement::new(0, 1)],
        initial_stock: vec![vec![3], vec![0]],
        fixed_demand: vec![vec![0], vec![3]],
        variable_demand: vec![vec![0], vec![0]],
        priority: vec![vec![0.0], vec![1.0]],
        weight: vec![3.0],
        capacity: vec![5.0],
        cost: vec![vec![1.0]],
    }
}
