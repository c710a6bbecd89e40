use serde::{Deserialize, Serialize};

use super::MovementPolicy;

/// Cardinalities of the index sets of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSizes {
    pub facilities: usize,
    pub warehouses: usize,
    pub skus: usize,
    pub packages: usize,
    pub movements: usize,
}

impl SetSizes {
    /// Sizes for `warehouses + outlets` facilities under `policy`.
    pub fn for_policy(
        warehouses: usize,
        outlets: usize,
        skus: usize,
        packages: usize,
        policy: MovementPolicy,
    ) -> Self {
        let f = warehouses + outlets;
        let movements = match policy {
            MovementPolicy::General => f * f.saturating_sub(1),
            // warehouse -> anything plus outlet -> warehouse
            MovementPolicy::Centralized => {
                warehouses * f.saturating_sub(1) + outlets * warehouses
            }
            // anything -> outlet
            MovementPolicy::Decentralized => outlets * f.saturating_sub(1),
        };
        Self {
            facilities: f,
            warehouses,
            skus,
            packages,
            movements,
        }
    }

    pub fn outlets(&self) -> usize {
        self.facilities - self.warehouses
    }
}

/// Model size in the conventional accounting used for the published test
/// sets (transfer, package and final-stock columns; shortfall columns and
/// rows are not counted).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub n_vars: usize,
    pub n_int_vars_t: usize,
    pub n_int_vars_rt: usize,
    pub n_constraints: usize,
}

pub fn model_dimensions(sizes: &SetSizes) -> DimensionReport {
    let m = sizes.movements;
    let (f, s, p, o) = (sizes.facilities, sizes.skus, sizes.packages, sizes.outlets());
    DimensionReport {
        n_vars: m * (s + p) + f * s,
        n_int_vars_t: m * (s + p),
        n_int_vars_rt: m * p,
        // The trailing per-SKU group is needed to reproduce the published
        // counts; it has no counterpart row in the built model.
        n_constraints: f * s + 2 * o * s + m + s,
    }
}
