//! Seeded synthetic instances.
//!
//! Facilities are numbered warehouses first (`W0`, ...), then outlets
//! (`O1`, ...). Every random quantity is drawn from its own ChaCha8 stream
//! of the seed, so changing how one parameter family is drawn leaves the
//! others untouched:
//!
//! | stream | draws |
//! |---|---|
//! | 1 | SKU weights |
//! | 2 | package capacities |
//! | 3 | movement and movement-package cost factors |
//! | 4 | initial stock shares |
//! | 5 | fixed demand totals and shares |
//! | 6 | variable demand total and shares |
//! | 7 | priorities |

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{movements_for_policy, Instance, MovementPolicy};
use crate::error::{Error, Result};

/// Distribution constants; the defaults reproduce the reference generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConstants {
    pub num_warehouses: usize,
    /// Share of the total stock held by warehouses.
    pub warehouses_prop: f64,
    pub min_weight: f64,
    pub max_weight: f64,
    pub min_cost: f64,
    pub max_cost: f64,
    pub m_factor: f64,
    pub mp_factor: f64,
    pub min_cap: f64,
    pub max_cap: f64,
    pub min_fix_dem_factor: f64,
    pub max_fix_dem_factor: f64,
    pub min_var_dem_factor: f64,
    pub max_var_dem_factor: f64,
    pub min_priority: f64,
    pub max_priority: f64,
}

impl Default for GeneratorConstants {
    fn default() -> Self {
        Self {
            num_warehouses: 1,
            warehouses_prop: 0.4,
            min_weight: 0.0,
            max_weight: 1.0,
            min_cost: 10.0,
            max_cost: 100.0,
            m_factor: 0.5,
            mp_factor: 0.8,
            min_cap: 2.0,
            max_cap: 10.0,
            min_fix_dem_factor: 0.5,
            max_fix_dem_factor: 1.0,
            min_var_dem_factor: 0.25,
            max_var_dem_factor: 0.5,
            min_priority: 1.0,
            max_priority: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub num_refs: usize,
    pub num_packs: usize,
    pub num_outlets: usize,
    pub total_stock: u64,
    pub movement_policy: MovementPolicy,
    /// Multiplier on the package costs of movements touching a warehouse.
    pub ware_pack_cost_factor: f64,
    pub rng_seed: u64,
    pub constants: GeneratorConstants,
}

impl GeneratorParams {
    pub fn new(num_refs: usize, num_packs: usize, num_outlets: usize, total_stock: u64) -> Self {
        Self {
            num_refs,
            num_packs,
            num_outlets,
            total_stock,
            movement_policy: MovementPolicy::General,
            ware_pack_cost_factor: 1.0,
            rng_seed: 0,
            constants: GeneratorConstants::default(),
        }
    }

    /// Named size presets: `small`, `medium`, `large`, `g1`..`g10`, and
    /// `desk` (5 SKUs, 1 package type, 5 outlets, 100 units; small enough for
    /// the built-in branch-and-bound to prove optimality).
    pub fn preset(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let params = match lower.as_str() {
            "desk" => Self::new(5, 1, 5, 100),
            "small" => Self::new(10, 2, 10, 1_000),
            "medium" => Self::new(30, 4, 30, 9_000),
            "large" => Self::new(100, 4, 100, 100_000),
            _ => {
                let k: usize = lower
                    .strip_prefix('g')
                    .and_then(|k| k.parse().ok())
                    .filter(|k| (1..=10).contains(k))
                    .ok_or_else(|| {
                        Error::InvalidParams(format!(
                            "unknown preset '{name}' (expected desk, small, medium, large or g1..g10)"
                        ))
                    })?;
                let n = 80 + 20 * (k - 1);
                Self::new(n, 2, n, (n * n * 10) as u64)
            }
        };
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let c = &self.constants;
        if self.num_refs == 0 || self.num_packs == 0 || self.num_outlets == 0 {
            return bad("num_refs, num_packs and num_outlets must be positive".into());
        }
        if self.total_stock == 0 {
            return bad("total_stock must be positive".into());
        }
        if c.num_warehouses == 0 {
            return bad("num_warehouses must be positive".into());
        }
        if !(self.ware_pack_cost_factor.is_finite() && self.ware_pack_cost_factor >= 0.0) {
            return bad("ware_pack_cost_factor must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&c.warehouses_prop) {
            return bad("warehouses_prop must lie in [0, 1]".into());
        }
        let ranges = [
            ("weight", c.min_weight, c.max_weight, 0.0, f64::INFINITY),
            ("cost", c.min_cost, c.max_cost, 0.0, f64::INFINITY),
            ("cap", c.min_cap, c.max_cap, f64::MIN_POSITIVE, f64::INFINITY),
            ("fix_dem_factor", c.min_fix_dem_factor, c.max_fix_dem_factor, 0.0, 1.0),
            ("var_dem_factor", c.min_var_dem_factor, c.max_var_dem_factor, 0.0, f64::INFINITY),
            ("priority", c.min_priority, c.max_priority, 0.0, 1.0),
        ];
        for (name, lo, hi, floor, ceil) in ranges {
            if !(lo.is_finite() && hi.is_finite() && floor <= lo && lo <= hi && hi <= ceil) {
                return bad(format!(
                    "min_{name}/max_{name} must satisfy {floor} <= min <= max <= {ceil}"
                ));
            }
        }
        for (name, v) in [("m_factor", c.m_factor), ("mp_factor", c.mp_factor)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Splits `total` proportionally to `weights` by largest remainders.
///
/// Each share is the floor or the ceiling of its quota
/// `total * weight / sum(weights)`; the leftover units go to the largest
/// fractional parts, ties to the lower index.
pub fn partition(total: u64, weights: &[f64]) -> Result<Vec<u64>> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParams("partition weights must be finite and nonnegative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut shares: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = shares.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    // Floating-point quotas can leave the floors one unit off in either
    // direction; the loops below restore the exact total.
    let mut leftover = total.saturating_sub(assigned);
    for &k in order.iter().cycle().take(order.len() * 2) {
        if leftover == 0 {
            break;
        }
        if weights[k] > 0.0 {
            shares[k] += 1;
            leftover -= 1;
        }
    }
    let mut excess = assigned.saturating_sub(total);
    for &k in order.iter().rev() {
        if excess == 0 {
            break;
        }
        if shares[k] > 0 {
            shares[k] -= 1;
            excess -= 1;
        }
    }
    Ok(shares)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// `(warehouse total, outlet total)`: the ceiling of `total * prop` and the
/// rest, which equals the floor of `total * (1 - prop)`.
pub fn stock_split(total: u64, prop: f64) -> (u64, u64) {
    let q = total as f64 * prop;
    // Products like 1000 * 0.4 are not exact in binary; treat anything
    // within rounding noise of an integer as that integer.
    let ware = if (q - q.round()).abs() <= 1e-9 * q.abs().max(1.0) {
        q.round()
    } else {
        q.ceil()
    } as u64;
    let ware = ware.min(total);
    (ware, total - ware)
}

/// Package costs `[movement][package type]`.
pub fn gen_costs(
    movements: &[crate::domain::Movement],
    warehouses: &[usize],
    capacity: &[f64],
    c: &GeneratorConstants,
    ware_pack_cost_factor: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let max_cap = capacity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ini_min_cost = c.min_cost + (c.max_cost - c.min_cost) * c.m_factor * c.mp_factor;
    let ini_cost: Vec<f64> = capacity
        .iter()
        .map(|cap| ini_min_cost + (c.max_cost - ini_min_cost) * cap / max_cap)
        .collect();
    movements
        .iter()
        .map(|mv| {
            let m_cost = uniform(rng, c.m_factor, 1.0);
            let touches_warehouse = warehouses.contains(&mv.from) || warehouses.contains(&mv.to);
            ini_cost
                .iter()
                .map(|base| {
                    let mp = uniform(rng, c.mp_factor, 1.0);
                    let cost = mp * m_cost * base;
                    if touches_warehouse {
                        cost * ware_pack_cost_factor
                    } else {
                        cost
                    }
                })
                .collect()
        })
        .collect()
}

pub fn generate_instance(params: &GeneratorParams) -> Result<Instance> {
    params.validate()?;
    let c = &params.constants;
    let nw = c.num_warehouses;
    let no = params.num_outlets;
    let nf = nw + no;
    let ns = params.num_refs;
    let np = params.num_packs;
    let seed = params.rng_seed;

    let warehouses: Vec<usize> = (0..nw).collect();
    let movements = movements_for_policy(nf, &warehouses, params.movement_policy)?;

    let mut rng = stream(seed, 1);
    let weight: Vec<f64> = (0..ns).map(|_| uniform(&mut rng, c.min_weight, c.max_weight)).collect();
    let mut rng = stream(seed, 2);
    let capacity: Vec<f64> = (0..np).map(|_| uniform(&mut rng, c.min_cap, c.max_cap)).collect();
    let mut rng = stream(seed, 3);
    let cost = gen_costs(
        &movements,
        &warehouses,
        &capacity,
        c,
        params.ware_pack_cost_factor,
        &mut rng,
    );

    // Initial stock: one draw per (facility, sku) cell, normalized within
    // the warehouse group and within the outlet group.
    let mut rng = stream(seed, 4);
    let shares: Vec<Vec<f64>> = (0..nf)
        .map(|_| (0..ns).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let (ware_total, outlet_total) = stock_split(params.total_stock, c.warehouses_prop);
    let mut initial_stock = vec![vec![0i64; ns]; nf];
    for (group, total) in [(0..nw, ware_total), (nw..nf, outlet_total)] {
        let weights: Vec<f64> = group.clone().flat_map(|i| shares[i].clone()).collect();
        let split = partition(total, &weights)?;
        for (k, units) in split.into_iter().enumerate() {
            initial_stock[group.start + k / ns][k % ns] = units as i64;
        }
    }

    // Fixed demand, SKU by SKU so it never exceeds the SKU's stock.
    let mut rng = stream(seed, 5);
    let mut fixed_demand = vec![vec![0i64; ns]; nf];
    for s in 0..ns {
        let weights: Vec<f64> = (0..no).map(|_| rng.gen::<f64>()).collect();
        let t_stock: i64 = initial_stock.iter().map(|row| row[s]).sum();
        let lo = t_stock as f64 * c.min_fix_dem_factor;
        let hi = t_stock as f64 * c.max_fix_dem_factor;
        let total = uniform(&mut rng, lo, hi).round() as u64;
        for (k, units) in partition(total, &weights)?.into_iter().enumerate() {
            fixed_demand[nw + k][s] = units as i64;
        }
    }

    let mut rng = stream(seed, 6);
    let weights: Vec<f64> = (0..no * ns).map(|_| rng.gen::<f64>()).collect();
    let lo = params.total_stock as f64 * c.min_var_dem_factor;
    let hi = params.total_stock as f64 * c.max_var_dem_factor;
    let total = uniform(&mut rng, lo, hi).round() as u64;
    let mut variable_demand = vec![vec![0i64; ns]; nf];
    for (k, units) in partition(total, &weights)?.into_iter().enumerate() {
        variable_demand[nw + k / ns][k % ns] = units as i64;
    }

    let mut rng = stream(seed, 7);
    let priority: Vec<Vec<f64>> = (0..nf)
        .map(|i| {
            (0..ns)
                .map(|_| {
                    if i < nw {
                        0.0
                    } else {
                        uniform(&mut rng, c.min_priority, c.max_priority)
                    }
                })
                .collect()
        })
        .collect();

    let facilities = (0..nf)
        .map(|i| if i < nw { format!("W{i}") } else { format!("O{}", i - nw + 1) })
        .collect();
    Ok(Instance {
        facilities,
        warehouses,
        skus: (0..ns).map(|s| format!("S{s}")).collect(),
        package_types: (0..np).map(|p| format!("P{p}")).collect(),
        movements,
        initial_stock,
        fixed_demand,
        variable_demand,
        priority,
        weight,
        capacity,
        cost,
    })
}
