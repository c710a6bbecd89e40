//! Per-movement packing: which units go into which individual package.
//!
//! The transfer model only bounds total weight by total capacity, so a plan
//! may need more packages than its `Y` once units are assigned to actual
//! boxes. Small tasks are solved exactly; larger ones by first-fit
//! decreasing followed by a pass that moves each package to the cheapest
//! type that still holds its load.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Instance, Solution};
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_THRESHOLD: u64 = 30;
/// Search nodes allowed per exact task before settling for the best found.
pub const EXACT_NODE_BUDGET: u64 = 2_000_000;

const LOAD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingTask {
    /// Units per SKU.
    pub units: Vec<u64>,
    /// Weight per SKU.
    pub weights: Vec<f64>,
    pub capacities: Vec<f64>,
    pub costs: Vec<f64>,
    /// Packages of each type that may be opened.
    pub availability: Vec<u64>,
}

impl PackingTask {
    /// Task with the default availability: one package of every type per
    /// unit that has weight, which never binds since no package in a
    /// cheapest packing is empty.
    pub fn new(units: Vec<u64>, weights: Vec<f64>, capacities: Vec<f64>, costs: Vec<f64>) -> Self {
        let per_type: u64 = units
            .iter()
            .zip(&weights)
            .filter(|&(_, &w)| w > 0.0)
            .map(|(&n, _)| n)
            .sum();
        let availability = vec![per_type; capacities.len()];
        Self {
            units,
            weights,
            capacities,
            costs,
            availability,
        }
    }

    /// Task for movement `m` of `solution`.
    pub fn for_movement(instance: &Instance, solution: &Solution, m: usize) -> Self {
        let units = solution.x[m].iter().map(|&v| v.round().max(0.0) as u64).collect();
        Self::new(
            units,
            instance.weight.clone(),
            instance.capacity.clone(),
            instance.cost[m].clone(),
        )
    }

    pub fn total_units(&self) -> u64 {
        self.units.iter().sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.units.iter().zip(&self.weights).map(|(&n, &w)| n as f64 * w).sum()
    }

    fn validate(&self) -> Result<()> {
        let n_types = self.capacities.len();
        if self.weights.len() != self.units.len()
            || self.costs.len() != n_types
            || self.availability.len() != n_types
        {
            return Err(Error::InvalidConfig("packing task vectors have inconsistent lengths".into()));
        }
        let max_cap = self.capacities.iter().copied().fold(0.0, f64::max);
        for (s, (&n, &w)) in self.units.iter().zip(&self.weights).enumerate() {
            if n > 0 && w > max_cap + LOAD_TOL {
                return Err(Error::UnpackableItem { sku: s, weight: w });
            }
        }
        Ok(())
    }

    /// Items as `(sku, weight)`, heaviest first, ties to the lower SKU.
    fn items(&self) -> Vec<(usize, f64)> {
        let mut items: Vec<(usize, f64)> = self
            .units
            .iter()
            .enumerate()
            .flat_map(|(s, &n)| std::iter::repeat((s, self.weights[s])).take(n as usize))
            .collect();
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        items
    }

    /// Types by cost per unit of capacity, then by cost, then by index.
    fn types_by_ratio(&self) -> Vec<usize> {
        let mut types: Vec<usize> = (0..self.capacities.len()).filter(|&p| self.capacities[p] > 0.0).collect();
        types.sort_by(|&a, &b| {
            let ra = self.costs[a] / self.capacities[a];
            let rb = self.costs[b] / self.capacities[b];
            ra.total_cmp(&rb)
                .then(self.costs[a].total_cmp(&self.costs[b]))
                .then(a.cmp(&b))
        });
        types
    }
}

/// One opened package and its contents as `(sku, units)`, SKUs ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Package {
    pub package_type: usize,
    pub contents: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub packages: Vec<Package>,
    pub cost: f64,
    /// Whether `cost` is proven minimal.
    pub is_exact: bool,
    /// Units of zero weight that were not placed in any package because no
    /// package was opened.
    pub loose: Vec<(usize, u64)>,
}

impl PackingResult {
    /// Opened packages per type.
    pub fn counts(&self, n_types: usize) -> Vec<u64> {
        let mut y = vec![0; n_types];
        for p in &self.packages {
            y[p.package_type] += 1;
        }
        y
    }
}

#[derive(Clone)]
struct Bin {
    package_type: usize,
    load: f64,
    items: Vec<usize>,
}

fn to_result(task: &PackingTask, items: &[(usize, f64)], bins: &[Bin], loose: Vec<usize>, is_exact: bool) -> PackingResult {
    let n_skus = task.units.len();
    let collect = |idx: &[usize]| {
        let mut count = vec![0u64; n_skus];
        for &k in idx {
            count[items[k].0] += 1;
        }
        count
            .into_iter()
            .enumerate()
            .filter(|&(_, n)| n > 0)
            .collect::<Vec<_>>()
    };
    let packages: Vec<Package> = bins
        .iter()
        .map(|b| Package {
            package_type: b.package_type,
            contents: collect(&b.items),
        })
        .collect();
    let cost = bins.iter().map(|b| task.costs[b.package_type]).sum();
    PackingResult {
        packages,
        cost,
        is_exact,
        loose: collect(&loose),
    }
}

/// Splits items into those that need room and zero-weight ones.
fn split_weightless(items: &[(usize, f64)]) -> (Vec<usize>, Vec<usize>) {
    (0..items.len()).partition(|&k| items[k].1 > 0.0)
}

fn place_weightless(bins: &mut [Bin], weightless: Vec<usize>) -> Vec<usize> {
    match bins.first_mut() {
        Some(b) => {
            b.items.extend(weightless);
            Vec::new()
        }
        None => weightless,
    }
}

/// First-fit decreasing into the best cost-per-capacity type, then each
/// package is moved to the cheapest type that holds its load.
fn first_fit_decreasing(task: &PackingTask, items: &[(usize, f64)], heavy: &[usize]) -> Result<Vec<Bin>> {
    let types = task.types_by_ratio();
    let mut opened = vec![0u64; task.capacities.len()];
    let mut bins: Vec<Bin> = Vec::new();
    for &k in heavy {
        let w = items[k].1;
        if let Some(b) = bins
            .iter_mut()
            .find(|b| b.load + w <= task.capacities[b.package_type] + LOAD_TOL)
        {
            b.load += w;
            b.items.push(k);
            continue;
        }
        let p = types
            .iter()
            .copied()
            .find(|&p| task.capacities[p] + LOAD_TOL >= w && opened[p] < task.availability[p])
            .ok_or_else(|| {
                if types.iter().any(|&p| task.capacities[p] + LOAD_TOL >= w) {
                    Error::InvalidConfig("package availability exhausted".into())
                } else {
                    Error::UnpackableItem {
                        sku: items[k].0,
                        weight: w,
                    }
                }
            })?;
        opened[p] += 1;
        bins.push(Bin {
            package_type: p,
            load: w,
            items: vec![k],
        });
    }
    for b in &mut bins {
        let current = b.package_type;
        let cheaper = (0..task.capacities.len())
            .filter(|&p| {
                task.capacities[p] + LOAD_TOL >= b.load
                    && task.costs[p] < task.costs[current]
                    && opened[p] < task.availability[p]
            })
            .min_by(|&a, &c| task.costs[a].total_cmp(&task.costs[c]).then(a.cmp(&c)));
        if let Some(p) = cheaper {
            opened[current] -= 1;
            opened[p] += 1;
            b.package_type = p;
        }
    }
    Ok(bins)
}

struct Exact<'a> {
    task: &'a PackingTask,
    items: &'a [(usize, f64)],
    heavy: &'a [usize],
    /// Weight of `heavy[k..]`.
    suffix: Vec<f64>,
    min_ratio: f64,
    types: Vec<usize>,
    bins: Vec<Bin>,
    opened: Vec<u64>,
    assign: Vec<usize>,
    cost: f64,
    best_cost: f64,
    best: Option<Vec<Bin>>,
    nodes: u64,
    exhausted_budget: bool,
}

impl Exact<'_> {
    fn bound(&self, k: usize) -> f64 {
        let slack: f64 = self
            .bins
            .iter()
            .map(|b| (self.task.capacities[b.package_type] - b.load).max(0.0))
            .sum();
        self.cost + (self.suffix[k] - slack).max(0.0) * self.min_ratio
    }

    fn search(&mut self, k: usize) {
        if self.nodes >= EXACT_NODE_BUDGET {
            self.exhausted_budget = true;
            return;
        }
        self.nodes += 1;
        if self.bound(k) >= self.best_cost - 1e-9 {
            return;
        }
        if k == self.heavy.len() {
            self.best_cost = self.cost;
            self.best = Some(self.bins.clone());
            return;
        }
        let item = self.heavy[k];
        let (sku, w) = self.items[item];
        // Identical units fill packages in index order.
        let first = if k > 0 && self.items[self.heavy[k - 1]].0 == sku {
            self.assign[k - 1]
        } else {
            0
        };
        let mut tried: Vec<(usize, f64)> = Vec::new();
        for j in first..self.bins.len() {
            let b = &self.bins[j];
            if b.load + w > self.task.capacities[b.package_type] + LOAD_TOL {
                continue;
            }
            let state = (b.package_type, b.load);
            if tried
                .iter()
                .any(|&(p, l)| p == state.0 && (l - state.1).abs() <= LOAD_TOL)
            {
                continue;
            }
            tried.push(state);
            self.bins[j].load += w;
            self.bins[j].items.push(item);
            self.assign[k] = j;
            self.search(k + 1);
            self.bins[j].items.pop();
            self.bins[j].load -= w;
        }
        for t in 0..self.types.len() {
            let p = self.types[t];
            if self.task.capacities[p] + LOAD_TOL < w || self.opened[p] >= self.task.availability[p] {
                continue;
            }
            self.opened[p] += 1;
            self.cost += self.task.costs[p];
            self.bins.push(Bin {
                package_type: p,
                load: w,
                items: vec![item],
            });
            self.assign[k] = self.bins.len() - 1;
            self.search(k + 1);
            self.bins.pop();
            self.cost -= self.task.costs[p];
            self.opened[p] -= 1;
        }
    }
}

/// Packs one movement's units. Exact when the task has at most
/// `exact_threshold` units and the search finishes within
/// [`EXACT_NODE_BUDGET`] nodes; otherwise first-fit decreasing.
pub fn solve_packing(task: &PackingTask, exact_threshold: u64) -> Result<PackingResult> {
    task.validate()?;
    let items = task.items();
    let (heavy, weightless) = split_weightless(&items);
    let mut bins = first_fit_decreasing(task, &items, &heavy)?;
    let mut is_exact = heavy.is_empty();
    if !is_exact && task.total_units() <= exact_threshold {
        let mut suffix = vec![0.0; heavy.len() + 1];
        for k in (0..heavy.len()).rev() {
            suffix[k] = suffix[k + 1] + items[heavy[k]].1;
        }
        let types = task.types_by_ratio();
        let min_ratio = types
            .first()
            .map(|&p| task.costs[p] / task.capacities[p])
            .unwrap_or(0.0)
            .max(0.0);
        let heuristic_cost: f64 = bins.iter().map(|b| task.costs[b.package_type]).sum();
        let mut exact = Exact {
            task,
            items: &items,
            heavy: &heavy,
            suffix,
            min_ratio,
            types,
            bins: Vec::new(),
            opened: vec![0; task.capacities.len()],
            assign: vec![0; heavy.len()],
            cost: 0.0,
            best_cost: heuristic_cost,
            best: None,
            nodes: 0,
            exhausted_budget: false,
        };
        exact.search(0);
        if let Some(best) = exact.best {
            bins = best;
        }
        is_exact = !exact.exhausted_budget;
    }
    let loose = place_weightless(&mut bins, weightless);
    Ok(to_result(task, &items, &bins, loose, is_exact))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovementManifest {
    pub movement: usize,
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub packing: PackingResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackedSolution {
    /// Manifests of the movements that carry units.
    pub manifests: Vec<MovementManifest>,
    /// Input transfers with `Y` replaced by the opened packages.
    pub solution: Solution,
    pub transport_cost: f64,
    pub all_exact: bool,
}

impl PackedSolution {
    /// Manifest document: one entry per movement that carries units.
    pub fn manifest_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.manifests)?)
    }
}

/// Packs every movement of `solution` and rebuilds `Y` from the opened
/// packages. Transfers are left as they are.
pub fn pack_all(instance: &Instance, solution: &Solution, exact_threshold: u64) -> Result<PackedSolution> {
    solution.check_shape(instance)?;
    let results: Vec<Result<Option<MovementManifest>>> = (0..instance.n_movements())
        .into_par_iter()
        .map(|m| {
            let task = PackingTask::for_movement(instance, solution, m);
            if task.total_units() == 0 {
                return Ok(None);
            }
            let packing = solve_packing(&task, exact_threshold)?;
            let mv = instance.movements[m];
            Ok(Some(MovementManifest {
                movement: m,
                from: mv.from,
                to: mv.to,
                packing,
            }))
        })
        .collect();
    let mut manifests = Vec::new();
    for r in results {
        if let Some(man) = r? {
            manifests.push(man);
        }
    }
    let mut packed = solution.clone();
    for row in &mut packed.y {
        row.iter_mut().for_each(|v| *v = 0);
    }
    for man in &manifests {
        packed.y[man.movement] = man.packing.counts(instance.n_packages());
    }
    let transport_cost = packed.transport_cost(instance);
    let all_exact = manifests.iter().all(|m| m.packing.is_exact);
    Ok(PackedSolution {
        manifests,
        solution: packed,
        transport_cost,
        all_exact,
    })
}
