//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use redistrib::instgen::{generate_instance, GeneratorParams};
use redistrib::mcf::FlowNetwork;
use redistrib::model::{MilpModel, Sense};
use redistrib::optimizer::{solve_lp, LpStatus};
use redistrib::packing::PackingTask;
use redistrib::{Instance, SendRule, SolverConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generated instance with one warehouse, two outlets, two SKUs, one
/// package type and 1..=4 units of stock.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut r = rng(seed ^ 0x7157);
    let stock = r.gen_range(1..=4);
    let mut params = GeneratorParams::new(2, 1, 2, stock);
    params.rng_seed = seed;
    generate_instance(&params).unwrap()
}

pub fn desk_instance(seed: u64) -> Instance {
    let mut params = GeneratorParams::preset("desk").unwrap();
    params.rng_seed = seed;
    generate_instance(&params).unwrap()
}

/// Cheapest package mix with capacity at least `weight`.
pub fn cheapest_cover(weight: f64, capacity: &[f64], cost: &[f64]) -> f64 {
    fn go(p: usize, need: f64, capacity: &[f64], cost: &[f64]) -> f64 {
        if need <= 1e-9 {
            return 0.0;
        }
        if p == capacity.len() {
            return f64::INFINITY;
        }
        let max = (need / capacity[p] - 1e-9).ceil().max(0.0) as u64;
        (0..=max)
            .map(|k| k as f64 * cost[p] + go(p + 1, need - k as f64 * capacity[p], capacity, cost))
            .fold(f64::INFINITY, f64::min)
    }
    go(0, weight, capacity, cost)
}

struct SkuPlan {
    x: Vec<i64>,
    shortfall: f64,
}

fn sku_plans(inst: &Instance, s: usize, config: &SolverConfig) -> Vec<SkuPlan> {
    let nf = inst.n_facilities();
    let total: i64 = (0..nf).map(|i| inst.initial_stock[i][s]).sum();
    let limit = |i: usize| -> i64 {
        if inst.warehouses.contains(&i) {
            total
        } else {
            let is = inst.initial_stock[i][s];
            match config.send_rule {
                SendRule::ExcessOnly => (is - inst.fixed_demand[i][s]).max(0),
                SendRule::UpToStock => is,
            }
        }
    };
    let mut out = Vec::new();
    let mut x = vec![0i64; inst.n_movements()];
    fn rec(
        k: usize,
        x: &mut Vec<i64>,
        sent: &mut Vec<i64>,
        inst: &Instance,
        s: usize,
        total: i64,
        limit: &dyn Fn(usize) -> i64,
        config: &SolverConfig,
        out: &mut Vec<SkuPlan>,
    ) {
        if k == x.len() {
            let mut fs: Vec<i64> = (0..inst.n_facilities()).map(|i| inst.initial_stock[i][s]).collect();
            for (m, mv) in inst.movements.iter().enumerate() {
                fs[mv.from] -= x[m];
                fs[mv.to] += x[m];
            }
            let mut shortfall = 0.0;
            for i in 0..inst.n_facilities() {
                if fs[i] < 0 {
                    return;
                }
                if !inst.warehouses.contains(&i) {
                    if fs[i] < inst.fixed_demand[i][s] {
                        return;
                    }
                    let need = inst.fixed_demand[i][s] + inst.variable_demand[i][s];
                    shortfall += inst.priority[i][s] * (need - fs[i]).max(0) as f64;
                }
            }
            out.push(SkuPlan {
                x: x.clone(),
                shortfall: config.alpha * shortfall,
            });
            return;
        }
        let from = inst.movements[k].from;
        for v in 0..=total {
            if sent[from] + v > limit(from) {
                break;
            }
            x[k] = v;
            sent[from] += v;
            rec(k + 1, x, sent, inst, s, total, limit, config, out);
            sent[from] -= v;
        }
        x[k] = 0;
    }
    let mut sent = vec![0i64; nf];
    rec(0, &mut x, &mut sent, inst, s, total, &limit, config, &mut out);
    out
}

/// Optimum of the transfer problem by enumerating every integral transfer
/// plan, with the cheapest package mix per movement. `None` if infeasible.
pub fn brute_force_transfer(inst: &Instance, config: &SolverConfig) -> Option<f64> {
    let plans: Vec<Vec<SkuPlan>> = (0..inst.n_skus()).map(|s| sku_plans(inst, s, config)).collect();
    if plans.iter().any(Vec::is_empty) {
        return None;
    }
    let n_mov = inst.n_movements();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; plans.len()];
    loop {
        let mut total = 0.0;
        let mut units = 0i64;
        for (s, &k) in idx.iter().enumerate() {
            total += plans[s][k].shortfall;
            units += plans[s][k].x.iter().sum::<i64>();
        }
        for m in 0..n_mov {
            let w: f64 = idx
                .iter()
                .enumerate()
                .map(|(s, &k)| plans[s][k].x[m] as f64 * inst.weight[s])
                .sum();
            total += cheapest_cover(w, &inst.capacity, &inst.cost[m]);
        }
        total += config.epsilon * units as f64;
        best = best.min(total);
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Some(best);
            }
            idx[d] += 1;
            if idx[d] < plans[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Cheapest packing of a task by dynamic programming over the multiset of
/// remaining units: every step removes the contents of one package.
pub fn brute_force_packing(task: &PackingTask) -> f64 {
    use std::collections::HashMap;
    fn contents(counts: &[u64], k: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if k == counts.len() {
            if cur.iter().any(|&c| c > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for c in 0..=counts[k] {
            cur[k] = c;
            contents(counts, k + 1, cur, out);
        }
        cur[k] = 0;
    }
    fn solve(state: Vec<u64>, task: &PackingTask, memo: &mut HashMap<Vec<u64>, f64>) -> f64 {
        if state.iter().all(|&c| c == 0) {
            return 0.0;
        }
        if let Some(&v) = memo.get(&state) {
            return v;
        }
        let mut subsets = Vec::new();
        contents(&state, 0, &mut vec![0; state.len()], &mut subsets);
        let mut best = f64::INFINITY;
        for sub in subsets {
            let w: f64 = sub.iter().zip(&task.weights).map(|(&c, &w)| c as f64 * w).sum();
            let price = (0..task.capacities.len())
                .filter(|&p| task.capacities[p] + 1e-9 >= w)
                .map(|p| task.costs[p])
                .fold(f64::INFINITY, f64::min);
            if !price.is_finite() {
                continue;
            }
            let rest: Vec<u64> = state.iter().zip(&sub).map(|(a, b)| a - b).collect();
            best = best.min(price + solve(rest, task, memo));
        }
        memo.insert(state, best);
        best
    }
    solve(task.units.clone(), task, &mut HashMap::new())
}

/// Random packing task with at most `max_units` units and two types.
pub fn random_packing_task(seed: u64, max_units: u64) -> PackingTask {
    let mut r = rng(seed ^ 0xbac4);
    let n_skus = r.gen_range(1..=4);
    let capacities = vec![r.gen_range(2.0..10.0), r.gen_range(2.0..10.0)];
    let max_cap = capacities.iter().copied().fold(0.0, f64::max);
    let weights: Vec<f64> = (0..n_skus).map(|_| r.gen_range(0.1..max_cap)).collect();
    let mut units = vec![0u64; n_skus];
    let total = r.gen_range(0..=max_units);
    for _ in 0..total {
        units[r.gen_range(0..n_skus)] += 1;
    }
    let costs = vec![r.gen_range(10.0..100.0), r.gen_range(10.0..100.0)];
    PackingTask::new(units, weights, capacities, costs)
}

/// Random network with a known feasible flow; costs are multiples of 0.01
/// and may be negative.
pub fn random_network(seed: u64, n_nodes: usize, n_arcs: usize) -> FlowNetwork {
    let mut r = rng(seed ^ 0xf10e);
    let mut net = FlowNetwork::new(n_nodes);
    let mut flow = Vec::new();
    for _ in 0..n_arcs {
        let tail = r.gen_range(0..n_nodes);
        let mut head = r.gen_range(0..n_nodes);
        while head == tail {
            head = r.gen_range(0..n_nodes);
        }
        let lower = r.gen_range(0..3);
        let upper = lower + r.gen_range(0..6);
        let cost = r.gen_range(-500..1000) as f64 / 100.0;
        net.add_arc(tail, head, lower, upper, cost);
        flow.push(r.gen_range(lower..=upper));
    }
    let mut supply = vec![0i64; n_nodes];
    for (a, &f) in net.arcs.iter().zip(&flow) {
        supply[a.tail] += f;
        supply[a.head] -= f;
    }
    net.supply = supply;
    net
}

/// Minimum cost of `net` from the arc-flow linear program.
pub fn lp_flow_cost(net: &FlowNetwork) -> Option<f64> {
    let mut model = MilpModel::new("flow");
    let cols: Vec<usize> = net
        .arcs
        .iter()
        .enumerate()
        .map(|(k, a)| model.add_var(format!("f{k}"), a.lower as f64, a.upper as f64, false, a.cost))
        .collect();
    for v in 0..net.n_nodes() {
        let mut terms = Vec::new();
        for (k, a) in net.arcs.iter().enumerate() {
            if a.tail == v {
                terms.push((cols[k], 1.0));
            }
            if a.head == v {
                terms.push((cols[k], -1.0));
            }
        }
        model.add_constraint(format!("n{v}"), terms, Sense::Eq, net.supply[v] as f64);
    }
    let r = solve_lp(&model);
    (r.status == LpStatus::Optimal).then_some(r.objective)
}
