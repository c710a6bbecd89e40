//! Minimum-cost flow with arc lower bounds, and the per-SKU rounding network.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::domain::Movement;
use crate::error::{Error, Result};

/// Real arc costs are carried as integers scaled by this factor.
pub const COST_SCALE: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowArc {
    pub tail: usize,
    pub head: usize,
    pub lower: i64,
    pub upper: i64,
    pub cost: f64,
}

/// Directed network; `supply[v] > 0` is a source, `< 0` a sink.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowNetwork {
    pub supply: Vec<i64>,
    pub arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            supply: vec![0; n_nodes],
            arcs: Vec::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.supply.len()
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, lower: i64, upper: i64, cost: f64) -> usize {
        self.arcs.push(FlowArc {
            tail,
            head,
            lower,
            upper,
            cost,
        });
        self.arcs.len() - 1
    }

    /// Cost of `flows` in original (unscaled) units.
    pub fn flow_cost(&self, flows: &[i64]) -> f64 {
        self.arcs.iter().zip(flows).map(|(a, &f)| a.cost * f as f64).sum()
    }

    /// Checks bounds and conservation of `flows`.
    pub fn is_feasible_flow(&self, flows: &[i64]) -> bool {
        if flows.len() != self.arcs.len() {
            return false;
        }
        let mut net = self.supply.clone();
        for (a, &f) in self.arcs.iter().zip(flows) {
            if f < a.lower || f > a.upper {
                return false;
            }
            net[a.tail] -= f;
            net[a.head] += f;
        }
        net.iter().all(|&v| v == 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    pub flows: Vec<i64>,
    pub cost: f64,
}

struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
    rev: usize,
}

struct Residual {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let k = self.edges.len();
        self.edges.push(Edge {
            to,
            cap,
            cost,
            rev: k + 1,
        });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
            rev: k,
        });
        self.adj[from].push(k);
        self.adj[to].push(k + 1);
        k
    }

    fn push(&mut self, e: usize, amount: i64) {
        self.edges[e].cap -= amount;
        let r = self.edges[e].rev;
        self.edges[r].cap += amount;
    }
}

/// Integral minimum-cost flow by successive shortest paths.
///
/// Lower bounds are removed by shifting them into node excesses. Arcs with
/// negative cost are saturated up front so that every residual arc starts
/// with nonnegative cost; Dijkstra with node potentials then routes the
/// remaining excess from a super source to a super sink.
pub fn solve_min_cost_flow(net: &FlowNetwork) -> Result<FlowSolution> {
    let n = net.n_nodes();
    if net.supply.iter().sum::<i64>() != 0 {
        return Err(Error::FlowInfeasible("supplies do not balance".into()));
    }
    for (k, a) in net.arcs.iter().enumerate() {
        if a.tail >= n || a.head >= n {
            return Err(Error::FlowInfeasible(format!("arc {k} references an unknown node")));
        }
        if a.lower < 0 || a.lower > a.upper {
            return Err(Error::FlowInfeasible(format!(
                "arc {k} has bounds [{}, {}]",
                a.lower, a.upper
            )));
        }
        if !a.cost.is_finite() {
            return Err(Error::FlowInfeasible(format!("arc {k} has a non-finite cost")));
        }
    }

    let source = n;
    let sink = n + 1;
    let mut g = Residual::new(n + 2);
    let mut excess = net.supply.clone();
    let mut base = Vec::with_capacity(net.arcs.len());
    let mut handles = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        let cost = (a.cost * COST_SCALE).round() as i64;
        let cap = a.upper - a.lower;
        let e = g.add(a.tail, a.head, cap, cost);
        // A saturated arc keeps its residual capacity on the reverse edge,
        // which has positive cost.
        let start = if cost < 0 {
            g.push(e, cap);
            a.upper
        } else {
            a.lower
        };
        excess[a.tail] -= start;
        excess[a.head] += start;
        base.push(a.lower);
        handles.push(e);
    }

    let mut required = 0i64;
    for (v, &b) in excess.iter().enumerate() {
        if b > 0 {
            g.add(source, v, b, 0);
            required += b;
        } else if b < 0 {
            g.add(v, sink, -b, 0);
        }
    }

    let total = n + 2;
    let mut potential = vec![0i64; total];
    let mut routed = 0i64;
    let mut dist = vec![i64::MAX; total];
    let mut prev_edge = vec![usize::MAX; total];
    while routed < required {
        dist.fill(i64::MAX);
        prev_edge.fill(usize::MAX);
        dist[source] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &e in &g.adj[v] {
                let edge = &g.edges[e];
                if edge.cap <= 0 {
                    continue;
                }
                let reduced = edge.cost + potential[v] - potential[edge.to];
                let nd = d + reduced;
                if nd < dist[edge.to] {
                    dist[edge.to] = nd;
                    prev_edge[edge.to] = e;
                    heap.push(Reverse((nd, edge.to)));
                }
            }
        }
        if dist[sink] == i64::MAX {
            return Err(Error::FlowInfeasible(format!(
                "only {routed} of {required} units of excess can be routed"
            )));
        }
        for v in 0..total {
            if dist[v] != i64::MAX {
                potential[v] += dist[v];
            }
        }
        let mut amount = required - routed;
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            amount = amount.min(g.edges[e].cap);
            v = g.edges[g.edges[e].rev].to;
        }
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            g.push(e, amount);
            v = g.edges[g.edges[e].rev].to;
        }
        routed += amount;
    }

    let flows: Vec<i64> = handles
        .iter()
        .zip(&base)
        .map(|(&e, &lower)| lower + g.edges[g.edges[e].rev].cap)
        .collect();
    debug_assert!(net.is_feasible_flow(&flows));
    Ok(FlowSolution {
        cost: net.flow_cost(&flows),
        flows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundingArc {
    /// Rounded `X` on a movement.
    Transfer { movement: usize },
    /// Total units a facility sends.
    Send { facility: usize },
    /// Total units a facility receives.
    Receive { facility: usize },
    /// Net balance (received minus sent) of a facility.
    Balance { facility: usize },
}

/// Network whose integral circulations are exactly the roundings of one
/// SKU's relaxed transfers that keep every transfer, every facility's sent
/// and received totals and every net balance within floor/ceiling of its
/// relaxed value.
///
/// Node layout for `F` facilities: `0..F` send side of each facility,
/// `F..2F` receive side, `2F..3F` facility balance nodes, `3F` the SKU-wide
/// balance node.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingNetwork {
    pub network: FlowNetwork,
    pub kinds: Vec<RoundingArc>,
    /// Arc index of each movement's transfer arc.
    pub transfer_arcs: Vec<usize>,
}

/// Values within this distance of an integer are treated as integral.
pub const SNAP_TOL: f64 = 1e-9;

pub fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= SNAP_TOL {
        r
    } else {
        v
    }
}

fn interval(v: f64) -> (i64, i64) {
    let v = snap(v);
    (v.floor() as i64, v.ceil() as i64)
}

impl RoundingNetwork {
    /// Rounded transfer per movement from a flow on this network.
    pub fn transfers(&self, flows: &[i64]) -> Vec<i64> {
        self.transfer_arcs.iter().map(|&a| flows[a]).collect()
    }
}

/// Builds the rounding network of one SKU from its relaxed transfers
/// `x_rel[m]` and per-movement rounding costs `c_hat[m]`.
pub fn build_rounding_network(
    n_facilities: usize,
    movements: &[Movement],
    x_rel: &[f64],
    c_hat: &[f64],
) -> RoundingNetwork {
    let f = n_facilities;
    let hub = 3 * f;
    let x: Vec<f64> = x_rel.iter().map(|&v| snap(v.max(0.0))).collect();
    let mut sent = vec![0.0; f];
    let mut received = vec![0.0; f];
    for (mv, &v) in movements.iter().zip(&x) {
        sent[mv.from] += v;
        received[mv.to] += v;
    }

    let mut network = FlowNetwork::new(3 * f + 1);
    let mut kinds = Vec::new();
    let mut transfer_arcs = Vec::with_capacity(movements.len());
    for (m, mv) in movements.iter().enumerate() {
        let (lo, hi) = interval(x[m]);
        transfer_arcs.push(network.add_arc(mv.from, f + mv.to, lo, hi, c_hat[m]));
        kinds.push(RoundingArc::Transfer { movement: m });
    }
    for i in 0..f {
        let (lo, hi) = interval(sent[i]);
        network.add_arc(2 * f + i, i, lo, hi, 0.0);
        kinds.push(RoundingArc::Send { facility: i });
        let (lo, hi) = interval(received[i]);
        network.add_arc(f + i, 2 * f + i, lo, hi, 0.0);
        kinds.push(RoundingArc::Receive { facility: i });
        let balance = snap(received[i] - sent[i]);
        let (lo, hi) = interval(balance.abs());
        if balance >= 0.0 {
            network.add_arc(2 * f + i, hub, lo, hi, 0.0);
        } else {
            network.add_arc(hub, 2 * f + i, lo, hi, 0.0);
        }
        kinds.push(RoundingArc::Balance { facility: i });
    }
    RoundingNetwork {
        network,
        kinds,
        transfer_arcs,
    }
}
