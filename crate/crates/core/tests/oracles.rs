mod common;

use redistrib::mcf::solve_min_cost_flow;
use redistrib::model::build_transfer_model;
use redistrib::optimizer::{solve_milp, MilpLimits, MilpStatus};
use redistrib::packing::solve_packing;
use redistrib::{SendRule, SolverConfig};

use common::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn transfer_milp_matches_enumeration() {
    let mut feasible = 0;
    for seed in 0..12 {
        let inst = tiny_instance(seed);
        for send_rule in [SendRule::ExcessOnly, SendRule::UpToStock] {
            let config = SolverConfig {
                send_rule,
                ..SolverConfig::default()
            };
            let oracle = brute_force_transfer(&inst, &config);
            let tm = build_transfer_model(&inst, &config, false).unwrap();
            let r = solve_milp(&tm.model, &MilpLimits::default());
            match oracle {
                None => assert_eq!(r.status, MilpStatus::Infeasible, "seed {seed}"),
                Some(best) => {
                    feasible += 1;
                    assert_eq!(r.status, MilpStatus::Optimal, "seed {seed}");
                    let got = r.objective.unwrap();
                    assert!(close(got, best, 1e-6), "seed {seed}: {got} vs {best}");
                }
            }
        }
    }
    assert!(feasible >= 12, "only {feasible} feasible cases");
}

#[test]
fn exact_packing_matches_dp() {
    for seed in 0..100 {
        let task = random_packing_task(seed, 12);
        let got = solve_packing(&task, 30).unwrap();
        assert!(got.is_exact);
        let best = brute_force_packing(&task);
        assert!(close(got.cost, best, 1e-9), "seed {seed}: {} vs {best}", got.cost);
    }
}

#[test]
fn min_cost_flow_matches_lp() {
    for seed in 0..40 {
        let net = random_network(seed, 6, 14);
        let flow = solve_min_cost_flow(&net).unwrap();
        assert!(net.is_feasible_flow(&flow.flows));
        let lp = lp_flow_cost(&net).unwrap();
        assert!(close(flow.cost, lp, 1e-9), "seed {seed}: {} vs {lp}", flow.cost);
    }
}

