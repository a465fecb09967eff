mod common;

use fleetflow_core::mcf::{max_flow_feasibility, parse_dimacs, solve, write_dimacs, LinearFlowNetwork, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn simplex_matches_ssp_on_random_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut infeasible = 0;
    for k in 0..200 {
        let net = common::random_dag(&mut rng, 12, 30);
        let sol = solve(&net).unwrap();
        match common::ssp_min_cost(&net) {
            None => {
                assert_eq!(sol.status, Status::Infeasible, "instance {k}");
                infeasible += 1;
            }
            Some((_, cost)) => {
                assert_eq!(sol.status, Status::Optimal, "instance {k}");
                assert!(net.is_feasible_flow(&sol.flow));
                assert!(
                    (sol.objective - cost).abs() <= 1e-6 * cost.abs().max(1.0),
                    "instance {k}: {} vs {cost}",
                    sol.objective
                );
            }
        }
    }
    assert!(infeasible < 200);
}

#[test]
fn max_flow_matches_bfs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let net = common::random_dag(&mut rng, 10, 25);
        let n = net.vertex_count();
        let mut edges: Vec<(usize, usize, i64)> =
            net.edges.iter().map(|e| (e.from, e.to, net.effective_cap(e))).collect();
        for (v, &b) in net.balance.iter().enumerate() {
            if b > 0 {
                edges.push((n, v, b));
            } else if b < 0 {
                edges.push((v, n + 1, -b));
            }
        }
        let oracle = common::bfs_max_flow(n + 2, &edges, n, n + 1);
        assert_eq!(max_flow_feasibility(&net), oracle);
        let feasible = solve(&net).unwrap().status == Status::Optimal;
        assert_eq!(feasible, oracle == net.total_supply());
    }
}

#[test]
fn dimacs_round_trip_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let net = common::random_dag(&mut rng, 8, 16);
        let mut buf = Vec::new();
        write_dimacs(&net, &mut buf).unwrap();
        let back = parse_dimacs(std::str::from_utf8(&buf).unwrap()).unwrap();
        let (a, b) = (solve(&net).unwrap(), solve(&back).unwrap());
        assert_eq!(a.status, b.status);
        assert!((a.objective - b.objective).abs() < 1e-9);
    }
}

#[test]
fn uncapacitated_supply_always_routes() {
    let mut net = LinearFlowNetwork::new(vec![5, 2, -7]);
    net.add_edge(0, 1, None, 1.0);
    net.add_edge(1, 2, None, -2.0);
    assert_eq!(max_flow_feasibility(&net), 7);
}
