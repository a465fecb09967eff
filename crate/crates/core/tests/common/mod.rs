//! Reference implementations used only to check the production solvers.
//! Each is deliberately simple and shares no code with the crate.

#![allow(dead_code)]

use std::collections::VecDeque;

use fleetflow_core::cost::EdgeCostProfile;
use fleetflow_core::graph::AllocationGraph;
use fleetflow_core::mcf::LinearFlowNetwork;

/// Min-cost flow by successive shortest paths. Each augmentation runs
/// Bellman-Ford from a super source over the residual graph, so negative
/// costs are fine as long as the input has no negative cycle.
/// Returns `None` when the supply cannot be routed.
pub fn ssp_min_cost(net: &LinearFlowNetwork) -> Option<(Vec<i64>, f64)> {
    let n = net.balance.len();
    let (s, t) = (n, n + 1);
    let big: i64 = net.balance.iter().filter(|&&b| b > 0).sum::<i64>() + 1;
    // residual arcs as (to, cap, cost), paired at index ^ 1
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    let mut adj = vec![Vec::new(); n + 2];
    let mut add = |u: usize, v: usize, c: i64, w: f64, adj: &mut Vec<Vec<usize>>| {
        adj[u].push(to.len());
        to.push(v);
        cap.push(c);
        cost.push(w);
        adj[v].push(to.len());
        to.push(u);
        cap.push(0);
        cost.push(-w);
    };
    for e in &net.edges {
        add(e.from, e.to, e.cap.unwrap_or(big), e.cost, &mut adj);
    }
    let mut need = 0;
    for (v, &b) in net.balance.iter().enumerate() {
        if b > 0 {
            add(s, v, b, 0.0, &mut adj);
            need += b;
        } else if b < 0 {
            add(v, t, -b, 0.0, &mut adj);
        }
    }
    let mut sent = 0;
    while sent < need {
        let mut dist = vec![f64::INFINITY; n + 2];
        let mut via = vec![usize::MAX; n + 2];
        dist[s] = 0.0;
        for _ in 0..n + 2 {
            let mut changed = false;
            for u in 0..n + 2 {
                if dist[u].is_infinite() {
                    continue;
                }
                for &a in &adj[u] {
                    if cap[a] > 0 && dist[u] + cost[a] < dist[to[a]] - 1e-12 {
                        dist[to[a]] = dist[u] + cost[a];
                        via[to[a]] = a;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[t].is_infinite() {
            return None;
        }
        let mut push = need - sent;
        let mut v = t;
        while v != s {
            let a = via[v];
            push = push.min(cap[a]);
            v = to[a ^ 1];
        }
        let mut v = t;
        while v != s {
            let a = via[v];
            cap[a] -= push;
            cap[a ^ 1] += push;
            v = to[a ^ 1];
        }
        sent += push;
    }
    let flow: Vec<i64> = (0..net.edges.len()).map(|i| cap[2 * i + 1]).collect();
    let total = net.edges.iter().zip(&flow).map(|(e, &x)| e.cost * x as f64).sum();
    Some((flow, total))
}

/// Convex-cost optimum on the allocation graph: each capped edge becomes a
/// bundle of unit edges priced at the consecutive marginals of its
/// convexified cost, solved by [`ssp_min_cost`]. Costs are measured from
/// the all-zero flow.
pub fn unit_expansion_optimum(graph: &AllocationGraph, profiles: &[EdgeCostProfile]) -> Option<f64> {
    let mut net = LinearFlowNetwork::new(graph.balance.clone());
    for (e, p) in graph.edges.iter().zip(profiles) {
        match p.upper() {
            None => {
                let slope = p.convexified(1).unwrap() - p.convexified(0).unwrap();
                net.add_edge(e.from, e.to, None, slope);
            }
            Some(u) => {
                for k in 0..u {
                    let m = p.convexified(k + 1).unwrap() - p.convexified(k).unwrap();
                    net.add_edge(e.from, e.to, Some(1), m);
                }
            }
        }
    }
    ssp_min_cost(&net).map(|(_, c)| c)
}

/// Exhaustive search over every integral flow of the allocation graph that
/// respects the convex-domain caps: vertices are visited in topological
/// order and each vertex's throughput is split over its out-edges in every
/// possible way. Costs are measured from the all-zero flow. Only usable
/// for a handful of vehicles.
pub fn brute_force_optimum(graph: &AllocationGraph, profiles: &[EdgeCostProfile]) -> f64 {
    let order = graph.topological_order().expect("acyclic");
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); graph.vertices.len()];
    for (i, e) in graph.edges.iter().enumerate() {
        out[e.from].push(i);
    }
    let caps: Vec<i64> = profiles
        .iter()
        .map(|p| p.upper().unwrap_or(i64::MAX))
        .collect();
    let mut inflow = vec![0i64; graph.vertices.len()];
    let mut flow = vec![0i64; graph.edges.len()];
    let mut best = f64::INFINITY;
    search(0, &order, &out, graph, &caps, profiles, &mut inflow, &mut flow, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn search(
    pos: usize,
    order: &[usize],
    out: &[Vec<usize>],
    graph: &AllocationGraph,
    caps: &[i64],
    profiles: &[EdgeCostProfile],
    inflow: &mut Vec<i64>,
    flow: &mut Vec<i64>,
    best: &mut f64,
) {
    if pos == order.len() {
        let total: f64 = profiles
            .iter()
            .zip(flow.iter())
            .map(|(p, &x)| p.convexified(x).unwrap() - p.convexified(0).unwrap())
            .sum();
        if total < *best {
            *best = total;
        }
        return;
    }
    let v = order[pos];
    let through = inflow[v] + graph.balance[v];
    if out[v].is_empty() {
        if through == 0 {
            search(pos + 1, order, out, graph, caps, profiles, inflow, flow, best);
        }
        return;
    }
    if through < 0 {
        return;
    }
    distribute(0, through, v, pos, order, out, graph, caps, profiles, inflow, flow, best);
}

#[allow(clippy::too_many_arguments)]
fn distribute(
    k: usize,
    left: i64,
    v: usize,
    pos: usize,
    order: &[usize],
    out: &[Vec<usize>],
    graph: &AllocationGraph,
    caps: &[i64],
    profiles: &[EdgeCostProfile],
    inflow: &mut Vec<i64>,
    flow: &mut Vec<i64>,
    best: &mut f64,
) {
    let edges = &out[v];
    let e = edges[k];
    let w = graph.edges[e].to;
    if k + 1 == edges.len() {
        if left > caps[e] {
            return;
        }
        flow[e] = left;
        inflow[w] += left;
        search(pos + 1, order, out, graph, caps, profiles, inflow, flow, best);
        inflow[w] -= left;
        flow[e] = 0;
        return;
    }
    for x in 0..=left.min(caps[e]) {
        flow[e] = x;
        inflow[w] += x;
        distribute(k + 1, left - x, v, pos, order, out, graph, caps, profiles, inflow, flow, best);
        inflow[w] -= x;
    }
    flow[e] = 0;
}

/// Max-flow by repeated BFS augmenting paths (Edmonds-Karp), on
/// `(from, to, cap)` edges.
pub fn bfs_max_flow(n: usize, edges: &[(usize, usize, i64)], s: usize, t: usize) -> i64 {
    let mut cap = vec![vec![0i64; n]; n];
    for &(u, v, c) in edges {
        cap[u][v] += c;
    }
    let mut total = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if cap[u][v] > 0 && prev[v] == usize::MAX {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut push = i64::MAX;
        let mut v = t;
        while v != s {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        total += push;
    }
}

/// Random DAG min-cost-flow instance: vertices in a fixed topological
/// order, edges only forward, costs in `[-10, 10]`, balances from one or
/// two sources to one or two sinks.
pub fn random_dag(rng: &mut impl rand::Rng, max_vertices: usize, max_edges: usize) -> LinearFlowNetwork {
    let n = rng.random_range(2..=max_vertices);
    let mut balance = vec![0i64; n];
    let supply = rng.random_range(0..=12);
    let a = rng.random_range(0..=supply);
    balance[0] += a;
    balance[1.min(n - 2)] += supply - a;
    let b = rng.random_range(0..=supply);
    balance[n - 1] -= b;
    balance[(n - 2).max(1)] -= supply - b;
    let mut net = LinearFlowNetwork::new(balance);
    let m = rng.random_range(1..=max_edges);
    for _ in 0..m {
        let u = rng.random_range(0..n - 1);
        let v = rng.random_range(u + 1..n);
        let cap = if rng.random_bool(0.3) {
            None
        } else {
            Some(rng.random_range(0..=8))
        };
        let cost = (rng.random_range(-10.0..=10.0f64) * 100.0).round() / 100.0;
        net.add_edge(u, v, cap, cost);
    }
    net
}

/// Exhaustive enumeration of integral flows, like [`brute_force_optimum`],
/// but partial flows that leave the same inflow on every unvisited vertex
/// are merged and only the cheapest is kept. Vertices are visited in a
/// greedy order that keeps that frontier small.
pub fn frontier_optimum(graph: &AllocationGraph, profiles: &[EdgeCostProfile]) -> f64 {
    use std::collections::HashMap;

    let n = graph.vertices.len();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (i, e) in graph.edges.iter().enumerate() {
        out[e.from].push(i);
        indeg[e.to] += 1;
    }
    let caps: Vec<i64> = profiles.iter().map(|p| p.upper().unwrap_or(i64::MAX)).collect();
    let cost = |e: usize, x: i64| profiles[e].convexified(x).unwrap() - profiles[e].convexified(0).unwrap();

    // visiting order
    let mut order = Vec::with_capacity(n);
    let mut remaining = indeg.clone();
    let mut in_frontier = vec![false; n];
    let mut done = vec![false; n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v] && remaining[v] == 0)
            .min_by_key(|&v| {
                let added = out[v].iter().filter(|&&e| !in_frontier[graph.edges[e].to]).count();
                (added as i64 - in_frontier[v] as i64, v)
            })
            .expect("acyclic");
        done[v] = true;
        in_frontier[v] = false;
        for &e in &out[v] {
            let w = graph.edges[e].to;
            in_frontier[w] = true;
            remaining[w] -= 1;
        }
        order.push(v);
    }

    let mut states: HashMap<Vec<(usize, i64)>, f64> = HashMap::new();
    states.insert(Vec::new(), 0.0);
    for &v in &order {
        if Some(v) == graph.sink {
            // its inflow is implied by conservation everywhere else
            continue;
        }
        let mut next: HashMap<Vec<(usize, i64)>, f64> = HashMap::new();
        for (state, base) in states {
            let inflow = state.iter().find(|s| s.0 == v).map_or(0, |s| s.1);
            let through = inflow + graph.balance[v];
            let rest: Vec<(usize, i64)> = state.into_iter().filter(|s| s.0 != v).collect();
            if through < 0 || (out[v].is_empty() && through != 0) {
                continue;
            }
            let mut split = vec![0i64; out[v].len()];
            enumerate_splits(&out[v], &caps, through, 0, &mut split, &mut |split| {
                let mut s = rest.clone();
                let mut c = base;
                for (&e, &x) in out[v].iter().zip(split) {
                    c += cost(e, x);
                    let w = graph.edges[e].to;
                    if x > 0 && Some(w) != graph.sink {
                        match s.iter_mut().find(|t| t.0 == w) {
                            Some(t) => t.1 += x,
                            None => s.push((w, x)),
                        }
                    }
                }
                s.sort_unstable();
                let slot = next.entry(s).or_insert(f64::INFINITY);
                if c < *slot {
                    *slot = c;
                }
            });
        }
        if std::env::var_os("FRONTIER_TRACE").is_some() {
            eprintln!("{} states after {}", next.len(), graph.vertices[v]);
        }
        states = next;
    }
    states.get(&Vec::new()).copied().unwrap_or(f64::INFINITY)
}

fn enumerate_splits(edges: &[usize], caps: &[i64], left: i64, k: usize, split: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    if edges.is_empty() {
        f(split);
        return;
    }
    if k + 1 == edges.len() {
        if left <= caps[edges[k]] {
            split[k] = left;
            f(split);
        }
        return;
    }
    for x in 0..=left.min(caps[edges[k]]) {
        split[k] = x;
        enumerate_splits(edges, caps, left - x, k + 1, split, f);
    }
    split[k] = 0;
}
