//! Dinic max-flow, used as a feasibility preflight.

use std::collections::VecDeque;

use super::LinearFlowNetwork;

struct Residual {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Residual {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, c: i64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0);
    }

    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1; self.head.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, limit: i64, level: &[i64], next: &mut [usize]) -> i64 {
        if u == t {
            return limit;
        }
        while next[u] < self.head[u].len() {
            let e = self.head[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let pushed = self.augment(v, t, limit.min(self.cap[e]), level, next);
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0
    }
}

/// Maximum `s -> t` flow over `(from, to, cap)` edges on `n` vertices.
pub fn max_flow(n: usize, edges: &[(usize, usize, i64)], s: usize, t: usize) -> i64 {
    let mut g = Residual::new(n);
    for &(u, v, c) in edges {
        g.add(u, v, c);
    }
    let mut total = 0;
    loop {
        let level = g.levels(s);
        if level[t] < 0 {
            return total;
        }
        let mut next = vec![0; n];
        loop {
            let f = g.augment(s, t, i64::MAX, &level, &mut next);
            if f == 0 {
                break;
            }
            total += f;
        }
    }
}

/// Largest amount of supply that can be routed to the demand vertices under
/// the capacities. Equals the total supply iff `net` is feasible.
pub fn max_flow_feasibility(net: &LinearFlowNetwork) -> i64 {
    let n = net.vertex_count();
    let (s, t) = (n, n + 1);
    let mut edges: Vec<(usize, usize, i64)> = net
        .edges
        .iter()
        .map(|e| (e.from, e.to, net.effective_cap(e)))
        .collect();
    for (v, &b) in net.balance.iter().enumerate() {
        if b > 0 {
            edges.push((s, v, b));
        } else if b < 0 {
            edges.push((v, t, -b));
        }
    }
    max_flow(n + 2, &edges, s, t)
}
