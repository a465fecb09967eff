//! Primal network simplex.
//!
//! Starts from an all-artificial spanning tree rooted at an extra vertex.
//! Artificial edges are priced lexicographically: every cost is a pair
//! `(big, small)` with artificial edges at `(1, 0)` and real edges at
//! `(0, c)`, which behaves like an infinitely large big-M without putting a
//! huge number next to real-valued costs. Entering edges are chosen by
//! Bland's rule and leaving ties go to the smallest edge id.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::ops::{Add, Neg, Sub};

use super::{FlowSolution, LinearFlowNetwork, Status};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Lex {
    big: i64,
    small: f64,
}

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex {
            big: self.big + o.big,
            small: self.small + o.small,
        }
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        self + -o
    }
}

impl Neg for Lex {
    type Output = Lex;
    fn neg(self) -> Lex {
        Lex {
            big: -self.big,
            small: -self.small,
        }
    }
}

impl Lex {
    fn sign(self, eps: f64) -> Ordering {
        match self.big.cmp(&0) {
            Ordering::Equal if self.small < -eps => Ordering::Less,
            Ordering::Equal if self.small > eps => Ordering::Greater,
            Ordering::Equal => Ordering::Equal,
            o => o,
        }
    }
}

struct Arc {
    from: usize,
    to: usize,
    cap: i64,
    cost: Lex,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Tree,
    Lower,
    Upper,
}

struct Simplex {
    n: usize,
    arcs: Vec<Arc>,
    flow: Vec<i64>,
    state: Vec<State>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<Lex>,
    eps: f64,
    objective: Lex,
}

impl Simplex {
    fn new(net: &LinearFlowNetwork) -> Self {
        let n = net.vertex_count();
        let big_cap = net.total_supply() + 1;
        let mut arcs: Vec<Arc> = net
            .edges
            .iter()
            .map(|e| Arc {
                from: e.from,
                to: e.to,
                cap: net.effective_cap(e),
                cost: Lex { big: 0, small: e.cost },
            })
            .collect();
        let mut flow = vec![0i64; arcs.len()];
        let mut state = vec![State::Lower; arcs.len()];
        let root = n;
        let mut objective = Lex::default();
        for (v, &b) in net.balance.iter().enumerate() {
            let (from, to) = if b >= 0 { (v, root) } else { (root, v) };
            arcs.push(Arc {
                from,
                to,
                cap: big_cap,
                cost: Lex { big: 1, small: 0.0 },
            });
            flow.push(b.abs());
            state.push(State::Tree);
            objective.big += b.abs();
        }
        let max_cost = net.edges.iter().map(|e| e.cost.abs()).fold(0.0, f64::max);
        let mut s = Simplex {
            n,
            arcs,
            flow,
            state,
            parent: vec![usize::MAX; n + 1],
            parent_arc: vec![usize::MAX; n + 1],
            depth: vec![0; n + 1],
            pi: vec![Lex::default(); n + 1],
            eps: 1e-9 * (1.0 + max_cost) * (n as f64 + 1.0),
            objective,
        };
        s.rebuild_tree();
        s
    }

    /// Recomputes parents, depths and potentials from the tree arcs by BFS
    /// from the root, with `rc = c - pi[from] + pi[to] = 0` on tree arcs.
    fn rebuild_tree(&mut self) {
        let root = self.n;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n + 1];
        for (a, st) in self.state.iter().enumerate() {
            if *st == State::Tree {
                adj[self.arcs[a].from].push(a);
                adj[self.arcs[a].to].push(a);
            }
        }
        let mut seen = vec![false; self.n + 1];
        seen[root] = true;
        self.pi[root] = Lex::default();
        self.depth[root] = 0;
        self.parent[root] = usize::MAX;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &a in &adj[v] {
                let arc = &self.arcs[a];
                let w = if arc.from == v { arc.to } else { arc.from };
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                self.parent[w] = v;
                self.parent_arc[w] = a;
                self.depth[w] = self.depth[v] + 1;
                self.pi[w] = if arc.from == v {
                    self.pi[v] - arc.cost
                } else {
                    self.pi[v] + arc.cost
                };
                queue.push_back(w);
            }
        }
    }

    fn reduced_cost(&self, a: usize) -> Lex {
        let arc = &self.arcs[a];
        arc.cost - self.pi[arc.from] + self.pi[arc.to]
    }

    fn entering(&self) -> Option<usize> {
        (0..self.arcs.len()).find(|&a| {
            if self.arcs[a].cap == 0 {
                return false;
            }
            match self.state[a] {
                State::Lower => self.reduced_cost(a).sign(self.eps) == Ordering::Less,
                State::Upper => self.reduced_cost(a).sign(self.eps) == Ordering::Greater,
                State::Tree => false,
            }
        })
    }

    /// Tree arcs on the cycle closed by `entering`, each with whether the
    /// push direction matches the arc's orientation.
    fn cycle(&self, s: usize, t: usize) -> Vec<(usize, bool)> {
        // push runs s -> t on the entering arc, then t -> ... -> s in the tree
        let mut up_from_t = Vec::new();
        let mut down_to_s = Vec::new();
        let (mut x, mut y) = (t, s);
        while x != y {
            if self.depth[x] >= self.depth[y] {
                let a = self.parent_arc[x];
                up_from_t.push((a, self.arcs[a].from == x));
                x = self.parent[x];
            } else {
                let a = self.parent_arc[y];
                down_to_s.push((a, self.arcs[a].to == y));
                y = self.parent[y];
            }
        }
        up_from_t.extend(down_to_s.into_iter().rev());
        up_from_t
    }

    fn pivot(&mut self, e: usize) {
        let at_lower = self.state[e] == State::Lower;
        let (s, t) = if at_lower {
            (self.arcs[e].from, self.arcs[e].to)
        } else {
            (self.arcs[e].to, self.arcs[e].from)
        };
        let mut cycle = vec![(e, at_lower)];
        cycle.extend(self.cycle(s, t));

        let residual = |a: usize, fwd: bool| {
            if fwd {
                self.arcs[a].cap - self.flow[a]
            } else {
                self.flow[a]
            }
        };
        let mut leave = (i64::MAX, usize::MAX);
        for &(a, fwd) in &cycle {
            let r = residual(a, fwd);
            if r < leave.0 || (r == leave.0 && a < leave.1) {
                leave = (r, a);
            }
        }
        let (theta, leaving) = leave;
        if theta > 0 {
            for &(a, fwd) in &cycle {
                self.flow[a] += if fwd { theta } else { -theta };
            }
            let rc = self.reduced_cost(e);
            let delta = Lex {
                big: rc.big * theta,
                small: rc.small * theta as f64,
            };
            self.objective = self.objective + if at_lower { delta } else { -delta };
        }
        if leaving == e {
            self.state[e] = if at_lower { State::Upper } else { State::Lower };
            return;
        }
        self.state[e] = State::Tree;
        self.state[leaving] = if self.flow[leaving] == 0 {
            State::Lower
        } else {
            State::Upper
        };
        self.rebuild_tree();
    }

    fn certify(&self, net: &LinearFlowNetwork, real: usize) -> Result<()> {
        for a in 0..real {
            let rc = self.reduced_cost(a).sign(self.eps);
            let ok = match self.state[a] {
                State::Tree => rc == Ordering::Equal,
                State::Lower => self.arcs[a].cap == 0 || rc != Ordering::Less,
                State::Upper => rc != Ordering::Greater,
            };
            if !ok {
                return Err(Error::Fault(format!("optimality certificate fails on edge {a}")));
            }
        }
        let flow = &self.flow[..real];
        if !net.is_feasible_flow(flow) {
            return Err(Error::Fault("simplex returned an infeasible flow".into()));
        }
        let recomputed = net.cost_of(flow);
        let internal = self.objective.small;
        if (internal - recomputed).abs() > 1e-6 * recomputed.abs().max(1.0) {
            return Err(Error::Fault(format!(
                "objective drift: tracked {internal}, recomputed {recomputed}"
            )));
        }
        Ok(())
    }
}

/// Solves `net` to optimality. Infeasibility is reported through
/// [`Status::Infeasible`]; an `Err` means invalid input or a failed
/// post-solve certificate.
pub fn solve(net: &LinearFlowNetwork) -> Result<FlowSolution> {
    net.validate()?;
    let real = net.edges.len();
    let mut sx = Simplex::new(net);
    let mut pivots = 0;
    while let Some(e) = sx.entering() {
        sx.pivot(e);
        pivots += 1;
    }
    if sx.flow[real..].iter().any(|&f| f > 0) {
        return Ok(FlowSolution {
            status: Status::Infeasible,
            flow: vec![0; real],
            objective: 0.0,
            pivots,
        });
    }
    sx.certify(net, real)?;
    let flow = sx.flow[..real].to_vec();
    Ok(FlowSolution {
        status: Status::Optimal,
        objective: net.cost_of(&flow),
        flow,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let mut net = LinearFlowNetwork::new(vec![3, -3]);
        net.add_edge(0, 1, None, 2.0);
        let sol = solve(&net).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.flow, vec![3]);
        assert_eq!(sol.objective, 6.0);
    }

    #[test]
    fn capacity_cut_is_infeasible() {
        let mut net = LinearFlowNetwork::new(vec![3, -3]);
        net.add_edge(0, 1, Some(2), 2.0);
        assert_eq!(solve(&net).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn prefers_cheaper_parallel_edge_until_full() {
        let mut net = LinearFlowNetwork::new(vec![5, -5]);
        net.add_edge(0, 1, Some(2), -3.0);
        net.add_edge(0, 1, None, 1.0);
        net.add_edge(0, 1, Some(1), -1.0);
        assert_eq!(net.edges[2].key, 2);
        let sol = solve(&net).unwrap();
        assert_eq!(sol.flow, vec![2, 2, 1]);
        assert_eq!(sol.objective, -5.0);
    }

    #[test]
    fn negative_costs_through_transshipment() {
        // 0 -> 1 -> 3 costs -4, 0 -> 2 -> 3 costs 1; the first path holds 2
        let mut net = LinearFlowNetwork::new(vec![3, 0, 0, -3]);
        net.add_edge(0, 1, Some(2), -5.0);
        net.add_edge(1, 3, None, 1.0);
        net.add_edge(0, 2, None, 0.0);
        net.add_edge(2, 3, None, 1.0);
        let sol = solve(&net).unwrap();
        assert_eq!(sol.flow, vec![2, 2, 1, 1]);
        assert!((sol.objective + 7.0).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_rejected() {
        let net = LinearFlowNetwork::new(vec![1, 0]);
        assert!(solve(&net).unwrap_err().is_validation());
    }

    #[test]
    fn empty_supply() {
        let mut net = LinearFlowNetwork::new(vec![0, 0]);
        net.add_edge(0, 1, None, -1.0);
        let sol = solve(&net).unwrap();
        assert_eq!(sol.flow, vec![0]);
    }

    #[test]
    fn deterministic() {
        let mut net = LinearFlowNetwork::new(vec![4, 0, -4]);
        for _ in 0..3 {
            net.add_edge(0, 1, Some(2), 0.0);
            net.add_edge(1, 2, Some(2), 0.0);
        }
        let a = solve(&net).unwrap();
        let b = solve(&net).unwrap();
        assert_eq!(a, b);
    }
}
