//! Linear minimum-cost flow with integer capacities and balances.

mod dimacs;
mod maxflow;
mod simplex;

pub use dimacs::{parse_dimacs, write_dimacs};
pub use maxflow::{max_flow, max_flow_feasibility};
pub use simplex::solve;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    /// `None` is unbounded. Lower bounds are always zero.
    pub cap: Option<i64>,
    pub cost: f64,
    /// Position among the parallel edges with the same endpoints.
    pub key: usize,
}

/// A network whose vertex balances are supplies (positive) or demands
/// (negative); a feasible flow has out-flow minus in-flow equal to the
/// balance at every vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearFlowNetwork {
    pub balance: Vec<i64>,
    pub edges: Vec<FlowEdge>,
}

impl LinearFlowNetwork {
    pub fn new(balance: Vec<i64>) -> Self {
        LinearFlowNetwork {
            balance,
            edges: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.balance.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: Option<i64>, cost: f64) -> usize {
        let key = self
            .edges
            .iter()
            .filter(|e| e.from == from && e.to == to)
            .count();
        self.add_edge_keyed(from, to, cap, cost, key)
    }

    /// Like [`add_edge`](Self::add_edge) with a caller-assigned parallel key;
    /// avoids the linear scan when building large networks.
    pub fn add_edge_keyed(&mut self, from: usize, to: usize, cap: Option<i64>, cost: f64, key: usize) -> usize {
        self.edges.push(FlowEdge {
            from,
            to,
            cap,
            cost,
            key,
        });
        self.edges.len() - 1
    }

    pub fn total_supply(&self) -> i64 {
        self.balance.iter().filter(|&&b| b > 0).sum()
    }

    /// Capacity standing in for "unbounded": no edge can carry more than the
    /// total supply.
    pub fn effective_cap(&self, e: &FlowEdge) -> i64 {
        e.cap.unwrap_or(self.total_supply() + 1)
    }

    pub fn cost_of(&self, flow: &[i64]) -> f64 {
        self.edges.iter().zip(flow).map(|(e, &x)| e.cost * x as f64).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.balance.len();
        let sum: i64 = self.balance.iter().sum();
        if sum != 0 {
            return Err(Error::invalid("balance", format!("must sum to zero, got {sum}")));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(Error::invalid(format!("edges[{i}]"), "endpoint out of range"));
            }
            if e.cap.is_some_and(|c| c < 0) {
                return Err(Error::invalid(format!("edges[{i}].cap"), "must be non-negative"));
            }
            if !e.cost.is_finite() {
                return Err(Error::invalid(format!("edges[{i}].cost"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Bounds and conservation.
    pub fn is_feasible_flow(&self, flow: &[i64]) -> bool {
        if flow.len() != self.edges.len() {
            return false;
        }
        let mut net = vec![0i64; self.balance.len()];
        for (e, &x) in self.edges.iter().zip(flow) {
            if x < 0 || e.cap.is_some_and(|c| x > c) {
                return false;
            }
            net[e.from] += x;
            net[e.to] -= x;
        }
        net == self.balance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub status: Status,
    /// Integral flow per edge; all zero when infeasible.
    pub flow: Vec<i64>,
    pub objective: f64,
    /// Simplex pivots performed.
    pub pivots: usize,
}
