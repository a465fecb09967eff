//! Epoch-start redistribution policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cmcf::solve_cmcf;
use crate::cost::build_profiles;
use crate::error::{Error, Result};
use crate::graph::{AllocationGraph, EdgeRole};
use crate::par::Execution;
use crate::scenario::{FleetState, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Never relocate.
    None,
    /// Relocations from the convex min-cost-flow allocation.
    Cmcf,
    /// Move vehicles from surplus to deficit clusters, ignoring economics.
    GreedyDeficit,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::None => "none",
            PolicyKind::Cmcf => "cmcf",
            PolicyKind::GreedyDeficit => "greedy_deficit",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PolicyKind::None),
            "cmcf" => Ok(PolicyKind::Cmcf),
            "greedy_deficit" => Ok(PolicyKind::GreedyDeficit),
            other => Err(Error::invalid(
                "policy",
                format!("unknown policy `{other}` (expected none, cmcf or greedy_deficit)"),
            )),
        }
    }
}

/// Fleet view handed to a policy at an epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub time: f64,
    /// Idle vehicles plus those becoming free within the epoch, at the
    /// cluster where they will be.
    pub supply: Vec<i64>,
    /// Vehicles idle right now; only these can be moved.
    pub idle: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub from: usize,
    pub to: usize,
    pub count: i64,
}

pub fn plan(kind: PolicyKind, snap: &Snapshot, forecast: &Scenario) -> Result<Vec<Move>> {
    match kind {
        PolicyKind::None => Ok(Vec::new()),
        PolicyKind::Cmcf => policy_cmcf(snap, forecast),
        PolicyKind::GreedyDeficit => Ok(greedy_deficit(snap, forecast)),
    }
}

/// Solves the allocation for the snapshot's supply and turns the flows on
/// redistribution edges into moves, capped by the idle vehicles at each
/// source.
pub fn policy_cmcf(snap: &Snapshot, forecast: &Scenario) -> Result<Vec<Move>> {
    let fleet = FleetState::new(snap.supply.clone())?;
    if fleet.total() == 0 {
        return Ok(Vec::new());
    }
    let graph = AllocationGraph::build(forecast, &fleet)?;
    let profiles = build_profiles(&graph, forecast, Execution::Sequential)?;
    let report = solve_cmcf(&graph, &profiles)?;
    let mut idle = snap.idle.clone();
    let mut moves = Vec::new();
    for (e, &x) in graph.edges.iter().zip(&report.edge_flow) {
        if e.role != EdgeRole::Relocate || x == 0 {
            continue;
        }
        let (from, to) = e.od.expect("relocation edge has od");
        let count = x.min(idle[from]);
        if count > 0 {
            idle[from] -= count;
            moves.push(Move { from, to, count });
        }
    }
    Ok(moves)
}

/// Deficit per cluster is the rounded demand expected from it in the
/// commencing epoch minus its supply. Vehicles go from the largest surplus
/// to the largest deficit (ties to the lower index) until either side is
/// exhausted.
pub fn greedy_deficit(snap: &Snapshot, forecast: &Scenario) -> Vec<Move> {
    let n = snap.supply.len();
    let mut balance: Vec<i64> = (0..n)
        .map(|i| snap.supply[i] - forecast.demand[0][i].iter().sum::<f64>().round() as i64)
        .collect();
    let pick = |balance: &[i64], sign: i64| {
        (0..n)
            .filter(|&i| balance[i] * sign > 0)
            .max_by(|&a, &b| (balance[a] * sign).cmp(&(balance[b] * sign)).then(b.cmp(&a)))
    };
    let mut moves = Vec::new();
    while let (Some(to), Some(from)) = (pick(&balance, -1), pick(&balance, 1)) {
        let count = (-balance[to]).min(balance[from]);
        balance[to] += count;
        balance[from] -= count;
        moves.push(Move { from, to, count });
    }
    moves
}
