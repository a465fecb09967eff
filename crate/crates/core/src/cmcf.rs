//! Convex min-cost flow by iterated edge splitting.
//!
//! Every non-linear edge is replaced by parallel linear segments that tile
//! its domain `[0, x*]`: the tangent piece on `[0, x']` and secants of the
//! convexified cost elsewhere. After each linear solve, segments touching
//! the edge's aggregate flow are bisected and re-priced, until every
//! non-linear edge sits on segments of unit width (or on the exact tangent
//! piece). At that point the linear marginals around the flow equal the true
//! ones and the flow is optimal for the convex costs.

use std::io::Write;

use crate::cost::{ConvexProfile, EdgeCost, EdgeCostProfile};
use crate::error::{Error, Result};
use crate::graph::AllocationGraph;
use crate::mcf::{self, FlowSolution, LinearFlowNetwork, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: i64,
    pub hi: i64,
    pub slope: f64,
    /// The exact tangent piece; never split.
    pub tangent: bool,
}

impl Segment {
    pub fn width(&self) -> i64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearizedEdge {
    Linear { slope: f64, cap: Option<i64> },
    Piecewise { segments: Vec<Segment> },
}

/// The allocation network with each non-linear edge expanded into
/// parallel segments.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedGraph<'a> {
    pub graph: &'a AllocationGraph,
    pub profiles: &'a [EdgeCostProfile],
    pub edges: Vec<LinearizedEdge>,
}

fn secant(p: &ConvexProfile, lo: i64, hi: i64) -> Segment {
    let cc = |x| p.convexified(x).expect("segment inside the convex domain");
    Segment {
        lo,
        hi,
        slope: (cc(hi) - cc(lo)) / (hi - lo) as f64,
        tangent: false,
    }
}

/// Tangent piece on `[0, x']` and one secant on `[x', x*]`, dropping
/// zero-width pieces.
pub fn initial_segments(p: &ConvexProfile) -> Vec<Segment> {
    let mut segs = Vec::new();
    if p.x_prime > 0 {
        segs.push(Segment {
            lo: 0,
            hi: p.x_prime,
            slope: p.tangent_slope,
            tangent: true,
        });
    }
    if p.x_star > p.x_prime {
        segs.push(secant(p, p.x_prime, p.x_star));
    }
    segs
}

pub fn initial_linearization<'a>(
    graph: &'a AllocationGraph,
    profiles: &'a [EdgeCostProfile],
) -> LinearizedGraph<'a> {
    let edges = profiles
        .iter()
        .map(|p| match &p.cost {
            EdgeCost::Linear { slope } => LinearizedEdge::Linear {
                slope: *slope,
                cap: graph.edges[p.edge].upper,
            },
            EdgeCost::Convex(c) => LinearizedEdge::Piecewise {
                segments: initial_segments(c),
            },
        })
        .collect();
    LinearizedGraph {
        graph,
        profiles,
        edges,
    }
}

/// Bisects a segment at `ceil((lo + hi) / 2)`, re-pricing both halves with
/// secants of the convexified cost.
pub fn split(p: &ConvexProfile, seg: &Segment) -> (Segment, Segment) {
    debug_assert!(seg.width() > 1 && !seg.tangent);
    let mid = (seg.lo + seg.hi + 1).div_euclid(2);
    (secant(p, seg.lo, mid), secant(p, mid, seg.hi))
}

/// For every non-linear edge, the segments bordering or containing its
/// aggregate flow that are wider than one unit. Returned as
/// `(base edge, segment index)`.
pub fn splittable_edges(lin: &LinearizedGraph<'_>, aggregate: &[i64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (e, le) in lin.edges.iter().enumerate() {
        if let LinearizedEdge::Piecewise { segments } = le {
            let x = aggregate[e];
            for (k, s) in segments.iter().enumerate() {
                if !s.tangent && s.width() > 1 && s.lo <= x && x <= s.hi {
                    out.push((e, k));
                }
            }
        }
    }
    out
}

impl LinearizedGraph<'_> {
    /// Network to hand to the linear solver and, per network edge, the base
    /// edge and segment it stands for.
    pub fn network(&self) -> (LinearFlowNetwork, Vec<(usize, Option<usize>)>) {
        let mut net = LinearFlowNetwork::new(self.graph.balance.clone());
        let mut origin = Vec::new();
        for (e, le) in self.edges.iter().enumerate() {
            let base = &self.graph.edges[e];
            match le {
                LinearizedEdge::Linear { slope, cap } => {
                    net.add_edge_keyed(base.from, base.to, *cap, *slope, 0);
                    origin.push((e, None));
                }
                LinearizedEdge::Piecewise { segments } => {
                    for (k, s) in segments.iter().enumerate() {
                        net.add_edge_keyed(base.from, base.to, Some(s.width()), s.slope, k);
                        origin.push((e, Some(k)));
                    }
                }
            }
        }
        (net, origin)
    }

    pub fn segment_count(&self) -> usize {
        self.edges
            .iter()
            .map(|e| match e {
                LinearizedEdge::Linear { .. } => 1,
                LinearizedEdge::Piecewise { segments } => segments.len(),
            })
            .sum()
    }

    fn convex(&self, e: usize) -> &ConvexProfile {
        match &self.profiles[e].cost {
            EdgeCost::Convex(p) => p,
            EdgeCost::Linear { .. } => unreachable!("piecewise edge has a convex profile"),
        }
    }

    /// Refines the segments around `x` on edge `e` until the pieces touching
    /// `x` are no wider than `target` (always at least one bisection).
    /// Returns the number of bisections.
    fn refine(&mut self, e: usize, x: i64, target: i64) -> usize {
        let p = self.convex(e).clone();
        let LinearizedEdge::Piecewise { segments } = &mut self.edges[e] else {
            return 0;
        };
        let mut splits = 0;
        loop {
            let limit = if splits == 0 { 1 } else { target };
            let Some(k) = segments
                .iter()
                .position(|s| !s.tangent && s.width() > limit && s.lo <= x && x <= s.hi)
            else {
                break;
            };
            let (a, b) = split(&p, &segments[k]);
            segments.splice(k..=k, [a, b]);
            splits += 1;
        }
        splits
    }

    /// Cuts every secant piece of every non-linear edge into unit pieces.
    /// Returns the number of cuts.
    fn refine_to_units(&mut self) -> usize {
        let mut cuts = 0;
        for e in 0..self.edges.len() {
            let LinearizedEdge::Piecewise { segments } = &self.edges[e] else {
                continue;
            };
            if segments.iter().all(|s| s.tangent || s.width() <= 1) {
                continue;
            }
            let p = self.convex(e).clone();
            let LinearizedEdge::Piecewise { segments } = &mut self.edges[e] else {
                unreachable!()
            };
            let mut units = Vec::with_capacity(segments.len());
            for s in segments.drain(..) {
                if s.tangent || s.width() <= 1 {
                    units.push(s);
                } else {
                    cuts += (s.width() - 1) as usize;
                    units.extend((s.lo..s.hi).map(|x| secant(&p, x, x + 1)));
                }
            }
            *segments = units;
        }
        cuts
    }
}

/// `ceil(log2(delta)) + 1` with `delta = max(x* - x')` over non-linear
/// edges; 1 when no edge needs refining.
pub fn iteration_bound(profiles: &[EdgeCostProfile]) -> usize {
    let delta = max_convex_width(profiles);
    if delta <= 1 {
        1
    } else {
        (64 - ((delta - 1) as u64).leading_zeros()) as usize + 1
    }
}

fn max_convex_width(profiles: &[EdgeCostProfile]) -> i64 {
    profiles
        .iter()
        .filter_map(|p| match &p.cost {
            EdgeCost::Convex(c) => Some(c.x_star - c.x_prime),
            EdgeCost::Linear { .. } => None,
        })
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub segments_split: usize,
    /// Optimum of the linearized problem solved in this iteration.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Final solution of the linearized network.
    pub solution: FlowSolution,
    /// Flow per edge of the allocation graph.
    pub edge_flow: Vec<i64>,
    /// Convexified cost relative to the all-zero flow; see
    /// [`convex_objective`].
    pub objective: f64,
    /// The same flow priced with the untransformed costs.
    pub original_objective: f64,
    /// Optimum of the final linearized problem.
    pub linearized_objective: f64,
    pub iterations: usize,
    pub segments_added: usize,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn write_trace<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,segments_split,objective")?;
        for r in &self.trace {
            writeln!(w, "{},{},{}", r.iteration, r.segments_split, r.objective)?;
        }
        Ok(())
    }
}

/// Cost of `edge_flow` under the convexified costs, measured from the
/// all-zero flow (`sum cC(x) - cC(0)`), so an empty fleet costs nothing.
/// `None` if a flow leaves its edge's domain.
pub fn convex_objective(profiles: &[EdgeCostProfile], edge_flow: &[i64]) -> Option<f64> {
    profiles
        .iter()
        .zip(edge_flow)
        .map(|(p, &x)| Some(p.convexified(x)? - p.convexified(0)?))
        .sum()
}

/// Cost of `edge_flow` under the untransformed edge costs.
pub fn original_objective(profiles: &[EdgeCostProfile], edge_flow: &[i64]) -> f64 {
    profiles.iter().zip(edge_flow).map(|(p, &x)| p.original(x)).sum()
}

/// Redistributes each piecewise edge's flow left to right after checking
/// that the solver only skipped segments of equal slope.
fn normalize(lin: &LinearizedGraph<'_>, sol: &mut FlowSolution, origin: &[(usize, Option<usize>)]) -> Result<Vec<i64>> {
    let mut aggregate = vec![0i64; lin.edges.len()];
    let mut per_segment: Vec<Vec<i64>> = lin
        .edges
        .iter()
        .map(|e| match e {
            LinearizedEdge::Linear { .. } => Vec::new(),
            LinearizedEdge::Piecewise { segments } => vec![0; segments.len()],
        })
        .collect();
    for (&(e, k), &x) in origin.iter().zip(&sol.flow) {
        aggregate[e] += x;
        if let Some(k) = k {
            per_segment[e][k] = x;
        }
    }
    for (e, le) in lin.edges.iter().enumerate() {
        let LinearizedEdge::Piecewise { segments } = le else {
            continue;
        };
        let flows = &per_segment[e];
        for k in 0..segments.len() {
            if flows[k] == 0 {
                continue;
            }
            for j in 0..k {
                let slack = flows[j] < segments[j].width();
                let gap = segments[k].slope - segments[j].slope;
                if slack && gap > 1e-9 * segments[k].slope.abs().max(1.0) {
                    return Err(Error::Fault(format!(
                        "contiguity violated on edge {e}: segment {k} used while {j} has room"
                    )));
                }
            }
        }
    }
    let mut pos = 0;
    for (e, le) in lin.edges.iter().enumerate() {
        match le {
            LinearizedEdge::Linear { .. } => pos += 1,
            LinearizedEdge::Piecewise { segments } => {
                let mut left = aggregate[e];
                for s in segments {
                    let take = left.min(s.width());
                    sol.flow[pos] = take;
                    left -= take;
                    pos += 1;
                }
            }
        }
    }
    Ok(aggregate)
}

/// Minimises the convexified cost of an integral flow on `graph`.
pub fn solve_cmcf(graph: &AllocationGraph, profiles: &[EdgeCostProfile]) -> Result<SolveReport> {
    if profiles.len() != graph.edge_count() {
        return Err(Error::Fault(format!(
            "{} profiles for {} edges",
            profiles.len(),
            graph.edge_count()
        )));
    }
    let mut lin = initial_linearization(graph, profiles);
    let initial_segments = lin.segment_count();
    {
        let (net, _) = lin.network();
        if mcf::max_flow_feasibility(&net) < net.total_supply() {
            return Err(Error::Infeasible);
        }
    }
    let delta = max_convex_width(profiles).max(1);
    let bound = iteration_bound(profiles);
    let mut trace = Vec::new();
    let mut iteration = 0;
    loop {
        iteration += 1;
        let (net, origin) = lin.network();
        let mut sol = mcf::solve(&net)?;
        if sol.status == Status::Infeasible {
            return Err(Error::Infeasible);
        }
        let aggregate = normalize(&lin, &mut sol, &origin)?;
        let frontier = splittable_edges(&lin, &aggregate);
        let mut touched: Vec<usize> = frontier.iter().map(|&(e, _)| e).collect();
        touched.dedup();
        // target width halves with each iteration
        let target = (delta + (1 << iteration.min(62)) - 1) >> iteration.min(62);
        let mut splits: usize = touched
            .iter()
            .map(|&e| lin.refine(e, aggregate[e], target.max(1)))
            .sum();
        // The optimum of a finer linearization need not sit next to the
        // current one, so before the last permitted solve every convex
        // piece goes to unit width, where the linearization is exact.
        if splits > 0 && iteration + 1 >= bound {
            splits += lin.refine_to_units();
        }
        trace.push(TraceRow {
            iteration,
            segments_split: splits,
            objective: sol.objective,
        });
        if splits == 0 {
            let objective = convex_objective(profiles, &aggregate)
                .ok_or_else(|| Error::Fault("flow outside a convex domain".into()))?;
            let original_objective = original_objective(profiles, &aggregate);
            graph
                .validate_flow(&aggregate)
                .map_err(|v| Error::Fault(format!("aggregated flow invalid: {v:?}")))?;
            return Ok(SolveReport {
                linearized_objective: sol.objective,
                solution: sol,
                edge_flow: aggregate,
                objective,
                original_objective,
                iterations: iteration,
                segments_added: lin.segment_count() - initial_segments,
                trace,
            });
        }
    }
}
