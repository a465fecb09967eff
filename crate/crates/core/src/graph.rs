//! The layered allocation network.
//!
//! Per cluster `i` there is an initial-state vertex `A_i`, decision vertices
//! `K_i` (trip), `L_i` (redistribute) and `M_i` (idle), a resulting-state
//! vertex `C_i` and a next-period vertex `D_i`; all flow drains into one
//! `SINK`. Redistributed vehicles arriving in cluster `i` from `L_j` join a
//! chain of mixing trip vertices after `K_i`, ordered by arrival time, and
//! each vertex of the chain sees the slice `phi` of the epoch's demand that
//! remains before the next arrival.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::scenario::{FleetState, Matrix, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    A,
    K,
    L,
    M,
    C,
    D,
    Sink,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexId {
    pub layer: Layer,
    pub cluster: Option<usize>,
    /// Source clusters whose redistributed vehicles have joined, in arrival
    /// order. Empty except for mixing trip vertices.
    pub mixing_seq: Vec<usize>,
}

impl VertexId {
    fn new(layer: Layer, cluster: usize) -> Self {
        VertexId {
            layer,
            cluster: Some(cluster),
            mixing_seq: Vec::new(),
        }
    }

    fn sink() -> Self {
        VertexId {
            layer: Layer::Sink,
            cluster: None,
            mixing_seq: Vec::new(),
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.layer, self.cluster) {
            (Layer::Sink, _) | (_, None) => write!(f, "SINK"),
            (layer, Some(c)) => {
                write!(f, "{layer:?}{c}")?;
                for s in &self.mixing_seq {
                    write!(f, "+{s}")?;
                }
                Ok(())
            }
        }
    }
}

/// Cost class of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    /// Trip edge, non-linear revenue-minus-cost `h`.
    Trip,
    /// Next-period trip edge, non-linear `f`.
    FutureTrip,
    /// Empty relocation, linear in travel time.
    Redistribution,
    /// Idle vehicle, linear in the idle cost.
    Idle,
    /// Free structural edge.
    Zero,
}

impl EdgeClass {
    /// Single-letter code used in dumps.
    pub fn code(self) -> char {
        match self {
            EdgeClass::Trip => 'A',
            EdgeClass::FutureTrip => 'B',
            EdgeClass::Redistribution => 'C',
            EdgeClass::Idle => 'D',
            EdgeClass::Zero => 'E',
        }
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, EdgeClass::Trip | EdgeClass::FutureTrip)
    }
}

/// Structural role of an edge; finer than its cost class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeRole {
    /// `A_i -> {K_i, L_i, M_i}`.
    Dispatch,
    /// Trip vertex to `C_m`.
    Trip,
    /// Between consecutive trip vertices of one cluster.
    Chain,
    /// `L_j ->` mixing vertex in another cluster.
    Relocate,
    /// `M_i -> C_i`.
    Idle,
    /// Last mixing vertex of a cluster to its own `C`.
    Overflow,
    /// `C_i -> D_i`.
    Carry,
    /// `C_i -> SINK`.
    Release,
    /// `D_i -> SINK`.
    Future,
}

impl EdgeRole {
    pub fn class(self) -> EdgeClass {
        match self {
            EdgeRole::Trip => EdgeClass::Trip,
            EdgeRole::Future => EdgeClass::FutureTrip,
            EdgeRole::Relocate => EdgeClass::Redistribution,
            EdgeRole::Idle | EdgeRole::Overflow => EdgeClass::Idle,
            EdgeRole::Dispatch | EdgeRole::Chain | EdgeRole::Carry | EdgeRole::Release => {
                EdgeClass::Zero
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub role: EdgeRole,
    pub lower: i64,
    /// `None` is unbounded.
    pub upper: Option<i64>,
    /// Demand factor, trip edges only.
    pub phi: Option<f64>,
    /// Origin and destination clusters used to price the edge. Future-trip
    /// edges carry `(i, i)`.
    pub od: Option<(usize, usize)>,
}

impl EdgeRecord {
    pub fn class(&self) -> EdgeClass {
        self.role.class()
    }
}

/// Redistribution arrivals into one cluster and the demand slices they
/// induce.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSchedule {
    /// `(source cluster, arrival minute clipped to the epoch)`, ascending.
    pub arrivals: Vec<(usize, f64)>,
    /// `phi[0]` belongs to the native trip vertex, `phi[k]` to the vertex
    /// after the k-th arrival. Sums to one.
    pub phi: Vec<f64>,
}

/// Orders arrivals into `cluster` by current-epoch travel time (ties by
/// source index, times clipped to `tau`) and splits the epoch into demand
/// slices between consecutive arrivals.
pub fn arrival_schedule(cluster: usize, travel_time: &Matrix, tau: f64) -> ArrivalSchedule {
    let mut arrivals: Vec<(usize, f64)> = (0..travel_time.len())
        .filter(|&j| j != cluster)
        .map(|j| (j, travel_time[j][cluster].min(tau)))
        .collect();
    arrivals.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut phi = Vec::with_capacity(arrivals.len() + 1);
    let mut prev = 0.0;
    for &(_, t) in &arrivals {
        phi.push((t - prev) / tau);
        prev = t;
    }
    phi.push((tau - prev) / tau);
    ArrivalSchedule { arrivals, phi }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationGraph {
    pub cluster_count: usize,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeRecord>,
    pub balance: Vec<i64>,
    /// Per cluster, the trip vertices in chain order (native first).
    pub trip_chain: Vec<Vec<usize>>,
    pub schedules: Vec<ArrivalSchedule>,
    pub sink: Option<usize>,
}

struct Builder {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeRecord>,
}

impl Builder {
    fn vertex(&mut self, v: VertexId) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize, role: EdgeRole, od: Option<(usize, usize)>) -> usize {
        self.edges.push(EdgeRecord {
            from,
            to,
            role,
            lower: 0,
            upper: None,
            phi: None,
            od,
        });
        self.edges.len() - 1
    }
}

impl AllocationGraph {
    /// The untransformed multi-sink skeleton: `A`, `K`, `L`, `M`, `C` per
    /// cluster with direct `L -> C` redistribution edges, no mixing, no `D`
    /// layer and no sink. Balances are all zero. Used for structure checks
    /// only; it is not solvable as posed.
    pub fn base_skeleton(cluster_count: usize) -> Self {
        let n = cluster_count;
        let mut b = Builder {
            vertices: Vec::new(),
            edges: Vec::new(),
        };
        let layer_ids = |b: &mut Builder, layer| -> Vec<usize> {
            (0..n).map(|i| b.vertex(VertexId::new(layer, i))).collect()
        };
        let a = layer_ids(&mut b, Layer::A);
        let k = layer_ids(&mut b, Layer::K);
        let l = layer_ids(&mut b, Layer::L);
        let m = layer_ids(&mut b, Layer::M);
        let c = layer_ids(&mut b, Layer::C);
        for i in 0..n {
            b.edge(a[i], k[i], EdgeRole::Dispatch, None);
            b.edge(a[i], l[i], EdgeRole::Dispatch, None);
            b.edge(a[i], m[i], EdgeRole::Dispatch, None);
        }
        for i in 0..n {
            for j in 0..n {
                b.edge(k[i], c[j], EdgeRole::Trip, Some((i, j)));
                if i != j {
                    b.edge(l[i], c[j], EdgeRole::Relocate, Some((i, j)));
                }
            }
            b.edge(m[i], c[i], EdgeRole::Idle, Some((i, i)));
        }
        let balance = vec![0; b.vertices.len()];
        AllocationGraph {
            cluster_count: n,
            vertices: b.vertices,
            edges: b.edges,
            balance,
            trip_chain: k.iter().map(|&v| vec![v]).collect(),
            schedules: Vec::new(),
            sink: None,
        }
    }

    /// Builds the single-sink allocation network with intra-epoch mixing.
    pub fn build(scenario: &Scenario, fleet: &FleetState) -> Result<Self> {
        fleet.check_dims(scenario)?;
        let n = scenario.cluster_count;
        let tau = scenario.econ.epoch_length;
        let mut b = Builder {
            vertices: Vec::new(),
            edges: Vec::new(),
        };
        let layer_ids = |b: &mut Builder, layer| -> Vec<usize> {
            (0..n).map(|i| b.vertex(VertexId::new(layer, i))).collect()
        };
        let a = layer_ids(&mut b, Layer::A);
        let k = layer_ids(&mut b, Layer::K);
        let l = layer_ids(&mut b, Layer::L);
        let m = layer_ids(&mut b, Layer::M);
        let c = layer_ids(&mut b, Layer::C);
        let d = layer_ids(&mut b, Layer::D);

        let schedules: Vec<ArrivalSchedule> = (0..n)
            .map(|i| arrival_schedule(i, &scenario.travel_time[0], tau))
            .collect();
        let mut trip_chain = Vec::with_capacity(n);
        for (i, sched) in schedules.iter().enumerate() {
            let mut chain = vec![k[i]];
            let mut seq = Vec::new();
            for &(src, _) in &sched.arrivals {
                seq.push(src);
                chain.push(b.vertex(VertexId {
                    layer: Layer::K,
                    cluster: Some(i),
                    mixing_seq: seq.clone(),
                }));
            }
            trip_chain.push(chain);
        }
        let sink = b.vertex(VertexId::sink());

        for i in 0..n {
            b.edge(a[i], k[i], EdgeRole::Dispatch, None);
            b.edge(a[i], l[i], EdgeRole::Dispatch, None);
            b.edge(a[i], m[i], EdgeRole::Dispatch, None);
        }
        for i in 0..n {
            for (pos, &kv) in trip_chain[i].iter().enumerate() {
                for (dest, &cv) in c.iter().enumerate() {
                    let e = b.edge(kv, cv, EdgeRole::Trip, Some((i, dest)));
                    b.edges[e].phi = Some(schedules[i].phi[pos]);
                }
            }
        }
        for chain in &trip_chain {
            for w in chain.windows(2) {
                b.edge(w[0], w[1], EdgeRole::Chain, None);
            }
        }
        for i in 0..n {
            for (pos, &(src, _)) in schedules[i].arrivals.iter().enumerate() {
                b.edge(l[src], trip_chain[i][pos + 1], EdgeRole::Relocate, Some((src, i)));
            }
        }
        for i in 0..n {
            b.edge(m[i], c[i], EdgeRole::Idle, Some((i, i)));
        }
        for i in 0..n {
            if trip_chain[i].len() > 1 {
                let last = *trip_chain[i].last().unwrap();
                b.edge(last, c[i], EdgeRole::Overflow, Some((i, i)));
            }
        }
        for i in 0..n {
            b.edge(c[i], d[i], EdgeRole::Carry, None);
        }
        for i in 0..n {
            b.edge(c[i], sink, EdgeRole::Release, None);
        }
        for i in 0..n {
            b.edge(d[i], sink, EdgeRole::Future, Some((i, i)));
        }

        let mut balance = vec![0i64; b.vertices.len()];
        for i in 0..n {
            balance[a[i]] = fleet.supply[i];
        }
        balance[sink] = -fleet.total();

        Ok(AllocationGraph {
            cluster_count: n,
            vertices: b.vertices,
            edges: b.edges,
            balance,
            trip_chain,
            schedules,
            sink: Some(sink),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Index of the plain (non-mixing) vertex of `layer` in `cluster`.
    pub fn find(&self, layer: Layer, cluster: usize) -> Option<usize> {
        self.vertices.iter().position(|v| {
            v.layer == layer && v.cluster == Some(cluster) && v.mixing_seq.is_empty()
        })
    }

    /// Kahn's algorithm; `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.vertices.len();
        let mut indeg = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            indeg[e.to] += 1;
            out[e.from].push(e.to);
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Checks bounds on every edge and conservation (out minus in equals
    /// balance) at every vertex.
    pub fn validate_flow(&self, flow: &[i64]) -> std::result::Result<(), Vec<FlowViolation>> {
        let mut violations = Vec::new();
        if flow.len() != self.edges.len() {
            violations.push(FlowViolation::Length {
                expected: self.edges.len(),
                found: flow.len(),
            });
            return Err(violations);
        }
        let mut net = vec![0i64; self.vertices.len()];
        for (idx, (e, &x)) in self.edges.iter().zip(flow).enumerate() {
            if x < e.lower || e.upper.is_some_and(|u| x > u) {
                violations.push(FlowViolation::Bound {
                    edge: idx,
                    flow: x,
                    lower: e.lower,
                    upper: e.upper,
                });
            }
            net[e.from] += x;
            net[e.to] -= x;
        }
        for (v, (&got, &want)) in net.iter().zip(&self.balance).enumerate() {
            if got != want {
                violations.push(FlowViolation::Conservation {
                    vertex: v,
                    name: self.vertices[v].to_string(),
                    balance: want,
                    net_outflow: got,
                });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Writes `from,to,class,l,u,phi` per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "from,to,class,l,u,phi")?;
        for e in &self.edges {
            let u = e.upper.map_or("inf".to_string(), |u| u.to_string());
            let phi = e.phi.map_or(String::new(), |p| format!("{p}"));
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.vertices[e.from],
                self.vertices[e.to],
                e.class().code(),
                e.lower,
                u,
                phi
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowViolation {
    Length { expected: usize, found: usize },
    Bound { edge: usize, flow: i64, lower: i64, upper: Option<i64> },
    Conservation { vertex: usize, name: String, balance: i64, net_outflow: i64 },
}
