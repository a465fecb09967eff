//! Edge cost functions and their convex replacements.
//!
//! Trip edges (`h`) and next-period edges (`f`) have sigmoid-driven costs
//! that are concave for small supply and convex up to their minimum. Each
//! such curve is scanned on the integer grid for its minimiser `x*` and the
//! end `x'` of its concave prefix; the prefix is replaced by the tangent at
//! `x'` and the edge is capped at `x*`.

use std::io::Write;

use crate::choice::{demand_curve, ChoiceInputs};
use crate::error::{Error, Result};
use crate::graph::{AllocationGraph, EdgeRole};
use crate::par::{self, Execution};
use crate::scenario::{EconomicParams, Epoch, Scenario};

/// Demand, travel time and competitor utility of one OD pair in one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdTerm {
    pub demand: f64,
    pub travel_time: f64,
    pub alt_utility: f64,
}

impl OdTerm {
    pub fn from_scenario(s: &Scenario, t: Epoch, i: usize, j: usize) -> Self {
        OdTerm {
            demand: s.demand(t, i, j),
            travel_time: s.travel_time(t, i, j),
            alt_utility: s.alt_utility(t, i, j),
        }
    }

    fn riders(&self, econ: &EconomicParams, supply: f64) -> f64 {
        let inputs = ChoiceInputs {
            demand: self.demand,
            travel_time: self.travel_time,
            alt_utility: self.alt_utility,
            econ,
        };
        demand_curve(&inputs, supply)
    }

    /// `-N(x) p r + C_M r x`, with `N` scaled by `phi` and evaluated at
    /// `x / share_div`.
    fn cost(&self, econ: &EconomicParams, phi: f64, x: f64, share_div: f64) -> f64 {
        let r = self.travel_time;
        -phi * self.riders(econ, x / share_div) * econ.price_rate * r + econ.moving_cost * r * x
    }

    /// Supply beyond which the term is strictly increasing. The logit slope
    /// is at most `q(1-q) <= 1/4` times the wait sensitivity, which bounds
    /// the revenue gradient and gives a closed form.
    fn increasing_beyond(&self, econ: &EconomicParams, phi: f64, share_div: f64) -> f64 {
        let k = phi * econ.price_rate * econ.value_of_time * econ.alpha
            / (4.0 * econ.moving_cost * share_div);
        share_div * self.demand * k.sqrt()
    }
}

/// A non-linear edge cost as a function of integer supply.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    /// `h(x) = -phi N1(x) p r1 + C_M r1 x`.
    Trip { term: OdTerm, phi: f64 },
    /// `f(x) = sum_m (-N2_m(x / J) p r2_m + C_M r2_m x)`.
    Future { terms: Vec<OdTerm> },
}

impl Curve {
    pub fn eval(&self, econ: &EconomicParams, x: f64) -> f64 {
        match self {
            Curve::Trip { term, phi } => term.cost(econ, *phi, x, 1.0),
            Curve::Future { terms } => {
                let div = terms.len() as f64;
                terms.iter().map(|t| t.cost(econ, 1.0, x, div)).sum()
            }
        }
    }

    fn increasing_beyond(&self, econ: &EconomicParams) -> f64 {
        match self {
            Curve::Trip { term, phi } => term.increasing_beyond(econ, *phi, 1.0),
            Curve::Future { terms } => {
                let div = terms.len() as f64;
                terms
                    .iter()
                    .map(|t| t.increasing_beyond(econ, 1.0, div))
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Supply scale used for the default search cap.
    fn demand_scale(&self) -> f64 {
        match self {
            Curve::Trip { term, .. } => term.demand,
            Curve::Future { terms } => {
                terms.len() as f64 * terms.iter().map(|t| t.demand).fold(0.0, f64::max)
            }
        }
    }

    /// Search cap: `max(3 ceil(Z), 50)`, raised to where the curve is
    /// provably increasing.
    pub fn search_cap(&self, econ: &EconomicParams) -> i64 {
        let default = (3.0 * self.demand_scale().ceil()).max(50.0);
        let bound = self.increasing_beyond(econ).ceil() + 1.0;
        default.max(bound) as i64
    }
}

pub fn trip_cost_h(term: &OdTerm, phi: f64, x: f64, econ: &EconomicParams) -> f64 {
    Curve::Trip { term: *term, phi }.eval(econ, x)
}

pub fn future_cost_f(terms: &[OdTerm], x: f64, econ: &EconomicParams) -> f64 {
    Curve::Future {
        terms: terms.to_vec(),
    }
    .eval(econ, x)
}

pub fn redistribution_cost(travel_time: f64, x: f64, econ: &EconomicParams) -> f64 {
    travel_time * econ.moving_cost * x
}

pub fn idle_cost(x: f64, econ: &EconomicParams) -> f64 {
    econ.idle_cost * x
}

fn inflection_tol(c: f64) -> f64 {
    1e-9 * c.abs().max(1.0)
}

/// Locates `(x', x*)` on the sampled curve `values[x]`, `x = 0..=X_max`.
///
/// `x*` is the smallest integer argmin. `x'` is one past the last point
/// below `x*` with a negative central second difference, clamped to
/// `x* - 1`; zero if the curve has no concave stretch before `x*`. Fails
/// when the curve is not increasing at `X_max`.
pub fn locate_breakpoints(values: &[f64], od: (usize, usize)) -> Result<(i64, i64)> {
    let cap = values.len() as i64 - 1;
    if values.len() < 2 || values[values.len() - 1] - values[values.len() - 2] <= 0.0 {
        return Err(Error::NotBracketed { od, cap });
    }
    let mut x_star = 0;
    for (x, &v) in values.iter().enumerate() {
        if v < values[x_star] {
            x_star = x;
        }
    }
    let mut x_prime = 0;
    for x in (1..x_star).rev() {
        let d2 = values[x + 1] - 2.0 * values[x] + values[x - 1];
        if d2 < -inflection_tol(values[x]) {
            x_prime = (x + 1).min(x_star - 1);
            break;
        }
    }
    Ok((x_prime as i64, x_star as i64))
}

/// A non-linear edge with its concave prefix replaced by a tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProfile {
    pub curve: Curve,
    pub econ: EconomicParams,
    pub x_prime: i64,
    pub x_star: i64,
    /// Slope of the tangent on `[0, x']`: the forward difference at `x'`.
    pub tangent_slope: f64,
    pub search_cap: i64,
}

impl ConvexProfile {
    /// Samples the curve up to its search cap and convexifies it.
    pub fn build(curve: Curve, econ: &EconomicParams, od: (usize, usize)) -> Result<Self> {
        let cap = curve.search_cap(econ);
        let values: Vec<f64> = (0..=cap).map(|x| curve.eval(econ, x as f64)).collect();
        let (x_prime, x_star) = locate_breakpoints(&values, od)?;
        let tangent_slope = if x_prime < x_star {
            values[x_prime as usize + 1] - values[x_prime as usize]
        } else {
            0.0
        };
        Ok(ConvexProfile {
            curve,
            econ: econ.clone(),
            x_prime,
            x_star,
            tangent_slope,
            search_cap: cap,
        })
    }

    pub fn original(&self, x: i64) -> f64 {
        self.curve.eval(&self.econ, x as f64)
    }

    /// Tangent line at `x'`.
    pub fn tangent(&self, x: i64) -> f64 {
        self.tangent_slope * (x - self.x_prime) as f64 + self.original(self.x_prime)
    }

    /// Convexified cost on `[0, x*]`: the tangent up to `x'`, the curve
    /// after. `None` outside the domain.
    pub fn convexified(&self, x: i64) -> Option<f64> {
        if x < 0 || x > self.x_star {
            None
        } else if x <= self.x_prime {
            Some(self.tangent(x))
        } else {
            Some(self.original(x))
        }
    }

    /// Edge capacity. Zero closes the edge.
    pub fn upper(&self) -> i64 {
        self.x_star
    }

    pub fn write_curve<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,c(x),cC(x)")?;
        for x in 0..=self.search_cap {
            let cc = self.convexified(x).map_or(String::new(), |v| format!("{v}"));
            writeln!(w, "{x},{},{cc}", self.original(x))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    Trip,
    Future,
    Redistribution,
    Idle,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCost {
    /// `slope * x`, unbounded.
    Linear { slope: f64 },
    Convex(ConvexProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCostProfile {
    pub edge: usize,
    pub kind: CostKind,
    pub od: Option<(usize, usize)>,
    pub epoch: Epoch,
    pub phi: Option<f64>,
    pub cost: EdgeCost,
}

impl EdgeCostProfile {
    /// The cost the min-cost-flow actually optimises.
    pub fn convexified(&self, x: i64) -> Option<f64> {
        match &self.cost {
            EdgeCost::Linear { slope } => Some(slope * x as f64),
            EdgeCost::Convex(p) => p.convexified(x),
        }
    }

    /// The untransformed cost.
    pub fn original(&self, x: i64) -> f64 {
        match &self.cost {
            EdgeCost::Linear { slope } => slope * x as f64,
            EdgeCost::Convex(p) => p.original(x),
        }
    }

    pub fn upper(&self) -> Option<i64> {
        match &self.cost {
            EdgeCost::Linear { .. } => None,
            EdgeCost::Convex(p) => Some(p.upper()),
        }
    }
}

/// Builds the cost profile of one edge of `graph`.
pub fn edge_profile(graph: &AllocationGraph, scenario: &Scenario, edge: usize) -> Result<EdgeCostProfile> {
    let e = &graph.edges[edge];
    let econ = &scenario.econ;
    let linear = |kind, slope| EdgeCostProfile {
        edge,
        kind,
        od: e.od,
        epoch: Epoch::Current,
        phi: e.phi,
        cost: EdgeCost::Linear { slope },
    };
    Ok(match e.role {
        EdgeRole::Trip => {
            let (i, m) = e.od.expect("trip edge has od");
            let term = OdTerm::from_scenario(scenario, Epoch::Current, i, m);
            let phi = e.phi.expect("trip edge has phi");
            let profile = if phi > 0.0 {
                ConvexProfile::build(Curve::Trip { term, phi }, econ, (i, m))?
            } else {
                ConvexProfile {
                    curve: Curve::Trip { term, phi },
                    econ: econ.clone(),
                    x_prime: 0,
                    x_star: 0,
                    tangent_slope: 0.0,
                    search_cap: 0,
                }
            };
            EdgeCostProfile {
                edge,
                kind: CostKind::Trip,
                od: e.od,
                epoch: Epoch::Current,
                phi: e.phi,
                cost: EdgeCost::Convex(profile),
            }
        }
        EdgeRole::Future => {
            let (i, _) = e.od.expect("future edge has od");
            let terms = (0..scenario.cluster_count)
                .map(|m| OdTerm::from_scenario(scenario, Epoch::Next, i, m))
                .collect();
            let profile = ConvexProfile::build(Curve::Future { terms }, econ, (i, i))?;
            EdgeCostProfile {
                edge,
                kind: CostKind::Future,
                od: e.od,
                epoch: Epoch::Next,
                phi: None,
                cost: EdgeCost::Convex(profile),
            }
        }
        EdgeRole::Relocate => {
            let (j, i) = e.od.expect("relocation edge has od");
            linear(
                CostKind::Redistribution,
                redistribution_cost(scenario.travel_time(Epoch::Current, j, i), 1.0, econ),
            )
        }
        EdgeRole::Idle | EdgeRole::Overflow => linear(CostKind::Idle, idle_cost(1.0, econ)),
        EdgeRole::Dispatch | EdgeRole::Chain | EdgeRole::Carry | EdgeRole::Release => {
            linear(CostKind::Zero, 0.0)
        }
    })
}

/// Builds every edge profile, independently per edge.
pub fn build_profiles(
    graph: &AllocationGraph,
    scenario: &Scenario,
    exec: Execution,
) -> Result<Vec<EdgeCostProfile>> {
    let edges: Vec<usize> = (0..graph.edge_count()).collect();
    par::try_map(exec, &edges, |&e| edge_profile(graph, scenario, e))
}
