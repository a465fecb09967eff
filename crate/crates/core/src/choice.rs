//! Wait time, generalized cost and logit share of the ride-sourcing service
//! as functions of vehicle supply.

use crate::scenario::{EconomicParams, Epoch, Scenario};

/// Expected pickup wait in minutes for `demand` travellers served by
/// `supply` vehicles: `alpha * demand / (supply + 1)`.
pub fn wait_time(alpha: f64, demand: f64, supply: f64) -> f64 {
    alpha * demand / (supply + 1.0)
}

/// Mean utility of a ride with the given wait and in-vehicle time.
pub fn generalized_cost(wait: f64, travel_time: f64, econ: &EconomicParams) -> f64 {
    -econ.value_of_time * (wait + travel_time) - econ.price_rate * travel_time
}

/// Logit probability of choosing the option with utility `g` over the
/// `alternatives`. Evaluated after subtracting the largest utility, so only
/// utility gaps beyond ~700 saturate to exactly 0 or 1.
pub fn choice_probability(g: f64, alternatives: &[f64]) -> f64 {
    let m = alternatives.iter().copied().fold(g, f64::max);
    let own = (g - m).exp();
    let others: f64 = alternatives.iter().map(|u| (u - m).exp()).sum();
    own / (own + others)
}

pub fn expected_travelers(q: f64, demand: f64) -> f64 {
    q * demand
}

/// Everything needed to evaluate the demand curve of one OD pair and epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceInputs<'a> {
    pub demand: f64,
    pub travel_time: f64,
    pub alt_utility: f64,
    pub econ: &'a EconomicParams,
}

impl<'a> ChoiceInputs<'a> {
    pub fn from_scenario(s: &'a Scenario, t: Epoch, i: usize, j: usize) -> Self {
        ChoiceInputs {
            demand: s.demand(t, i, j),
            travel_time: s.travel_time(t, i, j),
            alt_utility: s.alt_utility(t, i, j),
            econ: &s.econ,
        }
    }

    /// Share of travellers choosing the service when `supply` vehicles are
    /// available.
    pub fn share(&self, supply: f64) -> f64 {
        let w = wait_time(self.econ.alpha, self.demand, supply);
        let g = generalized_cost(w, self.travel_time, self.econ);
        choice_probability(g, &[self.alt_utility])
    }

    /// Limit share as supply grows without bound (zero wait).
    pub fn max_share(&self) -> f64 {
        let g = generalized_cost(0.0, self.travel_time, self.econ);
        choice_probability(g, &[self.alt_utility])
    }
}

/// Expected riders `N(x) = q(g(w(x))) * Z`. Sigmoid-shaped and
/// non-decreasing in `supply`.
pub fn demand_curve(inputs: &ChoiceInputs<'_>, supply: f64) -> f64 {
    expected_travelers(inputs.share(supply), inputs.demand)
}
