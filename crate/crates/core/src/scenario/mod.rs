//! Problem data: clusters, two epochs of demand and travel times, economics
//! and fleet supply, plus ingestion from raw trip records.

mod ingest;
mod kmeans;
mod noise;
pub mod synthetic;

pub use ingest::{
    haversine_km, ingest_trips, read_trips, travel_time_matrix, write_trips, IngestOptions,
    ScenarioFragment, TripRecord,
};
pub use kmeans::{kmeans, KMeans};
pub use noise::perturb_demand;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major square matrix indexed `[origin][destination]`.
pub type Matrix = Vec<Vec<f64>>;

/// The two look-ahead periods the allocation model reasons about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Epoch {
    /// The commencing period (`t = 1`).
    Current,
    /// The subsequent period (`t = 2`).
    Next,
}

impl Epoch {
    pub fn index(self) -> usize {
        match self {
            Epoch::Current => 0,
            Epoch::Next => 1,
        }
    }
}

/// Operator and traveller economics. Times are in minutes, money in a single
/// currency unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicParams {
    /// Mean value of time of travellers (currency/min).
    pub value_of_time: f64,
    /// Fare per minute of in-vehicle travel (currency/min).
    pub price_rate: f64,
    /// Cost of a moving vehicle (currency/min).
    pub moving_cost: f64,
    /// Cost of an idle vehicle (currency/epoch).
    pub idle_cost: f64,
    /// Fixed wait time of the competing service (min).
    pub alt_wait: f64,
    /// Wait-curve coefficient: wait = alpha * demand / (supply + 1) (min per traveller).
    pub alpha: f64,
    /// Decision epoch length (min).
    pub epoch_length: f64,
}

impl EconomicParams {
    /// Values used for the Manhattan case study: UK value of time and
    /// vehicle cost converted to per-minute rates, 1.00/min fares, a 5 minute
    /// competitor wait, 30 minute epochs and alpha = 0.75.
    pub fn case_study() -> Self {
        EconomicParams {
            value_of_time: 17.69 / 60.0,
            price_rate: 1.00,
            moving_cost: 12.96 / 60.0,
            idle_cost: 1.0,
            alt_wait: 5.0,
            alpha: 0.75,
            epoch_length: 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("value_of_time", self.value_of_time),
            ("price_rate", self.price_rate),
            ("moving_cost", self.moving_cost),
            ("idle_cost", self.idle_cost),
            ("alt_wait", self.alt_wait),
            ("alpha", self.alpha),
            ("epoch_length", self.epoch_length),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    format!("econ.{name}"),
                    format!("must be finite and strictly positive, got {v}"),
                ));
            }
        }
        if self.price_rate <= self.moving_cost {
            return Err(Error::invalid("econ.price_rate", "p must exceed C_M"));
        }
        if self.alpha >= self.alt_wait {
            return Err(Error::invalid("econ.alpha", "alpha must be below alt_wait"));
        }
        Ok(())
    }
}

/// A validated problem instance. Immutable once built; share freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cluster_count: usize,
    /// `[lon, lat]` per cluster.
    pub centroids: Vec<[f64; 2]>,
    /// Expected travellers per epoch, `demand[t][i][j]` for `t` in {current, next}.
    pub demand: [Matrix; 2],
    /// Travel time in minutes, `travel_time[t][i][j]`.
    pub travel_time: [Matrix; 2],
    pub econ: EconomicParams,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Scenario {
    /// Validates and wraps the parts into a scenario.
    pub fn new(
        centroids: Vec<[f64; 2]>,
        demand: [Matrix; 2],
        travel_time: [Matrix; 2],
        econ: EconomicParams,
        rng_seed: u64,
    ) -> Result<Self> {
        let s = Scenario {
            cluster_count: centroids.len(),
            centroids,
            demand,
            travel_time,
            econ,
            rng_seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cluster_count;
        if n == 0 {
            return Err(Error::invalid("cluster_count", "must be at least 1"));
        }
        if self.centroids.len() != n {
            return Err(Error::invalid(
                "centroids",
                format!("expected {n} entries, found {}", self.centroids.len()),
            ));
        }
        for (i, c) in self.centroids.iter().enumerate() {
            if !(c[0].is_finite() && c[1].is_finite()) {
                return Err(Error::invalid(format!("centroids[{i}]"), "must be finite"));
            }
        }
        for t in 0..2 {
            check_matrix(&self.demand[t], n, &format!("demand[{t}]"), |v| {
                v.is_finite() && v >= 0.0
            }, "must be finite and non-negative")?;
            check_matrix(&self.travel_time[t], n, &format!("travel_time[{t}]"), |v| {
                v.is_finite() && v > 0.0
            }, "must be finite and strictly positive")?;
        }
        self.econ.validate()
    }

    pub fn demand(&self, t: Epoch, i: usize, j: usize) -> f64 {
        self.demand[t.index()][i][j]
    }

    pub fn travel_time(&self, t: Epoch, i: usize, j: usize) -> f64 {
        self.travel_time[t.index()][i][j]
    }

    /// Mean utility of the single competing service: same fare and travel
    /// time, fixed wait `alt_wait`.
    pub fn alt_utility(&self, t: Epoch, i: usize, j: usize) -> f64 {
        let r = self.travel_time(t, i, j);
        let e = &self.econ;
        -e.value_of_time * (e.alt_wait + r) - e.price_rate * r
    }

    /// Parses and validates a JSON scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::invalid(path, e.into_inner().to_string())
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Returns a copy with the epoch length and/or alpha replaced.
    pub fn with_overrides(&self, tau: Option<f64>, alpha: Option<f64>) -> Result<Self> {
        let mut s = self.clone();
        if let Some(tau) = tau {
            s.econ.epoch_length = tau;
        }
        if let Some(alpha) = alpha {
            s.econ.alpha = alpha;
        }
        s.validate()?;
        Ok(s)
    }

    /// Returns a copy with both demand epochs replaced.
    pub fn with_demand(&self, current: Matrix, next: Matrix) -> Result<Self> {
        let mut s = self.clone();
        s.demand = [current, next];
        s.validate()?;
        Ok(s)
    }
}

/// Reads a scenario file from disk.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    Scenario::from_json(text)
}

fn check_matrix(
    m: &Matrix,
    n: usize,
    path: &str,
    ok: impl Fn(f64) -> bool,
    what: &str,
) -> Result<()> {
    if m.len() != n {
        return Err(Error::invalid(
            path,
            format!("expected {n} rows, found {}", m.len()),
        ));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid(
                format!("{path}[{i}]"),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
        for (j, &v) in row.iter().enumerate() {
            if !ok(v) {
                return Err(Error::invalid(format!("{path}[{i}][{j}]"), format!("{what}, got {v}")));
            }
        }
    }
    Ok(())
}

/// Vehicles available per cluster at the start of the commencing epoch,
/// including those about to become free there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetState {
    pub supply: Vec<i64>,
}

impl FleetState {
    pub fn new(supply: Vec<i64>) -> Result<Self> {
        if let Some((i, &s)) = supply.iter().enumerate().find(|(_, &s)| s < 0) {
            return Err(Error::invalid(format!("supply[{i}]"), format!("must be non-negative, got {s}")));
        }
        Ok(FleetState { supply })
    }

    pub fn total(&self) -> i64 {
        self.supply.iter().sum()
    }

    pub fn check_dims(&self, scenario: &Scenario) -> Result<()> {
        if self.supply.len() != scenario.cluster_count {
            return Err(Error::invalid(
                "supply",
                format!(
                    "expected {} entries, found {}",
                    scenario.cluster_count,
                    self.supply.len()
                ),
            ));
        }
        Ok(())
    }
}
