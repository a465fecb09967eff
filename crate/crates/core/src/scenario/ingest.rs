use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, nearest};
use super::{EconomicParams, Matrix, Scenario};
use crate::error::{Error, Result};

/// One historical trip. Times in minutes since midnight, coordinates in
/// degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pickup_min: f64,
    pub pickup_lon: f64,
    pub pickup_lat: f64,
    pub dropoff_lon: f64,
    pub dropoff_lat: f64,
}

impl TripRecord {
    fn pickup(&self) -> [f64; 2] {
        [self.pickup_lon, self.pickup_lat]
    }

    fn dropoff(&self) -> [f64; 2] {
        [self.dropoff_lon, self.dropoff_lat]
    }

    fn validate(&self, row: usize) -> Result<()> {
        let coords = [self.pickup_lon, self.pickup_lat, self.dropoff_lon, self.dropoff_lat];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("trips[{row}]"), "coordinates must be finite"));
        }
        if !(self.pickup_min.is_finite() && self.pickup_min >= 0.0) {
            return Err(Error::invalid(format!("trips[{row}].pickup_min"), "must be >= 0"));
        }
        Ok(())
    }
}

/// Reads comma-separated trips with header
/// `pickup_min,pickup_lon,pickup_lat,dropoff_lon,dropoff_lat`.
pub fn read_trips<R: Read>(reader: R) -> Result<Vec<TripRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_trips<W: Write>(writer: W, trips: &[TripRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in trips {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    /// Number of clusters.
    pub k: usize,
    /// Epoch length in minutes.
    pub epoch_length: f64,
    /// Start of the first epoch, minutes since midnight.
    pub epoch_start: f64,
    /// Free-flow speed used to turn centroid distances into minutes.
    pub speed_kmh: f64,
    /// Fractional speed penalty per epoch (0.2 = 20% slower).
    pub congestion_penalty: [f64; 2],
    /// Lower bound on every travel time, including intra-cluster trips.
    pub min_travel_time: f64,
    pub seed: u64,
    pub max_iterations: usize,
}

impl IngestOptions {
    pub fn new(k: usize, epoch_length: f64, epoch_start: f64) -> Self {
        IngestOptions {
            k,
            epoch_length,
            epoch_start,
            speed_kmh: 20.0,
            congestion_penalty: [0.0, 0.0],
            min_travel_time: 3.0,
            seed: 0,
            max_iterations: 100,
        }
    }
}

/// The data-derived part of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFragment {
    pub centroids: Vec<[f64; 2]>,
    pub demand: [Matrix; 2],
    pub travel_time: [Matrix; 2],
    /// Cluster of each input record's pickup.
    pub pickup_cluster: Vec<usize>,
}

impl ScenarioFragment {
    pub fn into_scenario(self, econ: EconomicParams, rng_seed: u64) -> Result<Scenario> {
        Scenario::new(self.centroids, self.demand, self.travel_time, econ, rng_seed)
    }
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance between two `[lon, lat]` points in degrees.
pub fn haversine_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Centroid-to-centroid minutes at `speed_kmh * (1 - penalty)`, floored at
/// `min_minutes`.
pub fn travel_time_matrix(
    centroids: &[[f64; 2]],
    speed_kmh: f64,
    penalty: f64,
    min_minutes: f64,
) -> Matrix {
    let speed = speed_kmh * (1.0 - penalty);
    centroids
        .iter()
        .map(|&a| {
            centroids
                .iter()
                .map(|&b| (haversine_km(a, b) / speed * 60.0).max(min_minutes))
                .collect()
        })
        .collect()
}

/// Clusters pickups with k-means and aggregates trips into two epochs of
/// origin-destination demand.
pub fn ingest_trips(records: &[TripRecord], opts: &IngestOptions) -> Result<ScenarioFragment> {
    if opts.k < 2 {
        return Err(Error::invalid("k", "must be at least 2"));
    }
    if !(opts.epoch_length.is_finite() && opts.epoch_length > 0.0) {
        return Err(Error::invalid("tau", "must be strictly positive"));
    }
    if !(opts.speed_kmh.is_finite() && opts.speed_kmh > 0.0) || opts.congestion_penalty.iter().any(|p| !(0.0..1.0).contains(p)) {
        return Err(Error::invalid("speed", "speed must be positive and penalties in [0, 1)"));
    }
    if !(opts.min_travel_time.is_finite() && opts.min_travel_time > 0.0) {
        return Err(Error::invalid("min_travel_time", "must be strictly positive"));
    }
    if records.is_empty() {
        return Err(Error::invalid("trips", "no trip records"));
    }
    for (row, r) in records.iter().enumerate() {
        r.validate(row)?;
    }

    let pickups: Vec<[f64; 2]> = records.iter().map(TripRecord::pickup).collect();
    let km = kmeans(&pickups, opts.k, opts.max_iterations, opts.seed)?;
    let k = opts.k;

    let mut demand = [vec![vec![0.0; k]; k], vec![vec![0.0; k]; k]];
    for (rec, &origin) in records.iter().zip(&km.assignment) {
        let offset = rec.pickup_min - opts.epoch_start;
        if offset < 0.0 {
            continue;
        }
        let epoch = (offset / opts.epoch_length).floor();
        if epoch >= 2.0 {
            continue;
        }
        let dest = nearest(&rec.dropoff(), &km.centroids);
        demand[epoch as usize][origin][dest] += 1.0;
    }

    let travel_time = [
        travel_time_matrix(&km.centroids, opts.speed_kmh, opts.congestion_penalty[0], opts.min_travel_time),
        travel_time_matrix(&km.centroids, opts.speed_kmh, opts.congestion_penalty[1], opts.min_travel_time),
    ];
    Ok(ScenarioFragment {
        centroids: km.centroids,
        demand,
        travel_time,
        pickup_cluster: km.assignment,
    })
}
