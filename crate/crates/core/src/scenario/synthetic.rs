//! Generated scenarios for tests, benchmarks and desk-scale experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{travel_time_matrix, EconomicParams, Matrix, Scenario};

const CENTER: [f64; 2] = [-73.98, 40.75];
const KM_PER_DEG_LAT: f64 = 111.195;

fn offset_km(center: [f64; 2], east_km: f64, north_km: f64) -> [f64; 2] {
    let dlat = north_km / KM_PER_DEG_LAT;
    let dlon = east_km / (KM_PER_DEG_LAT * center[1].to_radians().cos());
    [center[0] + dlon, center[1] + dlat]
}

/// A downtown hot spot (cluster 0) surrounded by a ring of residential
/// clusters. Demand leaving the hot spot dominates, so vehicles drain out
/// of it unless redistributed.
#[derive(Debug, Clone, PartialEq)]
pub struct HotSpot {
    pub clusters: usize,
    pub ring_km: f64,
    /// Travellers per epoch from the hot spot to each ring cluster.
    pub outbound: f64,
    /// Travellers per epoch from each ring cluster to the hot spot.
    pub inbound: f64,
    /// Travellers per epoch between two distinct ring clusters, and within
    /// any ring cluster.
    pub background: f64,
    pub speed_kmh: f64,
    pub econ: EconomicParams,
}

impl Default for HotSpot {
    fn default() -> Self {
        HotSpot {
            clusters: 5,
            ring_km: 3.0,
            outbound: 10.0,
            inbound: 2.0,
            background: 1.0,
            speed_kmh: 20.0,
            econ: EconomicParams::case_study(),
        }
    }
}

impl HotSpot {
    pub fn build(&self) -> Scenario {
        let n = self.clusters.max(2);
        let mut centroids = vec![CENTER];
        for k in 0..n - 1 {
            let a = 2.0 * PI * k as f64 / (n - 1) as f64;
            centroids.push(offset_km(CENTER, self.ring_km * a.cos(), self.ring_km * a.sin()));
        }
        let mut z: Matrix = vec![vec![self.background; n]; n];
        z[0][0] = self.outbound / 2.0;
        for j in 1..n {
            z[0][j] = self.outbound;
            z[j][0] = self.inbound;
        }
        let r = travel_time_matrix(&centroids, self.speed_kmh, 0.0, 3.0);
        Scenario::new(centroids, [z.clone(), z], [r.clone(), r], self.econ.clone(), 0)
            .expect("hot-spot parameters are valid")
    }
}

/// Uniformly random clusters in a `span_km` square with demand entries drawn
/// from `[0, max_demand)`.
pub fn random_scenario(clusters: usize, max_demand: f64, span_km: f64, econ: EconomicParams, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids: Vec<[f64; 2]> = (0..clusters)
        .map(|_| {
            offset_km(
                CENTER,
                rng.random_range(-span_km / 2.0..span_km / 2.0),
                rng.random_range(-span_km / 2.0..span_km / 2.0),
            )
        })
        .collect();
    let draw = |rng: &mut ChaCha8Rng| -> Matrix {
        (0..clusters)
            .map(|_| (0..clusters).map(|_| rng.random_range(0.0..max_demand)).collect())
            .collect()
    };
    let z1 = draw(&mut rng);
    let z2 = draw(&mut rng);
    let r = travel_time_matrix(&centroids, 20.0, 0.0, 3.0);
    Scenario::new(centroids, [z1, z2], [r.clone(), r], econ, seed).expect("random scenario is valid")
}
