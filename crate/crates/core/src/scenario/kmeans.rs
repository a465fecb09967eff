use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<[f64; 2]>,
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Index of the nearest centroid; ties go to the lower index.
pub(crate) fn nearest(p: &[f64; 2], centroids: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, q) in centroids.iter().enumerate() {
        let d = dist2(p, q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding on planar coordinates.
///
/// Deterministic for a fixed `seed`. Requires at least `k` distinct points.
pub fn kmeans(points: &[[f64; 2]], k: usize, max_iterations: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let mut distinct: Vec<[f64; 2]> = points.to_vec();
    distinct.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::invalid(
            "k",
            format!(
                "k = {k} exceeds the {} distinct pickup points",
                distinct.len()
            ),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Vec::with_capacity(k);
    centroids.push(distinct[rng.random_range(0..distinct.len())]);
    let mut d2: Vec<f64> = distinct.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (idx, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            if target < d {
                pick = idx;
                break;
            }
            target -= d;
        }
        let c = distinct[pick];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(&distinct) {
            *d = d.min(dist2(p, &c));
        }
    }

    let mut assignment = vec![usize::MAX; points.len()];
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        let mut changed = false;
        for (a, p) in assignment.iter_mut().zip(points) {
            let c = nearest(p, &centroids);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignment.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centre
            if counts[c] > 0 {
                centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        assignment,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_points() {
        let pts = [[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]];
        let km = kmeans(&pts, 2, 100, 3).unwrap();
        let mut cs = km.centroids.clone();
        cs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(cs, vec![[0.0, 0.0], [5.0, 5.0]]);
        assert_eq!(km.assignment[0], km.assignment[1]);
        assert_ne!(km.assignment[0], km.assignment[2]);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = [[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let err = kmeans(&pts, 3, 100, 0).unwrap_err();
        assert!(err.to_string().contains("distinct"), "{err}");
    }

    #[test]
    fn deterministic_for_seed() {
        let pts: Vec<[f64; 2]> = (0..200)
            .map(|i| {
                let x = (i as f64 * 0.37).sin() * 10.0;
                let y = (i as f64 * 0.11).cos() * 10.0;
                [x, y]
            })
            .collect();
        let a = kmeans(&pts, 6, 100, 42).unwrap();
        let b = kmeans(&pts, 6, 100, 42).unwrap();
        assert_eq!(a, b);
    }
}
