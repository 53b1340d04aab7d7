//! Euclidean K-means on small point sets.
//!
//! Used to classify vehicles by their dimensions and to initialize the
//! hidden-state means of the HMM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seeding {
    /// First center drawn at random, each next center is the point farthest
    /// from the chosen ones (ties to the lowest index).
    FarthestPoint,
    /// k-means++: each next center drawn with probability proportional to
    /// the squared distance to the nearest chosen center.
    DSquared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances after every Lloyd iteration.
    pub objective_trace: Vec<f64>,
}

impl KMeans {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center, ties to the lowest index.
pub fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn seed_centers(points: &[Vec<f64>], k: usize, seeding: Seeding, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let next = match seeding {
            Seeding::FarthestPoint => {
                let mut best = 0;
                for i in 1..n {
                    if d2[i] > d2[best] {
                        best = i;
                    }
                }
                best
            }
            Seeding::DSquared => {
                let total: f64 = d2.iter().sum();
                if total <= 0.0 {
                    rng.random_range(0..n)
                } else {
                    let mut u = rng.random::<f64>() * total;
                    let mut pick = n - 1;
                    for (i, &d) in d2.iter().enumerate() {
                        if d > 0.0 && u < d {
                            pick = i;
                            break;
                        }
                        u -= d;
                    }
                    pick
                }
            }
        };
        centers.push(points[next].clone());
        let c = centers.last().unwrap();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centers
}

/// Lloyd iterations until the largest center shift drops below `tol` or
/// `max_iters` is reached.
///
/// An empty cluster takes over the point farthest from its own center.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seeding: Seeding,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeans> {
    if k == 0 || points.len() < k {
        return Err(Error::InvalidInput(format!(
            "k-means needs at least k={k} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points differ in dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, seeding, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut trace = Vec::new();

    for _ in 0..max_iters.max(1) {
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            labels[i] = j;
            dists[i] = d;
        }
        // repair empty clusters
        for j in 0..k {
            if labels.iter().all(|&l| l != j) {
                let far = (0..points.len())
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap();
                labels[far] = j;
                dists[far] = 0.0;
                centers[j] = points[far].clone();
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let new: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            shift = shift.max(sq_dist(&new, &centers[j]).sqrt());
            centers[j] = new;
        }
        let objective: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centers[l]))
            .sum();
        trace.push(objective);
        if shift < tol {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(p, &centers).0;
    }
    Ok(KMeans {
        centers,
        labels,
        objective_trace: trace,
    })
}
