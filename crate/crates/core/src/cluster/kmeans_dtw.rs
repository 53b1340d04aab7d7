use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dba::{dba_center, sq_cost};
use super::dtw::dtw_distance;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterMode {
    /// DTW barycenter averaging.
    #[default]
    Dba,
    /// The member with the smallest summed squared DTW to the others.
    Medoid,
    /// Pointwise mean of equal-length members.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub max_iters: usize,
    pub center: CenterMode,
    pub dba_iters: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            max_iters: 50,
            center: CenterMode::Dba,
            dba_iters: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<const D: usize> {
    pub k: usize,
    pub centers: Vec<Vec<[f64; D]>>,
    /// Cluster index per input sequence.
    pub assignments: Vec<usize>,
    /// DTW distance of every sequence to its center.
    pub distances: Vec<f64>,
    /// Sum of squared distances to the assigned centers.
    pub lambda_w: f64,
    /// `lambda_w` after every assignment step.
    pub lambda_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Nearest center per sequence, ties to the lowest cluster index.
fn assign<const D: usize>(data: &[Vec<[f64; D]>], centers: &[Vec<[f64; D]>]) -> Vec<(usize, f64)> {
    par::map(data, |x| {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centers.iter().enumerate() {
            let d = dtw_distance(x, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    })
}

/// k-means++ under DTW: next center drawn with probability proportional to
/// the squared DTW distance to the nearest chosen one.
pub(crate) fn add_seeds<const D: usize>(
    data: &[Vec<[f64; D]>],
    centers: &mut Vec<Vec<[f64; D]>>,
    k: usize,
    rng: &mut ChaCha8Rng,
) {
    if centers.is_empty() {
        centers.push(data[rng.random_range(0..data.len())].clone());
    }
    let mut d2: Vec<f64> = assign(data, centers).iter().map(|&(_, d)| d * d).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    if u < d {
                        pick = Some(i);
                        break;
                    }
                    u -= d;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..data.len())
        };
        let c = data[pick].clone();
        let new: Vec<f64> = par::map(data, |x| dtw_distance(x, &c));
        for (d, n) in d2.iter_mut().zip(new) {
            *d = d.min(n * n);
        }
        centers.push(c);
    }
}

fn update_center<const D: usize>(
    members: &[&[[f64; D]]],
    current: &[[f64; D]],
    cfg: &ClusterConfig,
) -> Vec<[f64; D]> {
    let candidate = match cfg.center {
        CenterMode::Dba => return dba_center(members, current, cfg.dba_iters),
        CenterMode::Medoid => {
            let costs = par::map(members, |m| sq_cost(members, m));
            let best = (0..members.len())
                .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
                .unwrap();
            members[best].to_vec()
        }
        CenterMode::Euclidean => {
            let len = members[0].len();
            if members.iter().any(|m| m.len() != len) {
                return current.to_vec();
            }
            (0..len)
                .map(|t| {
                    std::array::from_fn(|d| {
                        members.iter().map(|m| m[t][d]).sum::<f64>() / members.len() as f64
                    })
                })
                .collect()
        }
    };
    if sq_cost(members, &candidate) < sq_cost(members, current) {
        candidate
    } else {
        current.to_vec()
    }
}

/// Lloyd iterations from the given centers.
pub(crate) fn refine<const D: usize>(
    data: &[Vec<[f64; D]>],
    mut centers: Vec<Vec<[f64; D]>>,
    cfg: &ClusterConfig,
) -> ClusterModel<D> {
    let k = centers.len();
    let mut prev: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut nearest = assign(data, &centers);
        let mut repaired = false;
        // an empty cluster takes the sequence farthest from its own center
        for j in 0..k {
            if nearest.iter().any(|&(c, _)| c == j) {
                continue;
            }
            let mut sizes = vec![0usize; k];
            for &(c, _) in &nearest {
                sizes[c] += 1;
            }
            let far = (0..data.len())
                .filter(|&i| sizes[nearest[i].0] > 1)
                .max_by(|&a, &b| nearest[a].1.total_cmp(&nearest[b].1).then(b.cmp(&a)));
            if let Some(far) = far {
                centers[j] = data[far].clone();
                nearest[far] = (j, 0.0);
                repaired = true;
            }
        }
        let labels: Vec<usize> = nearest.iter().map(|&(c, _)| c).collect();
        let lambda: f64 = nearest.iter().map(|&(_, d)| d * d).sum();
        trace.push(lambda);
        let converged = !repaired && prev.as_ref() == Some(&labels);
        if converged || iterations >= cfg.max_iters {
            return ClusterModel {
                k,
                centers,
                assignments: labels,
                distances: nearest.iter().map(|&(_, d)| d).collect(),
                lambda_w: lambda,
                lambda_trace: trace,
                iterations,
                converged,
            };
        }
        iterations += 1;
        let updated: Vec<Vec<[f64; D]>> = (0..k)
            .map(|j| {
                let members: Vec<&[[f64; D]]> = data
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == j)
                    .map(|(x, _)| x.as_slice())
                    .collect();
                update_center(&members, &centers[j], cfg)
            })
            .collect();
        centers = updated;
        prev = Some(labels);
    }
}

/// K-means under DTW with k-means++ seeding. Stops when assignments no
/// longer change or after `max_iters` center updates; the returned
/// assignment is always nearest-center for the returned centers.
pub fn kmeans_dtw<const D: usize>(
    data: &[Vec<[f64; D]>],
    k: usize,
    seed: u64,
    cfg: &ClusterConfig,
) -> Result<ClusterModel<D>> {
    check(data, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k);
    add_seeds(data, &mut centers, k, &mut rng);
    Ok(refine(data, centers, cfg))
}

pub(crate) fn check<const D: usize>(data: &[Vec<[f64; D]>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if data.len() < k {
        return Err(Error::InvalidInput(format!(
            "k = {k} clusters requested for {} primitives",
            data.len()
        )));
    }
    if data.iter().any(|x| x.is_empty()) {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    Ok(())
}
