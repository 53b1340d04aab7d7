use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kmeans_dtw::{add_seeds, check, kmeans_dtw, refine, ClusterConfig, ClusterModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowRow {
    pub k: usize,
    pub lambda_w: f64,
    /// `(lambda(k-1) - lambda(k)) / lambda(k-1)`; none for the first row or a
    /// zero predecessor.
    pub change_rate: Option<f64>,
    /// Least-squares quadratic in `k` fitted to the defined change rates.
    pub smoothed_change_rate: Option<f64>,
}

/// Least-squares polynomial of degree `min(2, points - 1)` evaluated at
/// `at`. Abscissae are centered before fitting.
pub fn quadratic_fit(xs: &[f64], ys: &[f64], at: &[f64]) -> Option<Vec<f64>> {
    if xs.is_empty() || xs.len() != ys.len() {
        return None;
    }
    let deg = (xs.len() - 1).min(2);
    let mid = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = DMatrix::from_fn(xs.len(), deg + 1, |r, c| (xs[r] - mid).powi(c as i32));
    let coef = v
        .svd(true, true)
        .solve(&DVector::from_column_slice(ys), 1e-14)
        .ok()?;
    Some(
        at.iter()
            .map(|&x| (0..=deg).map(|c| coef[c] * (x - mid).powi(c as i32)).sum())
            .collect(),
    )
}

/// Runs DTW K-means for every `k` in `ks` (ascending, distinct).
///
/// Each `k` keeps the better of a cold start and a warm start from the
/// previous solution plus one k-means++ seed, so `lambda_w` never increases
/// with `k`.
pub fn elbow_curve<const D: usize>(
    data: &[Vec<[f64; D]>],
    ks: &[usize],
    seed: u64,
    cfg: &ClusterConfig,
) -> Result<(Vec<ElbowRow>, Vec<ClusterModel<D>>)> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("empty k range".into()));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("k range must be strictly increasing".into()));
    }
    let mut models: Vec<ClusterModel<D>> = Vec::with_capacity(ks.len());
    for &k in ks {
        check(data, k)?;
        let cold = kmeans_dtw(data, k, seed, cfg)?;
        let best = match models.last() {
            Some(prev) => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut centers = prev.centers.clone();
                add_seeds(data, &mut centers, k, &mut rng);
                let warm = refine(data, centers, cfg);
                if warm.lambda_w < cold.lambda_w {
                    warm
                } else {
                    cold
                }
            }
            None => cold,
        };
        models.push(best);
    }
    let lambdas: Vec<f64> = models.iter().map(|m| m.lambda_w).collect();
    let rates: Vec<Option<f64>> = (0..ks.len())
        .map(|i| {
            if i == 0 || lambdas[i - 1] <= 0.0 {
                None
            } else {
                Some((lambdas[i - 1] - lambdas[i]) / lambdas[i - 1])
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = ks
        .iter()
        .zip(&rates)
        .filter_map(|(&k, r)| r.map(|r| (k as f64, r)))
        .unzip();
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let smooth = quadratic_fit(&xs, &ys, &kf);
    let rows = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| ElbowRow {
            k,
            lambda_w: lambdas[i],
            change_rate: rates[i],
            smoothed_change_rate: smooth.as_ref().map(|s| s[i]),
        })
        .collect();
    Ok((rows, models))
}
