//! Brute-force references shared by the HMM unit tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::gaussian::GaussianComponent;
use super::model::HmmModel;

pub struct Enumerated {
    pub log_likelihood: f64,
    pub gamma: DMatrix<f64>,
    pub best_log_prob: f64,
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize, d: usize) -> HmmModel {
    let pi = DVector::from_vec(simplex(rng, n));
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, p) in simplex(rng, n).into_iter().enumerate() {
            a[(i, j)] = p;
        }
    }
    let emissions = (0..n)
        .map(|_| {
            let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let cov = &m * m.transpose() + DMatrix::identity(d, d) * 0.3;
            let mean = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
            GaussianComponent::new(mean, cov, 1.0 / n as f64).unwrap()
        })
        .collect();
    HmmModel::new(pi, a, emissions).unwrap()
}

pub fn random_obs(rng: &mut ChaCha8Rng, t: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, d, |_, _| rng.random_range(-3.0..3.0))
}

/// Visits all `N^T` paths.
pub fn enumerate_paths(model: &HmmModel, obs: &DMatrix<f64>) -> Enumerated {
    let n = model.n_states();
    let t_len = obs.nrows();
    let total = n.pow(t_len as u32);
    let mut joint = Vec::with_capacity(total);
    let mut paths = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let path: Vec<usize> = (0..t_len)
            .map(|_| {
                let s = c % n;
                c /= n;
                s
            })
            .collect();
        joint.push(model.log_joint(&path, obs));
        paths.push(path);
    }
    let best = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = joint.iter().map(|lp| (lp - best).exp()).sum();
    let log_likelihood = best + sum.ln();
    let mut gamma = DMatrix::zeros(t_len, n);
    for (path, lp) in paths.iter().zip(&joint) {
        let w = (lp - log_likelihood).exp();
        for (t, &s) in path.iter().enumerate() {
            gamma[(t, s)] += w;
        }
    }
    Enumerated {
        log_likelihood,
        gamma,
        best_log_prob: best,
    }
}
