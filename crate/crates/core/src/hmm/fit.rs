//! Baum-Welch training on a single observation sequence.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianComponent;
use super::inference::{forward_backward, ForwardBackward};
use super::model::HmmModel;
use crate::kmeans::{kmeans, Seeding};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Added to every covariance diagonal after each M-step.
    pub reg: f64,
    /// Stop once consecutive log-likelihoods differ by less than this.
    pub tol: f64,
    pub max_iters: usize,
    /// Allowed log-likelihood drop between iterations before failing.
    pub monotone_slack: f64,
    /// Gaussians per state. Only 1 is implemented.
    pub mixtures_per_state: usize,
    /// Initial self-transition probability.
    pub sticky: f64,
    /// k-means runs used to place the initial means; the lowest objective wins.
    pub kmeans_restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            reg: 1e-6,
            tol: 1e-10,
            max_iters: 500,
            monotone_slack: 1e-8,
            mixtures_per_state: 1,
            sticky: 0.9,
            kmeans_restarts: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: HmmModel,
    /// Log-likelihood of the model entering each iteration; the last entry
    /// belongs to the returned model.
    pub ll_trace: Vec<f64>,
    pub converged: bool,
}

impl FitResult {
    pub fn log_likelihood(&self) -> f64 {
        *self.ll_trace.last().expect("trace is never empty")
    }
}

fn weighted_gaussian(
    obs: &DMatrix<f64>,
    weights: impl Fn(usize) -> f64,
    reg: f64,
) -> Option<(DVector<f64>, DMatrix<f64>, f64)> {
    let (t_len, d) = obs.shape();
    let total: f64 = (0..t_len).map(&weights).sum();
    if !(total > 1e-300) {
        return None;
    }
    let mut mean = DVector::zeros(d);
    for t in 0..t_len {
        let w = weights(t);
        for k in 0..d {
            mean[k] += w * obs[(t, k)];
        }
    }
    mean /= total;
    let mut cov = DMatrix::zeros(d, d);
    for t in 0..t_len {
        let w = weights(t);
        for r in 0..d {
            let dr = obs[(t, r)] - mean[r];
            for c in 0..=r {
                cov[(r, c)] += w * dr * (obs[(t, c)] - mean[c]);
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            cov[(c, r)] = cov[(r, c)];
        }
    }
    cov /= total;
    for k in 0..d {
        cov[(k, k)] += reg;
    }
    Some((mean, cov, total))
}

fn initial_model(obs: &DMatrix<f64>, n: usize, seed: u64, cfg: &FitConfig) -> Result<HmmModel> {
    let (t_len, d) = obs.shape();
    let rows: Vec<Vec<f64>> = (0..t_len).map(|t| obs.row(t).iter().copied().collect()).collect();
    let mut km = kmeans(&rows, n, Seeding::DSquared, seed, 100, 1e-9)?;
    for restart in 1..cfg.kmeans_restarts.max(1) as u64 {
        let alt = kmeans(&rows, n, Seeding::DSquared, seed.wrapping_add(restart), 100, 1e-9)?;
        if alt.objective() < km.objective() {
            km = alt;
        }
    }
    let (_, global_cov, _) = weighted_gaussian(obs, |_| 1.0, cfg.reg).expect("non-empty observations");
    let emissions = km
        .centers
        .iter()
        .map(|c| GaussianComponent::new(DVector::from_column_slice(c), global_cov.clone(), 1.0 / n as f64))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(emissions[0].dim(), d);
    let off = if n > 1 {
        (1.0 - cfg.sticky) / (n - 1) as f64
    } else {
        0.0
    };
    let a = DMatrix::from_fn(n, n, |i, j| {
        if n == 1 {
            1.0
        } else if i == j {
            cfg.sticky
        } else {
            off
        }
    });
    HmmModel::new(DVector::from_element(n, 1.0 / n as f64), a, emissions)
}

fn m_step(prev: &HmmModel, obs: &DMatrix<f64>, fb: &ForwardBackward, cfg: &FitConfig) -> Result<HmmModel> {
    let n = prev.n_states();
    let t_len = obs.nrows();
    let g = &fb.gamma;

    let pi_sum: f64 = g.row(0).sum();
    let initial = DVector::from_fn(n, |i, _| g[(0, i)] / pi_sum);

    let mut transition = prev.transition.clone();
    for i in 0..n {
        let s: f64 = fb.xi_sum.row(i).sum();
        if s > 0.0 {
            for j in 0..n {
                transition[(i, j)] = fb.xi_sum[(i, j)] / s;
            }
        }
    }

    let mut emissions = Vec::with_capacity(n);
    for i in 0..n {
        match weighted_gaussian(obs, |t| g[(t, i)], cfg.reg) {
            Some((mean, cov, occ)) => emissions.push(
                GaussianComponent::new(mean, cov, (occ / t_len as f64).clamp(0.0, 1.0))
                    .map_err(|e| Error::Numeric(format!("state {i}: {e}")))?,
            ),
            None => {
                let mut e = prev.emissions[i].clone();
                e.weight = 0.0;
                emissions.push(e);
            }
        }
    }
    HmmModel::new(initial, transition, emissions)
}

/// Fits an `n`-state Gaussian HMM to `obs` (`T x d`).
///
/// States are initialized by k-means on the observation vectors, all with
/// the global covariance; `A` starts sticky and `pi` uniform.
pub fn fit(obs: &DMatrix<f64>, n: usize, seed: u64, cfg: &FitConfig) -> Result<FitResult> {
    if cfg.mixtures_per_state != 1 {
        return Err(Error::InvalidInput(format!(
            "mixtures_per_state = {} is not supported, only 1",
            cfg.mixtures_per_state
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("state count must be at least 1".into()));
    }
    if n > obs.nrows() {
        return Err(Error::InvalidInput(format!(
            "{n} states for {} observations",
            obs.nrows()
        )));
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "observations contain non-finite values".into(),
        ));
    }
    let mut model = initial_model(obs, n, seed, cfg)?;
    let mut fb = forward_backward(&model, obs)?;
    let mut trace = vec![fb.log_likelihood];
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let next = m_step(&model, obs, &fb, cfg)?;
        let next_fb = forward_backward(&next, obs)?;
        let prev_ll = *trace.last().unwrap();
        let ll = next_fb.log_likelihood;
        if ll < prev_ll - cfg.monotone_slack {
            return Err(Error::Numeric(format!(
                "log-likelihood decreased from {prev_ll} to {ll} at iteration {}",
                trace.len()
            )));
        }
        trace.push(ll);
        model = next;
        fb = next_fb;
        if (ll - prev_ll).abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    // weights of a fresh model are placeholders until the first M-step
    if trace.len() == 1 {
        let occ: Vec<f64> = (0..n).map(|i| fb.gamma.column(i).sum()).collect();
        for (e, o) in model.emissions.iter_mut().zip(occ) {
            e.weight = (o / obs.nrows() as f64).clamp(0.0, 1.0);
        }
    }
    Ok(FitResult {
        model,
        ll_trace: trace,
        converged,
    })
}
