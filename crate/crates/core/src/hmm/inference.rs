//! Forward-backward posteriors and Viterbi decoding.
//!
//! The forward pass is scaled per frame. Emission densities are shifted by
//! their per-frame maximum before exponentiation, so 6-d densities far in the
//! tails do not underflow; the shift is added back into the log-likelihood.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::HmmModel;
use crate::{Error, Result};

/// Sufficient statistics of one E-step.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    /// `T x N`, rows sum to 1.
    pub gamma: DMatrix<f64>,
    /// `N x N` expected transition counts summed over time.
    pub xi_sum: DMatrix<f64>,
    pub log_likelihood: f64,
}

fn underflow() -> Error {
    Error::Numeric(
        "observation sequence has zero likelihood under the model; \
         increase covariance regularization"
            .into(),
    )
}

pub fn forward_backward(model: &HmmModel, obs: &DMatrix<f64>) -> Result<ForwardBackward> {
    model.check_obs(obs)?;
    let t_len = obs.nrows();
    let n = model.n_states();
    let le = model.log_emissions(obs);
    let a = &model.transition;

    // b[t][i] = exp(log b_t(i) - shift_t)
    let mut b = DMatrix::zeros(t_len, n);
    let mut shift = vec![0.0; t_len];
    for t in 0..t_len {
        let m = le.row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(underflow());
        }
        shift[t] = m;
        for i in 0..n {
            b[(t, i)] = (le[(t, i)] - m).exp();
        }
    }

    let mut alpha = DMatrix::zeros(t_len, n);
    let mut scale = vec![0.0; t_len];
    for i in 0..n {
        alpha[(0, i)] = model.initial[i] * b[(0, i)];
    }
    for t in 0..t_len {
        if t > 0 {
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += alpha[(t - 1, i)] * a[(i, j)];
                }
                alpha[(t, j)] = s * b[(t, j)];
            }
        }
        let c: f64 = alpha.row(t).sum();
        if !(c > 0.0 && c.is_finite()) {
            return Err(underflow());
        }
        scale[t] = c;
        for i in 0..n {
            alpha[(t, i)] /= c;
        }
    }

    let mut beta = DMatrix::from_element(t_len, n, 1.0);
    for t in (0..t_len - 1).rev() {
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[(i, j)] * b[(t + 1, j)] * beta[(t + 1, j)];
            }
            beta[(t, i)] = s / scale[t + 1];
        }
    }

    let mut gamma = alpha.component_mul(&beta);
    for t in 0..t_len {
        let s: f64 = gamma.row(t).sum();
        if !(s > 0.0) {
            return Err(underflow());
        }
        for i in 0..n {
            gamma[(t, i)] /= s;
        }
    }

    let mut xi_sum = DMatrix::zeros(n, n);
    for t in 0..t_len.saturating_sub(1) {
        let mut xi = DMatrix::zeros(n, n);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = alpha[(t, i)] * a[(i, j)] * b[(t + 1, j)] * beta[(t + 1, j)];
                xi[(i, j)] = v;
                total += v;
            }
        }
        if total > 0.0 {
            xi_sum += xi / total;
        }
    }

    let log_likelihood = scale.iter().zip(&shift).map(|(c, m)| c.ln() + m).sum::<f64>();
    if !log_likelihood.is_finite() {
        return Err(underflow());
    }
    Ok(ForwardBackward {
        gamma,
        xi_sum,
        log_likelihood,
    })
}

/// Per-frame state posteriors `P(q_t = i | O)`, a `T x N` matrix.
pub fn posterior(model: &HmmModel, obs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(forward_backward(model, obs)?.gamma)
}

/// `log P(O | model)`.
pub fn log_likelihood(model: &HmmModel, obs: &DMatrix<f64>) -> Result<f64> {
    Ok(forward_backward(model, obs)?.log_likelihood)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMethod {
    /// Most probable joint state path.
    #[default]
    Viterbi,
    /// Most probable state of every frame taken separately.
    PosteriorArgmax,
}

/// Log-space Viterbi. Returns the path and its joint log-probability.
/// Ties go to the lower state index.
pub fn viterbi(model: &HmmModel, obs: &DMatrix<f64>) -> Result<(Vec<usize>, f64)> {
    model.check_obs(obs)?;
    let t_len = obs.nrows();
    let n = model.n_states();
    let le = model.log_emissions(obs);
    let log_a = model.transition.map(f64::ln);

    let mut delta: Vec<f64> = (0..n).map(|i| model.initial[i].ln() + le[(0, i)]).collect();
    let mut back = vec![vec![0usize; n]; t_len];
    let mut next = vec![0.0; n];
    for t in 1..t_len {
        for j in 0..n {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, &d) in delta.iter().enumerate() {
                let v = d + log_a[(i, j)];
                if v > best.1 {
                    best = (i, v);
                }
            }
            back[t][j] = best.0;
            next[j] = best.1 + le[(t, j)];
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut last = (0, f64::NEG_INFINITY);
    for (i, &d) in delta.iter().enumerate() {
        if d > last.1 {
            last = (i, d);
        }
    }
    if !last.1.is_finite() {
        return Err(underflow());
    }
    let mut path = vec![0usize; t_len];
    path[t_len - 1] = last.0;
    for t in (1..t_len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, last.1))
}

/// Per-frame argmax of the posterior, ties to the lower state index.
pub fn posterior_argmax(model: &HmmModel, obs: &DMatrix<f64>) -> Result<Vec<usize>> {
    let gamma = posterior(model, obs)?;
    Ok((0..gamma.nrows())
        .map(|t| {
            let mut best = 0;
            for i in 1..gamma.ncols() {
                if gamma[(t, i)] > gamma[(t, best)] {
                    best = i;
                }
            }
            best
        })
        .collect())
}

pub fn decode(model: &HmmModel, obs: &DMatrix<f64>, method: DecodeMethod) -> Result<Vec<usize>> {
    match method {
        DecodeMethod::Viterbi => viterbi(model, obs).map(|(p, _)| p),
        DecodeMethod::PosteriorArgmax => posterior_argmax(model, obs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::gaussian::GaussianComponent;
    use crate::hmm::testing::{enumerate_paths, random_model, random_obs};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_state() -> HmmModel {
        HmmModel::new(
            DVector::from_element(1, 1.0),
            DMatrix::identity(1, 1),
            vec![GaussianComponent::new(DVector::zeros(2), DMatrix::identity(2, 2), 1.0).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn single_state_posterior_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = random_obs(&mut rng, 9, 2);
        let g = posterior(&single_state(), &obs).unwrap();
        assert!(g.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(decode(&single_state(), &obs, DecodeMethod::Viterbi)
            .unwrap()
            .iter()
            .all(|&s| s == 0));
    }

    #[test]
    fn absorbing_start_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = random_model(&mut rng, 2, 2);
        let m = HmmModel::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DMatrix::identity(2, 2),
            base.emissions.clone(),
        )
        .unwrap();
        let obs = random_obs(&mut rng, 7, 2);
        let g = posterior(&m, &obs).unwrap();
        for t in 0..7 {
            assert!((g[(t, 0)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_matches_enumeration_two_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_model(&mut rng, 2, 2);
            let obs = random_obs(&mut rng, 6, 2);
            let oracle = enumerate_paths(&m, &obs);
            let fb = forward_backward(&m, &obs).unwrap();
            assert!((fb.log_likelihood - oracle.log_likelihood).abs() < 1e-9);
            for t in 0..6 {
                for i in 0..2 {
                    assert!((fb.gamma[(t, i)] - oracle.gamma[(t, i)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn viterbi_matches_enumeration_three_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let m = random_model(&mut rng, 3, 2);
            let obs = random_obs(&mut rng, 8, 2);
            let oracle = enumerate_paths(&m, &obs);
            let (path, lp) = viterbi(&m, &obs).unwrap();
            assert!((lp - oracle.best_log_prob).abs() < 1e-9);
            assert!((m.log_joint(&path, &obs) - lp).abs() < 1e-9);
        }
    }

    #[test]
    fn forced_left_right_schedule() {
        // emissions far apart, each frame sits on one state mean
        let schedule = [0usize, 0, 0, 1, 1, 2, 2, 2];
        let means = [-20.0, 0.0, 20.0];
        let emissions: Vec<_> = means
            .iter()
            .map(|&m| {
                GaussianComponent::new(DVector::from_element(1, m), DMatrix::identity(1, 1), 1.0 / 3.0)
                    .unwrap()
            })
            .collect();
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 1.0]);
        let m = HmmModel::new(DVector::from_vec(vec![1.0, 0.0, 0.0]), a, emissions).unwrap();
        let obs = DMatrix::from_fn(schedule.len(), 1, |t, _| means[schedule[t]]);
        assert_eq!(decode(&m, &obs, DecodeMethod::Viterbi).unwrap(), schedule);
        assert_eq!(decode(&m, &obs, DecodeMethod::PosteriorArgmax).unwrap(), schedule);
    }

    #[test]
    fn viterbi_beats_posterior_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_model(&mut rng, 3, 2);
            let obs = random_obs(&mut rng, 12, 2);
            let (_, lp) = viterbi(&m, &obs).unwrap();
            let am = posterior_argmax(&m, &obs).unwrap();
            assert!(lp >= m.log_joint(&am, &obs) - 1e-12);
        }
    }

    #[test]
    fn unreachable_observations_error() {
        let m = HmmModel::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DMatrix::identity(2, 2),
            vec![
                GaussianComponent::new(DVector::zeros(1), DMatrix::identity(1, 1) * 1e-3, 0.5).unwrap(),
                GaussianComponent::new(DVector::zeros(1), DMatrix::identity(1, 1), 0.5).unwrap(),
            ],
        )
        .unwrap();
        let obs = DMatrix::from_element(3, 1, 1e3);
        assert!(matches!(forward_backward(&m, &obs), Err(Error::Numeric(_))));
    }
}
