use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianComponent;
use crate::{Error, Result};

pub(crate) const PROB_TOL: f64 = 1e-9;

/// Hidden Markov model with one Gaussian emission per state.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub initial: DVector<f64>,
    pub transition: DMatrix<f64>,
    pub emissions: Vec<GaussianComponent>,
}

impl HmmModel {
    pub fn new(
        initial: DVector<f64>,
        transition: DMatrix<f64>,
        emissions: Vec<GaussianComponent>,
    ) -> Result<Self> {
        let n = emissions.len();
        if n == 0 {
            return Err(Error::InvalidInput("an HMM needs at least one state".into()));
        }
        if initial.len() != n || transition.nrows() != n || transition.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "shape mismatch: {n} emissions, pi of length {}, A of {}x{}",
                initial.len(),
                transition.nrows(),
                transition.ncols()
            )));
        }
        let dim = emissions[0].dim();
        if emissions.iter().any(|e| e.dim() != dim) {
            return Err(Error::InvalidInput("emissions differ in dimension".into()));
        }
        let is_dist = |v: &[f64]| {
            v.iter().all(|&p| p >= 0.0 && p.is_finite()) && (v.iter().sum::<f64>() - 1.0).abs() <= PROB_TOL
        };
        if !is_dist(initial.as_slice()) {
            return Err(Error::InvalidInput(
                "initial distribution does not sum to 1".into(),
            ));
        }
        for i in 0..n {
            let row: Vec<f64> = transition.row(i).iter().copied().collect();
            if !is_dist(&row) {
                return Err(Error::InvalidInput(format!(
                    "transition row {i} does not sum to 1"
                )));
            }
        }
        Ok(HmmModel {
            initial,
            transition,
            emissions,
        })
    }

    pub fn n_states(&self) -> usize {
        self.emissions.len()
    }

    pub fn dim(&self) -> usize {
        self.emissions[0].dim()
    }

    pub(crate) fn check_obs(&self, obs: &DMatrix<f64>) -> Result<()> {
        if obs.ncols() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "observations have {} columns, model expects {}",
                obs.ncols(),
                self.dim()
            )));
        }
        if obs.nrows() == 0 {
            return Err(Error::InvalidInput("empty observation sequence".into()));
        }
        Ok(())
    }

    /// `T x N` matrix of log emission densities.
    pub fn log_emissions(&self, obs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut row = vec![0.0; obs.ncols()];
        let mut out = DMatrix::zeros(obs.nrows(), self.n_states());
        for t in 0..obs.nrows() {
            for (d, v) in row.iter_mut().enumerate() {
                *v = obs[(t, d)];
            }
            for (i, e) in self.emissions.iter().enumerate() {
                out[(t, i)] = e.log_pdf(&row);
            }
        }
        out
    }

    /// `log p(path, obs)`.
    pub fn log_joint(&self, path: &[usize], obs: &DMatrix<f64>) -> f64 {
        let le = self.log_emissions(obs);
        let mut lp = self.initial[path[0]].ln() + le[(0, path[0])];
        for t in 1..path.len() {
            lp += self.transition[(path[t - 1], path[t])].ln() + le[(t, path[t])];
        }
        lp
    }

    pub fn to_dump(&self, log_likelihood_trace: &[f64]) -> ModelDump {
        ModelDump {
            n_states: self.n_states(),
            initial: self.initial.iter().copied().collect(),
            transition: (0..self.n_states())
                .map(|i| self.transition.row(i).iter().copied().collect())
                .collect(),
            means: self
                .emissions
                .iter()
                .map(|e| e.mean.iter().copied().collect())
                .collect(),
            covariances: self
                .emissions
                .iter()
                .map(|e| {
                    (0..e.dim())
                        .map(|r| e.covariance.row(r).iter().copied().collect())
                        .collect()
                })
                .collect(),
            log_likelihood_trace: log_likelihood_trace.to_vec(),
        }
    }
}

/// JSON form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub n_states: usize,
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub log_likelihood_trace: Vec<f64>,
}

impl ModelDump {
    pub fn to_model(&self) -> Result<HmmModel> {
        let n = self.n_states;
        let emissions = self
            .means
            .iter()
            .zip(&self.covariances)
            .enumerate()
            .map(|(i, (m, c))| {
                let d = m.len();
                GaussianComponent::new(
                    DVector::from_vec(m.clone()),
                    DMatrix::from_fn(d, d, |r, k| c[r][k]),
                    1.0 / n as f64,
                )
                .map_err(|e| Error::Numeric(format!("state {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        HmmModel::new(
            DVector::from_vec(self.initial.clone()),
            DMatrix::from_fn(n, n, |r, c| self.transition[r][c]),
            emissions,
        )
    }
}
