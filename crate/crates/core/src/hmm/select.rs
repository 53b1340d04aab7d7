use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{fit, FitConfig, FitResult};
use super::inference::{decode, DecodeMethod};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionCriterion {
    /// Largest log-likelihood among completed fits.
    #[default]
    MaxLl,
    /// Smallest log-likelihood among completed fits.
    MinLl,
}

impl SelectionCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionCriterion::MaxLl => "max-ll",
            SelectionCriterion::MinLl => "min-ll",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub n_max: usize,
    pub criterion: SelectionCriterion,
    pub decode: DecodeMethod,
    /// A fit whose shortest expected state dwell time `1 / (1 - a_ii)` is
    /// below this many frames ends the sweep. 0 disables the check.
    pub min_dwell_frames: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            n_max: 10,
            criterion: SelectionCriterion::MaxLl,
            decode: DecodeMethod::Viterbi,
            min_dwell_frames: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub n_states: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub n_star: usize,
    pub fit: FitResult,
    pub states: Vec<usize>,
    pub candidates: Vec<Candidate>,
    /// Why the sweep ended before `n_max`, if it did.
    pub stop_reason: Option<String>,
}

/// Fits `N = 1, 2, ...` until `n_max` or until a fit cannot be decoded:
/// training fails, the log-likelihood is not finite, some state is never
/// visited on the decoded path, or some state is expected to dwell for fewer
/// than `min_dwell_frames` frames. Picks among the completed fits by
/// `criterion`.
pub fn select_model(obs: &DMatrix<f64>, sel: &SelectConfig, cfg: &FitConfig, seed: u64) -> Result<Selection> {
    let n_max = sel.n_max;
    let criterion = sel.criterion;
    let decode_method = sel.decode;
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let mut best: Option<(FitResult, Vec<usize>)> = None;
    let mut candidates = Vec::new();
    let mut stop_reason = None;
    let mut first_error = None;
    for n in 1..=n_max {
        if n > obs.nrows() {
            stop_reason = Some(format!("N={n} exceeds the {} frames", obs.nrows()));
            break;
        }
        let r = match fit(obs, n, seed, cfg) {
            Ok(r) => r,
            Err(e) => {
                stop_reason = Some(format!("N={n}: {e}"));
                first_error.get_or_insert(e);
                break;
            }
        };
        if !r.log_likelihood().is_finite() {
            stop_reason = Some(format!("N={n}: non-finite log-likelihood"));
            break;
        }
        let states = match decode(&r.model, obs, decode_method) {
            Ok(q) => q,
            Err(e) => {
                stop_reason = Some(format!("N={n}: {e}"));
                break;
            }
        };
        let mut seen = vec![false; n];
        for &s in &states {
            seen[s] = true;
        }
        if let Some(i) = seen.iter().position(|v| !v) {
            stop_reason = Some(format!("N={n}: state {i} is never visited"));
            break;
        }
        if n > 1 {
            let dwell = (0..n)
                .map(|i| 1.0 / (1.0 - r.model.transition[(i, i)]))
                .fold(f64::INFINITY, f64::min);
            if dwell < sel.min_dwell_frames {
                stop_reason = Some(format!(
                    "N={n}: expected dwell {dwell:.2} frames is below {}",
                    sel.min_dwell_frames
                ));
                break;
            }
        }
        candidates.push(Candidate {
            n_states: n,
            log_likelihood: r.log_likelihood(),
            iterations: r.ll_trace.len() - 1,
            converged: r.converged,
        });
        let better = match &best {
            None => true,
            Some((b, _)) => match criterion {
                SelectionCriterion::MaxLl => r.log_likelihood() > b.log_likelihood(),
                SelectionCriterion::MinLl => r.log_likelihood() < b.log_likelihood(),
            },
        };
        if better {
            best = Some((r, states));
        }
    }
    match best {
        Some((fit, states)) => Ok(Selection {
            n_star: fit.model.n_states(),
            fit,
            states,
            candidates,
            stop_reason,
        }),
        None => Err(first_error.unwrap_or_else(|| {
            Error::Numeric(format!(
                "no state count could be fitted: {}",
                stop_reason.unwrap_or_default()
            ))
        })),
    }
}
