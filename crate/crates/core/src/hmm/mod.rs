//! Gaussian hidden Markov models and scenario segmentation.

mod fit;
pub mod gaussian;
mod inference;
mod model;
mod segment;
mod select;
mod standardize;
#[cfg(test)]
pub(crate) mod testing;

pub use fit::{fit, FitConfig, FitResult};
pub use gaussian::{gaussian_pdf, GaussianComponent};
pub use inference::{
    decode, forward_backward, log_likelihood, posterior, posterior_argmax, viterbi, DecodeMethod,
    ForwardBackward,
};
pub use model::{HmmModel, ModelDump};
pub use segment::{runs, segment, Segment};
pub use select::{select_model, Candidate, SelectConfig, Selection, SelectionCriterion};
pub use standardize::Standardizer;

use serde::{Deserialize, Serialize};

use crate::{Result, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub select: SelectConfig,
    pub min_frames: usize,
    /// Fit on per-dimension standardized positions.
    pub standardize: bool,
    pub fit: FitConfig,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            select: SelectConfig::default(),
            min_frames: 10,
            standardize: true,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioSegmentation {
    /// Selected model in raw position units.
    pub model: HmmModel,
    pub ll_trace: Vec<f64>,
    pub candidates: Vec<Candidate>,
    pub stop_reason: Option<String>,
    pub states: Vec<usize>,
    /// Every constant-state run, before the length filter.
    pub runs: Vec<Segment>,
    /// Runs that survive the length filter.
    pub primitives: Vec<Segment>,
}

/// Selects and fits a model for one scenario, decodes it and cuts it into
/// primitives.
pub fn segment_scenario(scenario: &Scenario, cfg: &SegmentConfig, seed: u64) -> Result<ScenarioSegmentation> {
    let raw = scenario.to_matrix();
    let (obs, std) = if cfg.standardize {
        let s = Standardizer::fit(&raw);
        (s.apply(&raw), Some(s))
    } else {
        (raw, None)
    };
    let sel = select_model(&obs, &cfg.select, &cfg.fit, seed)?;
    let model = match &std {
        Some(s) => s.invert_model(&sel.fit.model)?,
        None => sel.fit.model.clone(),
    };
    Ok(ScenarioSegmentation {
        model,
        ll_trace: sel.fit.ll_trace.clone(),
        candidates: sel.candidates,
        stop_reason: sel.stop_reason,
        runs: runs(&sel.states),
        primitives: segment(&sel.states, cfg.min_frames),
        states: sel.states,
    })
}
