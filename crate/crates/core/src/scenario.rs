use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Observation width: `(x, y)` of ego, preceding vehicle and target-lane
/// vehicle, in that order.
pub const SCENARIO_DIM: usize = 6;

/// Three-vehicle lane-change observation sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub points: Vec<[f64; SCENARIO_DIM]>,
    pub frame_rate: f64,
}

impl Scenario {
    pub fn new(points: Vec<[f64; SCENARIO_DIM]>, frame_rate: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a scenario needs at least 2 frames, got {}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("scenario contains non-finite values".into()));
        }
        Ok(Scenario { points, frame_rate })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `T x 6` matrix, one row per frame.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.points.len(), SCENARIO_DIM, |t, d| self.points[t][d])
    }
}
