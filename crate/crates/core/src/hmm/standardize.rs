use nalgebra::{DMatrix, DVector};

use super::gaussian::GaussianComponent;
use super::model::HmmModel;
use crate::Result;

/// Per-column affine map to zero mean and unit variance.
///
/// Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(obs: &DMatrix<f64>) -> Self {
        let (t, d) = obs.shape();
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for k in 0..d {
            let col = obs.column(k);
            let m = col.sum() / t as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / t as f64;
            mean[k] = m;
            if var > 0.0 && var.is_finite() {
                scale[k] = var.sqrt();
            }
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, obs: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(obs.nrows(), obs.ncols(), |t, k| {
            (obs[(t, k)] - self.mean[k]) / self.scale[k]
        })
    }

    /// Maps a model fitted on standardized data back to raw units.
    pub fn invert_model(&self, model: &HmmModel) -> Result<HmmModel> {
        let s = DVector::from_column_slice(&self.scale);
        let emissions = model
            .emissions
            .iter()
            .map(|e| {
                let mean = DVector::from_fn(e.dim(), |k, _| e.mean[k] * self.scale[k] + self.mean[k]);
                let cov = DMatrix::from_fn(e.dim(), e.dim(), |r, c| e.covariance[(r, c)] * s[r] * s[c]);
                GaussianComponent::new(mean, cov, e.weight)
            })
            .collect::<Result<Vec<_>>>()?;
        HmmModel::new(model.initial.clone(), model.transition.clone(), emissions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::inference::viterbi;
    use crate::hmm::testing::random_model;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_moments_and_constant_column() {
        let obs = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0]);
        let s = Standardizer::fit(&obs);
        let z = s.apply(&obs);
        assert!(z.column(0).sum().abs() < 1e-12);
        assert!((z.column(0).map(|v| v * v).sum() / 4.0 - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverted_model_decodes_raw_data_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_model(&mut rng, 3, 2);
        let raw = DMatrix::from_fn(12, 2, |_, k| {
            rng.random_range(-50.0..50.0) * (k as f64 + 1.0) + 300.0
        });
        let s = Standardizer::fit(&raw);
        let (p_std, _) = viterbi(&m, &s.apply(&raw)).unwrap();
        let (p_raw, _) = viterbi(&s.invert_model(&m).unwrap(), &raw).unwrap();
        assert_eq!(p_std, p_raw);
    }
}
