use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Multivariate normal with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub weight: f64,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianComponent {
    /// Fails with [`Error::Numeric`] when `covariance` is not symmetric
    /// positive definite.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, weight: f64) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "covariance is {}x{} for a {d}-dimensional mean",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidInput(format!("weight {weight} outside [0, 1]")));
        }
        let sym = (&covariance + covariance.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(sym)
            .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?
            .unpack();
        let log_det: f64 = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::Numeric("covariance determinant is not finite".into()));
        }
        Ok(GaussianComponent {
            mean,
            covariance,
            weight,
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log density at `x`, via forward substitution on the Cholesky factor.
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        let mut z = [0.0f64; 16];
        let mut heap;
        let z: &mut [f64] = if d <= 16 {
            &mut z[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for k in 0..i {
                s -= self.chol[(i, k)] * z[k];
            }
            z[i] = s / self.chol[(i, i)];
            maha += z[i] * z[i];
        }
        self.log_norm - 0.5 * maha
    }
}

/// Density of `comp` at `p`.
pub fn gaussian_pdf(p: &[f64], comp: &GaussianComponent) -> f64 {
    comp.log_pdf(p).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_normal_at_mode() {
        let c = GaussianComponent::new(DVector::from_element(1, 0.0), DMatrix::identity(1, 1), 1.0).unwrap();
        assert!((gaussian_pdf(&[0.0], &c) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn six_dim_identity_at_mean() {
        let c = GaussianComponent::new(DVector::zeros(6), DMatrix::identity(6, 6), 1.0).unwrap();
        let expected = (2.0 * std::f64::consts::PI).powi(-3);
        assert!((gaussian_pdf(&[0.0; 6], &c) - expected).abs() < 1e-15);
        assert!((expected - 4.03e-3).abs() < 1e-5);
    }

    #[test]
    fn not_positive_definite() {
        let mut cov = DMatrix::identity(2, 2);
        cov[(1, 1)] = -1.0;
        assert!(matches!(
            GaussianComponent::new(DVector::zeros(2), cov, 1.0),
            Err(Error::Numeric(_))
        ));
    }

    fn rat(v: f64) -> BigRational {
        BigRational::from_float(v).unwrap()
    }

    /// Exact determinant and quadratic form by rational Gaussian elimination.
    fn exact_det_and_quad(cov: &DMatrix<f64>, r: &[f64]) -> (f64, f64) {
        let d = r.len();
        let mut m: Vec<Vec<BigRational>> = (0..d)
            .map(|i| {
                let mut row: Vec<BigRational> = (0..d).map(|j| rat(cov[(i, j)])).collect();
                row.push(rat(r[i]));
                row
            })
            .collect();
        let mut det = BigRational::one();
        for col in 0..d {
            let piv = (col..d).find(|&i| !m[i][col].is_zero()).unwrap();
            if piv != col {
                m.swap(piv, col);
                det = -det;
            }
            det *= m[col][col].clone();
            for i in col + 1..d {
                let f = m[i][col].clone() / m[col][col].clone();
                for j in col..=d {
                    let v = m[col][j].clone() * f.clone();
                    m[i][j] -= v;
                }
            }
        }
        // back substitution: y = cov^-1 r
        let mut y = vec![BigRational::zero(); d];
        for i in (0..d).rev() {
            let mut s = m[i][d].clone();
            for j in i + 1..d {
                s -= m[i][j].clone() * y[j].clone();
            }
            y[i] = s / m[i][i].clone();
        }
        let quad = (0..d).fold(BigRational::zero(), |acc, i| acc + rat(r[i]) * y[i].clone());
        (det.to_f64().unwrap(), quad.to_f64().unwrap())
    }

    #[test]
    fn matches_exact_rational_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let d = 6;
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
            let mean = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c = GaussianComponent::new(mean.clone(), cov.clone(), 1.0).unwrap();
            let r: Vec<f64> = (0..d).map(|i| x[i] - mean[i]).collect();
            let (det, quad) = exact_det_and_quad(&c.covariance, &r);
            let oracle = -0.5 * (d as f64 * LN_2PI + det.ln() + quad);
            let got = c.log_pdf(&x);
            assert!((got - oracle).abs() < 1e-11, "{got} vs {oracle}");
        }
    }
}
