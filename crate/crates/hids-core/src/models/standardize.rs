//! Per-feature standardization (train-set mean/std), used by the models that
//! are scale-sensitive: logistic regression, the polynomial SVM, and the MLP.

use serde::{Deserialize, Serialize};

use crate::Float;

/// Minimum allowed standard deviation; constant features divide by this
/// instead of zero.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct Standardizer<F: Float> {
    pub means: Vec<F>,
    pub stds: Vec<F>,
}

impl<F: Float> Standardizer<F> {
    /// Fits means and population standard deviations per feature.
    pub fn fit(xs: &[Vec<F>]) -> Self {
        assert!(!xs.is_empty(), "cannot standardize an empty set");
        let d = xs[0].len();
        let n = F::from_usize_lossy(xs.len());
        let mut means = vec![F::zero(); d];
        for x in xs {
            for (m, &v) in means.iter_mut().zip(x) {
                *m = *m + v;
            }
        }
        for m in &mut means {
            *m = *m / n;
        }
        let mut vars = vec![F::zero(); d];
        for x in xs {
            for ((var, &v), &m) in vars.iter_mut().zip(x).zip(&means) {
                let dlt = v - m;
                *var = *var + dlt * dlt;
            }
        }
        let floor = F::from_f64_lossy(STD_FLOOR);
        let stds = vars
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < floor {
                    floor
                } else {
                    s
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn transform_one(&self, x: &[F]) -> Vec<F> {
        x.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, xs: &[Vec<F>]) -> Vec<Vec<F>> {
        xs.iter().map(|x| self.transform_one(x)).collect()
    }
}
