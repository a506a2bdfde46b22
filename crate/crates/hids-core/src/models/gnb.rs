//! Gaussian naive Bayes: per-class, per-feature normal densities with class
//! priors from training frequency. Variances are smoothed by a fraction of
//! the largest pooled feature variance (plus a tiny absolute floor), so
//! zero-variance features never divide by zero.

use serde::{Deserialize, Serialize};

use crate::models::{GnbParams, ModelError, ModelState, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::Float;

/// Absolute variance floor for fully degenerate data.
const VAR_ABS_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct GnbState<F: Float> {
    /// Log prior per class, indexed by label value.
    pub log_priors: Vec<F>,
    /// means[class][feature].
    pub means: Vec<Vec<F>>,
    /// Smoothed variances[class][feature].
    pub variances: Vec<Vec<F>>,
}

impl<F: Float> GnbState<F> {
    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn log_joint(&self, class: usize, x: &[F]) -> F {
        let two = F::from_f64_lossy(2.0);
        let two_pi = F::from_f64_lossy(std::f64::consts::TAU);
        let mut lj = self.log_priors[class];
        for ((&v, &mu), &var) in x.iter().zip(&self.means[class]).zip(&self.variances[class]) {
            let diff = v - mu;
            lj = lj - (two_pi * var).ln() / two - diff * diff / (two * var);
        }
        lj
    }

    /// Posterior probability of the intrusion class.
    pub fn score_one(&self, x: &[F]) -> F {
        let l0 = self.log_joint(0, x);
        let l1 = self.log_joint(1, x);
        // σ(l1 − l0), computed stably.
        let d = l1 - l0;
        if d >= F::zero() {
            F::one() / (F::one() + (-d).exp())
        } else {
            let e = d.exp();
            e / (F::one() + e)
        }
    }
}

pub(crate) fn fit<F: Float>(
    params: &GnbParams,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    let d = xs[0].len();
    let n = xs.len();

    // Pooled per-feature variance over all classes, for the smoothing scale.
    let n_f = F::from_usize_lossy(n);
    let mut pooled_max = F::zero();
    for f in 0..d {
        let mean = xs.iter().map(|x| x[f]).fold(F::zero(), |a, b| a + b) / n_f;
        let var = xs
            .iter()
            .map(|x| (x[f] - mean) * (x[f] - mean))
            .fold(F::zero(), |a, b| a + b)
            / n_f;
        if var > pooled_max {
            pooled_max = var;
        }
    }
    let mut eps = F::from_f64_lossy(params.var_smoothing) * pooled_max;
    let floor = F::from_f64_lossy(VAR_ABS_FLOOR);
    if eps < floor {
        eps = floor;
    }

    let mut log_priors = Vec::with_capacity(2);
    let mut means = Vec::with_capacity(2);
    let mut variances = Vec::with_capacity(2);
    for label in ClassLabel::ALL {
        let rows: Vec<&Vec<F>> = xs
            .iter()
            .zip(ys)
            .filter(|(_, &y)| y == label)
            .map(|(x, _)| x)
            .collect();
        let m = F::from_usize_lossy(rows.len());
        log_priors.push((m / n_f).ln());
        let mut mu = vec![F::zero(); d];
        for row in &rows {
            for (s, &v) in mu.iter_mut().zip(row.iter()) {
                *s = *s + v;
            }
        }
        for s in &mut mu {
            *s = *s / m;
        }
        let mut var = vec![F::zero(); d];
        for row in &rows {
            for ((s, &v), &mean) in var.iter_mut().zip(row.iter()).zip(&mu) {
                let diff = v - mean;
                *s = *s + diff * diff;
            }
        }
        for s in &mut var {
            *s = *s / m + eps;
        }
        means.push(mu);
        variances.push(var);
    }

    let summary = TrainingSummary {
        iterations: 0,
        converged: true,
        objective: 0.0,
    };
    Ok((
        ModelState::Gnb(GnbState {
            log_priors,
            means,
            variances,
        }),
        summary,
    ))
}
