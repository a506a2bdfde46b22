//! L2-regularized logistic regression trained by gradient descent with
//! Armijo backtracking line search, on standardized features.
//!
//! Objective (mean form, bias unpenalized):
//! J(w, b) = (1/m)·Σ nll_i + (λ/(2m))·‖w‖², λ = 1.0 by default.

use serde::{Deserialize, Serialize};

use crate::models::{LogRegParams, ModelError, ModelState, Standardizer, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::Float;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct LogRegState<F: Float> {
    pub weights: Vec<F>,
    pub bias: F,
    pub standardizer: Standardizer<F>,
}

impl<F: Float> LogRegState<F> {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Posterior probability of the intrusion class; the normal posterior is
    /// its complement.
    pub fn score_one(&self, x: &[F]) -> F {
        let z = self.standardizer.transform_one(x);
        let mut t = self.bias;
        for (&w, &v) in self.weights.iter().zip(&z) {
            t = t + w * v;
        }
        sigmoid(t)
    }
}

fn sigmoid<F: Float>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// Stable −[y·ln σ(z) + (1−y)·ln(1−σ(z))] = max(z,0) − y·z + ln(1+e^{−|z|}).
fn nll<F: Float>(z: F, y: F) -> F {
    let zero = F::zero();
    let base = if z > zero { z } else { zero };
    base - y * z + (-z.abs()).exp().ln_1p()
}

struct Objective<'a, F: Float> {
    zs: &'a [Vec<F>],
    ys: &'a [F],
    l2: F,
}

impl<F: Float> Objective<'_, F> {
    fn value(&self, w: &[F], b: F) -> F {
        let m = F::from_usize_lossy(self.zs.len());
        let mut total = F::zero();
        for (z, &y) in self.zs.iter().zip(self.ys) {
            let mut t = b;
            for (&wi, &zi) in w.iter().zip(z) {
                t = t + wi * zi;
            }
            total = total + nll(t, y);
        }
        let mut penalty = F::zero();
        for &wi in w {
            penalty = penalty + wi * wi;
        }
        (total + self.l2 * penalty / F::from_f64_lossy(2.0)) / m
    }

    fn grad(&self, w: &[F], b: F) -> (Vec<F>, F) {
        let m = F::from_usize_lossy(self.zs.len());
        let mut gw = vec![F::zero(); w.len()];
        let mut gb = F::zero();
        for (z, &y) in self.zs.iter().zip(self.ys) {
            let mut t = b;
            for (&wi, &zi) in w.iter().zip(z) {
                t = t + wi * zi;
            }
            let r = sigmoid(t) - y;
            gb = gb + r;
            for (g, &zi) in gw.iter_mut().zip(z) {
                *g = *g + r * zi;
            }
        }
        for (g, &wi) in gw.iter_mut().zip(w) {
            *g = (*g + self.l2 * wi) / m;
        }
        (gw, gb / m)
    }
}

pub(crate) fn fit<F: Float>(
    params: &LogRegParams,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    let standardizer = Standardizer::fit(xs);
    let zs = standardizer.transform(xs);
    let y_real: Vec<F> = ys.iter().map(|y| F::from_f64_lossy(y.as_f64())).collect();
    let objective = Objective {
        zs: &zs,
        ys: &y_real,
        l2: F::from_f64_lossy(params.l2),
    };

    let d = xs[0].len();
    let mut w = vec![F::zero(); d];
    let mut b = F::zero();
    let mut value = objective.value(&w, b);
    let mut step = F::one();
    let c1 = F::from_f64_lossy(1e-4);
    let half = F::from_f64_lossy(0.5);
    let two = F::from_f64_lossy(2.0);
    let grad_tol = F::from_f64_lossy(params.grad_tol);

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let (gw, gb) = objective.grad(&w, b);
        let mut g_norm_sq = gb * gb;
        for &g in &gw {
            g_norm_sq = g_norm_sq + g * g;
        }
        if g_norm_sq.sqrt() < grad_tol {
            converged = true;
            break;
        }
        // Armijo backtracking from the (possibly grown) previous step.
        loop {
            let w_new: Vec<F> = w.iter().zip(&gw).map(|(&wi, &g)| wi - step * g).collect();
            let b_new = b - step * gb;
            let v_new = objective.value(&w_new, b_new);
            if v_new <= value - c1 * step * g_norm_sq {
                w = w_new;
                b = b_new;
                value = v_new;
                step = step * two;
                break;
            }
            step = step * half;
            if step.to_f64_lossy() < 1e-20 {
                // Cannot make progress (already at numerical optimum).
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }

    let summary = TrainingSummary {
        iterations,
        converged,
        objective: value.to_f64_lossy(),
    };
    Ok((
        ModelState::LogReg(LogRegState {
            weights: w,
            bias: b,
            standardizer,
        }),
        summary,
    ))
}
