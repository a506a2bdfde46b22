//! Small feed-forward network: input → ReLU hidden layer → softmax output,
//! trained with mini-batch stochastic gradient descent on cross-entropy.
//!
//! [`Network`] exposes `loss`, `grad`, and flat parameter get/set publicly so
//! analytic gradients can be checked against finite differences from tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::{MlpParams, ModelError, ModelState, Standardizer, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::{derive_seed, Float};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct Network<F: Float> {
    /// hidden × input weights.
    pub w1: Vec<Vec<F>>,
    pub b1: Vec<F>,
    /// output × hidden weights.
    pub w2: Vec<Vec<F>>,
    pub b2: Vec<F>,
}

/// Gradients with the same shapes as [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrad<F: Float> {
    pub w1: Vec<Vec<F>>,
    pub b1: Vec<F>,
    pub w2: Vec<Vec<F>>,
    pub b2: Vec<F>,
}

fn softmax<F: Float>(logits: &[F]) -> Vec<F> {
    let max = logits
        .iter()
        .copied()
        .fold(F::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total = exps.iter().copied().fold(F::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / total).collect()
}

impl<F: Float> Network<F> {
    pub fn zeros(n_in: usize, n_hidden: usize, n_out: usize) -> Self {
        Self {
            w1: vec![vec![F::zero(); n_in]; n_hidden],
            b1: vec![F::zero(); n_hidden],
            w2: vec![vec![F::zero(); n_hidden]; n_out],
            b2: vec![F::zero(); n_out],
        }
    }

    /// Uniform(−range, range) initialization from the given RNG.
    pub fn random(
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        range: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut draw = || F::from_f64_lossy(rng.gen_range(-range..range));
        let mut mat = |rows: usize, cols: usize| -> Vec<Vec<F>> {
            (0..rows)
                .map(|_| (0..cols).map(|_| draw()).collect())
                .collect()
        };
        let w1 = mat(n_hidden, n_in);
        let w2 = mat(n_out, n_hidden);
        let b1 = (0..n_hidden).map(|_| draw()).collect();
        let b2 = (0..n_out).map(|_| draw()).collect();
        Self { w1, b1, w2, b2 }
    }

    pub fn n_in(&self) -> usize {
        self.w1[0].len()
    }

    /// Hidden pre-activations, hidden activations, and output probabilities.
    pub fn forward(&self, x: &[F]) -> (Vec<F>, Vec<F>, Vec<F>) {
        let z1: Vec<F> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(row, &b)| {
                let mut t = b;
                for (&w, &v) in row.iter().zip(x) {
                    t = t + w * v;
                }
                t
            })
            .collect();
        let h: Vec<F> = z1
            .iter()
            .map(|&z| if z > F::zero() { z } else { F::zero() })
            .collect();
        let logits: Vec<F> = self
            .w2
            .iter()
            .zip(&self.b2)
            .map(|(row, &b)| {
                let mut t = b;
                for (&w, &v) in row.iter().zip(&h) {
                    t = t + w * v;
                }
                t
            })
            .collect();
        let probs = softmax(&logits);
        (z1, h, probs)
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, xs: &[Vec<F>], ys: &[usize]) -> F {
        let mut total = F::zero();
        for (x, &y) in xs.iter().zip(ys) {
            let (_, _, probs) = self.forward(x);
            total = total - probs[y].max(F::from_f64_lossy(1e-300)).ln();
        }
        total / F::from_usize_lossy(xs.len())
    }

    /// Mean analytic gradient of the cross-entropy over a batch.
    pub fn grad(&self, xs: &[Vec<F>], ys: &[usize]) -> NetworkGrad<F> {
        let n_hidden = self.b1.len();
        let n_out = self.b2.len();
        let n_in = self.n_in();
        let mut g = NetworkGrad {
            w1: vec![vec![F::zero(); n_in]; n_hidden],
            b1: vec![F::zero(); n_hidden],
            w2: vec![vec![F::zero(); n_hidden]; n_out],
            b2: vec![F::zero(); n_out],
        };
        for (x, &y) in xs.iter().zip(ys) {
            let (z1, h, probs) = self.forward(x);
            // Softmax + cross-entropy: dL/dlogit_o = p_o − 1[o = y].
            let dz2: Vec<F> = probs
                .iter()
                .enumerate()
                .map(|(o, &p)| if o == y { p - F::one() } else { p })
                .collect();
            for (o, &d2) in dz2.iter().enumerate() {
                g.b2[o] = g.b2[o] + d2;
                for (j, &hj) in h.iter().enumerate() {
                    g.w2[o][j] = g.w2[o][j] + d2 * hj;
                }
            }
            for (j, &z1j) in z1.iter().enumerate() {
                if z1j <= F::zero() {
                    continue;
                }
                let mut dh = F::zero();
                for (o, &d2) in dz2.iter().enumerate() {
                    dh = dh + d2 * self.w2[o][j];
                }
                g.b1[j] = g.b1[j] + dh;
                for (i, &xi) in x.iter().enumerate() {
                    g.w1[j][i] = g.w1[j][i] + dh * xi;
                }
            }
        }
        let m = F::from_usize_lossy(xs.len());
        for row in g.w1.iter_mut().chain(g.w2.iter_mut()) {
            for v in row {
                *v = *v / m;
            }
        }
        for v in g.b1.iter_mut().chain(g.b2.iter_mut()) {
            *v = *v / m;
        }
        g
    }

    /// All parameters flattened: w1 rows, b1, w2 rows, b2.
    pub fn params(&self) -> Vec<F> {
        let mut p = Vec::new();
        for row in &self.w1 {
            p.extend_from_slice(row);
        }
        p.extend_from_slice(&self.b1);
        for row in &self.w2 {
            p.extend_from_slice(row);
        }
        p.extend_from_slice(&self.b2);
        p
    }

    /// Inverse of [`params`]; panics on length mismatch.
    pub fn set_params(&mut self, flat: &[F]) {
        let mut it = flat.iter().copied();
        let mut take = |slot: &mut F| *slot = it.next().expect("parameter count matches");
        for row in &mut self.w1 {
            for v in row {
                take(v);
            }
        }
        for v in &mut self.b1 {
            take(v);
        }
        for row in &mut self.w2 {
            for v in row {
                take(v);
            }
        }
        for v in &mut self.b2 {
            take(v);
        }
        assert!(it.next().is_none(), "parameter count matches");
    }

    fn sgd_step(&mut self, grad: &NetworkGrad<F>, lr: F) {
        for (rw, rg) in self.w1.iter_mut().zip(&grad.w1) {
            for (w, &g) in rw.iter_mut().zip(rg) {
                *w = *w - lr * g;
            }
        }
        for (b, &g) in self.b1.iter_mut().zip(&grad.b1) {
            *b = *b - lr * g;
        }
        for (rw, rg) in self.w2.iter_mut().zip(&grad.w2) {
            for (w, &g) in rw.iter_mut().zip(rg) {
                *w = *w - lr * g;
            }
        }
        for (b, &g) in self.b2.iter_mut().zip(&grad.b2) {
            *b = *b - lr * g;
        }
    }
}

impl<F: Float> NetworkGrad<F> {
    pub fn params(&self) -> Vec<F> {
        let mut p = Vec::new();
        for row in &self.w1 {
            p.extend_from_slice(row);
        }
        p.extend_from_slice(&self.b1);
        for row in &self.w2 {
            p.extend_from_slice(row);
        }
        p.extend_from_slice(&self.b2);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct MlpState<F: Float> {
    pub network: Network<F>,
    pub standardizer: Standardizer<F>,
}

impl<F: Float> MlpState<F> {
    pub fn n_features(&self) -> usize {
        self.network.n_in()
    }

    /// Softmax posterior of the intrusion class.
    pub fn score_one(&self, x: &[F]) -> F {
        let z = self.standardizer.transform_one(x);
        let (_, _, probs) = self.network.forward(&z);
        probs[1]
    }
}

pub(crate) fn fit<F: Float>(
    params: &MlpParams,
    seed: u64,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    let standardizer = Standardizer::fit(xs);
    let zs = standardizer.transform(xs);
    let targets: Vec<usize> = ys.iter().map(|y| y.as_u8() as usize).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "model/mlp/init"));
    let mut network = Network::random(xs[0].len(), params.hidden, 2, params.init_range, &mut rng);
    let lr = F::from_f64_lossy(params.learning_rate);

    let mut order: Vec<usize> = (0..zs.len()).collect();
    let mut updates = 0usize;
    for epoch in 0..params.epochs {
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("model/mlp/epoch/{epoch}")));
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(params.batch_size) {
            let bx: Vec<Vec<F>> = batch.iter().map(|&i| zs[i].clone()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let grad = network.grad(&bx, &by);
            network.sgd_step(&grad, lr);
            updates += 1;
        }
    }

    let final_loss = network.loss(&zs, &targets).to_f64_lossy();
    let summary = TrainingSummary {
        iterations: updates,
        converged: true,
        objective: final_loss,
    };
    Ok((
        ModelState::Mlp(MlpState {
            network,
            standardizer,
        }),
        summary,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Scalar;

    #[test]
    fn zero_weights_tie_breaks_to_normal() {
        let state = MlpState {
            network: Network::<Scalar>::zeros(2, 6, 2),
            standardizer: Standardizer {
                means: vec![0.0, 0.0],
                stds: vec![1.0, 1.0],
            },
        };
        let score = state.score_one(&[3.0, -1.0]);
        assert_eq!(score, 0.5);
        // Uniform rule: 0.5 is not > 0.5, so the label is normal.
        assert!(score <= 0.5);
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let mut network = Network::<Scalar>::random(3, 4, 2, 0.5, &mut rng);
        let xs: Vec<Vec<Scalar>> = (0..8)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<usize> = (0..8).map(|i| i % 2).collect();

        let analytic = network.grad(&xs, &ys).params();
        let theta = network.params();
        let h = 1e-5;
        let mut numeric = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            network.set_params(&tp);
            let lp = network.loss(&xs, &ys);
            network.set_params(&tm);
            let lm = network.loss(&xs, &ys);
            numeric.push((lp - lm) / (2.0 * h));
        }
        network.set_params(&theta);

        let diff: Scalar = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<Scalar>()
            .sqrt();
        let scale: Scalar = analytic
            .iter()
            .map(|a| a * a)
            .sum::<Scalar>()
            .sqrt()
            .max(numeric.iter().map(|n| n * n).sum::<Scalar>().sqrt());
        assert!(
            diff / scale.max(1e-12) < 1e-4,
            "relative gradient error {}",
            diff / scale
        );
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let network = Network::<Scalar>::random(3, 5, 2, 0.5, &mut rng);
        let flat = network.params();
        let mut other = Network::<Scalar>::zeros(3, 5, 2);
        other.set_params(&flat);
        assert_eq!(network, other);
    }
}
