//! k-nearest-neighbors with uniform weights and Euclidean distance.
//!
//! Distance ties are broken by training-set index (lower wins). When a query
//! coincides with a training point — common here, because balancing happens
//! before splitting — that training point participates as its own neighbor;
//! this self-inclusion is intentional and documented.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{KnnParams, ModelError, ModelState, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::Float;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct KnnState<F: Float> {
    pub k: usize,
    pub train_xs: Vec<Vec<F>>,
    pub train_ys: Vec<ClassLabel>,
}

impl<F: Float> KnnState<F> {
    pub fn n_features(&self) -> usize {
        self.train_xs[0].len()
    }

    fn score_query(&self, x: &[F]) -> F {
        let mut dists: Vec<(F, usize)> = self
            .train_xs
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut d = F::zero();
                for (&a, &b) in x.iter().zip(t) {
                    d = d + (a - b) * (a - b);
                }
                (d, i)
            })
            .collect();
        let k = self.k;
        let by_dist_then_index = |a: &(F, usize), b: &(F, usize)| {
            a.0.partial_cmp(&b.0)
                .expect("distances are finite")
                .then(a.1.cmp(&b.1))
        };
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, by_dist_then_index);
            dists.truncate(k);
        }
        let positives = dists
            .iter()
            .filter(|(_, i)| self.train_ys[*i] == ClassLabel::Intrusion)
            .count();
        F::from_usize_lossy(positives) / F::from_usize_lossy(k.min(self.train_xs.len()))
    }

    /// Positive fraction among the k nearest training points, per query.
    pub fn score_many(&self, xs: &[Vec<F>]) -> Vec<F> {
        xs.par_iter().map(|x| self.score_query(x)).collect()
    }
}

pub(crate) fn fit<F: Float>(
    params: &KnnParams,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    if params.k > xs.len() {
        return Err(ModelError::InvalidParams(format!(
            "k={} exceeds {} training points",
            params.k,
            xs.len()
        )));
    }
    let summary = TrainingSummary {
        iterations: 0,
        converged: true,
        objective: 0.0,
    };
    Ok((
        ModelState::Knn(KnnState {
            k: params.k,
            train_xs: xs.to_vec(),
            train_ys: ys.to_vec(),
        }),
        summary,
    ))
}
