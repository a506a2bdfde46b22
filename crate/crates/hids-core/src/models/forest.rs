//! Random forest: bagged decision trees with per-tree derived seeds. Trees
//! train in parallel; because each tree's randomness comes only from its own
//! seed, the result is independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::tree::{build_tree, weighted_leaf_gini, TreeState};
use crate::models::{ModelError, ModelState, RForestParams, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::{derive_seed, Float};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct ForestState<F: Float> {
    pub trees: Vec<TreeState<F>>,
}

impl<F: Float> ForestState<F> {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    /// Mean of the trees' leaf positive fractions per query.
    pub fn score_many(&self, xs: &[Vec<F>]) -> Vec<F> {
        let n_trees = F::from_usize_lossy(self.trees.len());
        xs.iter()
            .map(|x| {
                let mut total = F::zero();
                for tree in &self.trees {
                    total = total + tree.score_one(x);
                }
                total / n_trees
            })
            .collect()
    }
}

pub(crate) fn fit<F: Float>(
    params: &RForestParams,
    seed: u64,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    let n = xs.len();
    let trees: Vec<TreeState<F>> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let items: Vec<usize> = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    &format!("model/rforest/tree/{t}/bootstrap"),
                ));
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &format!("model/rforest/tree/{t}/build"),
            ));
            build_tree(&params.tree, &mut rng, xs, ys, items)
        })
        .collect();

    let objective = trees.iter().map(weighted_leaf_gini).sum::<f64>() / params.n_trees as f64;
    let summary = TrainingSummary {
        iterations: params.n_trees,
        converged: true,
        objective,
    };
    Ok((ModelState::RForest(ForestState { trees }), summary))
}
