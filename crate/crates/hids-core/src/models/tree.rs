//! CART-style binary decision tree with Gini impurity.
//!
//! Split quality is compared in exact integer arithmetic (u128 cross
//! multiplication of the class-count fractions), so the chosen split is a
//! pure function of the counts with no floating-point tie ambiguity — ties
//! are broken by (lower feature index, lower threshold), implemented by
//! scanning candidates in that order and accepting only strict improvements.
//!
//! Trees are built iteratively over an explicit node stack; deep trees on
//! memorizable data cannot overflow the thread stack.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::{DTreeParams, FeatureSubsample, ModelError, ModelState, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::{derive_seed, Float};

/// 1 − p₀² − p₁² for class counts (neg, pos).
pub fn gini_impurity(neg: usize, pos: usize) -> Result<f64, ModelError> {
    let total = neg + pos;
    if total == 0 {
        return Err(ModelError::Degenerate(
            "gini impurity of an empty node is undefined".into(),
        ));
    }
    let p0 = neg as f64 / total as f64;
    let p1 = pos as f64 / total as f64;
    Ok(1.0 - p0 * p0 - p1 * p1)
}

/// Exact split-quality key. Minimizing weighted Gini over a fixed parent is
/// equivalent to maximizing
///   S = (neg_L² + pos_L²)/n_L + (neg_R² + pos_R²)/n_R,
/// stored as the exact fraction (num, den) with den = n_L·n_R.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SplitKey {
    num: u128,
    den: u128,
}

impl SplitKey {
    pub(crate) fn new(neg_l: usize, pos_l: usize, neg_r: usize, pos_r: usize) -> Self {
        let (nl, pl, nr, pr) = (neg_l as u128, pos_l as u128, neg_r as u128, pos_r as u128);
        let size_l = nl + pl;
        let size_r = nr + pr;
        debug_assert!(size_l > 0 && size_r > 0);
        let a = nl * nl + pl * pl;
        let c = nr * nr + pr * pr;
        SplitKey {
            num: a * size_r + c * size_l,
            den: size_l * size_r,
        }
    }

    /// Exact `self > other` via cross multiplication.
    pub(crate) fn better_than(&self, other: &SplitKey) -> bool {
        self.num * other.den > other.num * self.den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
#[serde(bound = "F: Float")]
pub enum Node<F: Float> {
    Leaf {
        /// Positive (intrusion) fraction of the training items that landed here.
        score: F,
        neg: usize,
        pos: usize,
    },
    Split {
        feature: usize,
        threshold: F,
        /// Arena index of the ≤-threshold child.
        left: usize,
        /// Arena index of the >-threshold child.
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct TreeState<F: Float> {
    /// Node arena; index 0 is the root.
    pub nodes: Vec<Node<F>>,
    pub n_features: usize,
}

impl<F: Float> TreeState<F> {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Leaf positive fraction for one query.
    pub fn score_one(&self, x: &[F]) -> F {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { score, .. } => return *score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node<F>> {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. }))
    }

    pub fn depth(&self) -> usize {
        fn walk<F: Float>(nodes: &[Node<F>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct BestSplit<F> {
    feature: usize,
    threshold: F,
    key: SplitKey,
}

/// Scans the candidate features (ascending) and every midpoint threshold
/// (ascending) and returns the exact-best split respecting `min_leaf`.
fn best_split<F: Float>(
    xs: &[Vec<F>],
    ys: &[ClassLabel],
    items: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit<F>> {
    let mut best: Option<BestSplit<F>> = None;
    let total = items.len();
    for &f in features {
        let mut column: Vec<(F, ClassLabel)> = items.iter().map(|&i| (xs[i][f], ys[i])).collect();
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("feature values are finite"));

        let mut neg_l = 0usize;
        let mut pos_l = 0usize;
        let total_pos = column
            .iter()
            .filter(|(_, y)| *y == ClassLabel::Intrusion)
            .count();
        let total_neg = total - total_pos;

        let mut idx = 0usize;
        while idx < total {
            // Consume the run of equal values.
            let value = column[idx].0;
            while idx < total && column[idx].0 == value {
                match column[idx].1 {
                    ClassLabel::Intrusion => pos_l += 1,
                    ClassLabel::Normal => neg_l += 1,
                }
                idx += 1;
            }
            if idx == total {
                break; // no boundary after the last distinct value
            }
            let size_l = neg_l + pos_l;
            let size_r = total - size_l;
            if size_l < min_leaf || size_r < min_leaf {
                continue;
            }
            let key = SplitKey::new(neg_l, pos_l, total_neg - neg_l, total_pos - pos_l);
            if best.as_ref().is_none_or(|b| key.better_than(&b.key)) {
                let next = column[idx].0;
                let threshold = (value + next) / F::from_f64_lossy(2.0);
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    key,
                });
            }
        }
    }
    best
}

fn class_counts(ys: &[ClassLabel], items: &[usize]) -> (usize, usize) {
    let pos = items
        .iter()
        .filter(|&&i| ys[i] == ClassLabel::Intrusion)
        .count();
    (items.len() - pos, pos)
}

/// Builds one tree over the given item indices. The RNG is consumed only by
/// feature subsampling; with `FeatureSubsample::All` the build is RNG-free.
pub(crate) fn build_tree<F: Float>(
    params: &DTreeParams,
    rng: &mut ChaCha8Rng,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
    items: Vec<usize>,
) -> TreeState<F> {
    let d = xs[0].len();
    let n_sub = match params.feature_subsample {
        FeatureSubsample::All => d,
        FeatureSubsample::Sqrt => (d as f64).sqrt().ceil() as usize,
    };
    let all_features: Vec<usize> = (0..d).collect();

    let mut nodes: Vec<Node<F>> = Vec::new();
    // Stack of (arena slot, items); left children are processed first.
    nodes.push(Node::Leaf {
        score: F::zero(),
        neg: 0,
        pos: 0,
    });
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, items)];

    while let Some((slot, node_items)) = stack.pop() {
        let (neg, pos) = class_counts(ys, &node_items);
        let make_leaf = |nodes: &mut Vec<Node<F>>| {
            nodes[slot] = Node::Leaf {
                score: F::from_usize_lossy(pos) / F::from_usize_lossy(neg + pos),
                neg,
                pos,
            };
        };
        if neg == 0 || pos == 0 || node_items.len() < params.min_samples_split {
            make_leaf(&mut nodes);
            continue;
        }
        let features: Vec<usize> = if n_sub >= d {
            all_features.clone()
        } else {
            let mut chosen: Vec<usize> =
                all_features.choose_multiple(rng, n_sub).copied().collect();
            chosen.sort_unstable();
            chosen
        };
        let Some(split) = best_split(xs, ys, &node_items, &features, params.min_samples_leaf)
        else {
            make_leaf(&mut nodes);
            continue;
        };
        let (left_items, right_items): (Vec<usize>, Vec<usize>) = node_items
            .into_iter()
            .partition(|&i| xs[i][split.feature] <= split.threshold);

        let left_slot = nodes.len();
        nodes.push(Node::Leaf {
            score: F::zero(),
            neg: 0,
            pos: 0,
        });
        let right_slot = nodes.len();
        nodes.push(Node::Leaf {
            score: F::zero(),
            neg: 0,
            pos: 0,
        });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_slot,
            right: right_slot,
        };
        stack.push((right_slot, right_items));
        stack.push((left_slot, left_items));
    }

    TreeState {
        nodes,
        n_features: d,
    }
}

/// Training impurity left in the leaves, weighted by leaf size.
pub(crate) fn weighted_leaf_gini<F: Float>(tree: &TreeState<F>) -> f64 {
    let mut weighted = 0.0;
    let mut total = 0usize;
    for leaf in tree.leaves() {
        if let Node::Leaf { neg, pos, .. } = leaf {
            let size = neg + pos;
            if size > 0 {
                weighted += gini_impurity(*neg, *pos).expect("non-empty leaf") * size as f64;
                total += size;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        weighted / total as f64
    }
}

pub(crate) fn fit<F: Float>(
    params: &DTreeParams,
    seed: u64,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "model/dtree/build"));
    let items: Vec<usize> = (0..xs.len()).collect();
    let tree = build_tree(params, &mut rng, xs, ys, items);
    let summary = TrainingSummary {
        iterations: tree.nodes.len(),
        converged: true,
        objective: weighted_leaf_gini(&tree),
    };
    Ok((ModelState::DTree(tree), summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit as fit_model, ModelKind, ModelSpec};
    use crate::Scalar;
    use rand::Rng;

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(5, 5).unwrap(), 0.5);
        assert_eq!(gini_impurity(8, 0).unwrap(), 0.0);
        assert!((gini_impurity(3, 1).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini_impurity(0, 0).is_err());
    }

    fn separable() -> (Vec<Vec<Scalar>>, Vec<ClassLabel>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..25 {
            xs.push(vec![i as Scalar]);
            ys.push(ClassLabel::Normal);
            xs.push(vec![100.0 + i as Scalar]);
            ys.push(ClassLabel::Intrusion);
        }
        (xs, ys)
    }

    #[test]
    fn separable_data_reaches_training_accuracy_one() {
        let (xs, ys) = separable();
        let spec = ModelSpec::with_defaults(ModelKind::DTree, 1);
        let model = fit_model(&spec, &xs, &ys).unwrap();
        assert_eq!(model.predict(&xs).unwrap(), ys);
    }

    /// Independent exhaustive root-split oracle: trial-partition the items at
    /// every (feature, midpoint) candidate and keep the exact best under the
    /// documented tie rule.
    fn exhaustive_root_split(
        xs: &[Vec<Scalar>],
        ys: &[ClassLabel],
        min_leaf: usize,
    ) -> Option<(usize, Scalar)> {
        let d = xs[0].len();
        let mut best: Option<(usize, Scalar, SplitKey)> = None;
        for f in 0..d {
            let mut values: Vec<Scalar> = xs.iter().map(|x| x[f]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for pair in values.windows(2) {
                let threshold = (pair[0] + pair[1]) / 2.0;
                let mut counts = [0usize; 4]; // neg_l, pos_l, neg_r, pos_r
                for (x, &y) in xs.iter().zip(ys) {
                    let left = x[f] <= threshold;
                    let idx = match (left, y) {
                        (true, ClassLabel::Normal) => 0,
                        (true, ClassLabel::Intrusion) => 1,
                        (false, ClassLabel::Normal) => 2,
                        (false, ClassLabel::Intrusion) => 3,
                    };
                    counts[idx] += 1;
                }
                if counts[0] + counts[1] < min_leaf || counts[2] + counts[3] < min_leaf {
                    continue;
                }
                let key = SplitKey::new(counts[0], counts[1], counts[2], counts[3]);
                if best.as_ref().is_none_or(|(_, _, k)| key.better_than(k)) {
                    best = Some((f, threshold, key));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    #[test]
    fn root_split_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let n = rng.gen_range(20..80);
            // Small value alphabet forces plenty of ties.
            let xs: Vec<Vec<Scalar>> = (0..n)
                .map(|_| (0..3).map(|_| rng.gen_range(0..6) as Scalar).collect())
                .collect();
            let ys: Vec<ClassLabel> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        ClassLabel::Intrusion
                    } else {
                        ClassLabel::Normal
                    }
                })
                .collect();
            if !ys.contains(&ClassLabel::Normal) || !ys.contains(&ClassLabel::Intrusion) {
                continue;
            }
            let params = DTreeParams {
                feature_subsample: FeatureSubsample::All,
                min_samples_split: 2,
                min_samples_leaf: 1,
            };
            let mut build_rng = ChaCha8Rng::seed_from_u64(0);
            let tree = build_tree(&params, &mut build_rng, &xs, &ys, (0..n).collect());
            let oracle = exhaustive_root_split(&xs, &ys, 1);
            match (&tree.nodes[0], oracle) {
                (
                    Node::Split {
                        feature, threshold, ..
                    },
                    Some((of, ot)),
                ) => {
                    assert_eq!((*feature, *threshold), (of, ot));
                }
                (Node::Leaf { .. }, None) => {}
                (node, oracle) => panic!("tree root {node:?} vs oracle {oracle:?}"),
            }
        }
    }

    #[test]
    fn equal_splits_prefer_lower_feature_index() {
        // Feature 1 mirrors feature 0, so every split quality ties; the
        // documented rule picks feature 0.
        let xs: Vec<Vec<Scalar>> = (0..30)
            .map(|i| {
                let v = if i < 15 {
                    i as Scalar
                } else {
                    50.0 + i as Scalar
                };
                vec![v, v]
            })
            .collect();
        let ys: Vec<ClassLabel> = (0..30)
            .map(|i| {
                if i < 15 {
                    ClassLabel::Normal
                } else {
                    ClassLabel::Intrusion
                }
            })
            .collect();
        let params = DTreeParams {
            feature_subsample: FeatureSubsample::All,
            ..DTreeParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = build_tree(&params, &mut rng, &xs, &ys, (0..30).collect());
        match &tree.nodes[0] {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn leaves_respect_min_leaf_when_split() {
        let (xs, ys) = separable();
        let spec = ModelSpec::with_defaults(ModelKind::DTree, 1);
        let model = fit_model(&spec, &xs, &ys).unwrap();
        let ModelState::DTree(tree) = &model.state else {
            panic!("wrong state")
        };
        if tree.nodes.len() > 1 {
            for leaf in tree.leaves() {
                if let Node::Leaf { neg, pos, .. } = leaf {
                    assert!(neg + pos >= 5, "leaf smaller than min_samples_leaf");
                }
            }
        }
    }

    #[test]
    fn subsampled_build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<Scalar>> = (0..60)
            .map(|_| (0..6).map(|_| rng.gen_range(0.0..10.0)).collect())
            .collect();
        let ys: Vec<ClassLabel> = (0..60)
            .map(|i| {
                if i % 2 == 0 {
                    ClassLabel::Normal
                } else {
                    ClassLabel::Intrusion
                }
            })
            .collect();
        let spec = ModelSpec::with_defaults(ModelKind::DTree, 17);
        let a = fit_model(&spec, &xs, &ys).unwrap();
        let b = fit_model(&spec, &xs, &ys).unwrap();
        assert_eq!(a.state, b.state);
    }
}
