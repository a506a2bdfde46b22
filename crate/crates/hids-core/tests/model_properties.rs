//! Randomized model-contract invariants: probabilistic scores stay in
//! [0, 1], margin models are finite, and refitting is deterministic.

use hids_core::models::{fit, ModelKind, ModelSpec};
use hids_core::preprocess::ClassLabel;
use hids_core::Scalar;
use proptest::prelude::*;

/// Small two-class feature sets with integer-valued features (the native
/// feature space here is syscall ids) and at least three items per class.
fn training_set() -> impl Strategy<Value = (Vec<Vec<Scalar>>, Vec<ClassLabel>)> {
    let item = (prop::collection::vec(0u32..12, 4), prop::bool::ANY);
    prop::collection::vec(item, 12..28).prop_map(|items| {
        let mut xs: Vec<Vec<Scalar>> = Vec::new();
        let mut ys = Vec::new();
        for (i, (feats, pos)) in items.into_iter().enumerate() {
            // Pin the first six items so both classes always have ≥ 3
            // members (k-NN defaults need 3 neighbors).
            let label = if i < 6 {
                if i % 2 == 0 {
                    ClassLabel::Normal
                } else {
                    ClassLabel::Intrusion
                }
            } else if pos {
                ClassLabel::Intrusion
            } else {
                ClassLabel::Normal
            };
            // Separate the pinned items' features slightly so the data is
            // never fully degenerate.
            let mut x: Vec<Scalar> = feats.iter().map(|&v| Scalar::from(v)).collect();
            if i < 6 {
                x[0] += Scalar::from(i as u32) / 10.0;
            }
            xs.push(x);
            ys.push(label);
        }
        (xs, ys)
    })
}

const PROBABILISTIC: [ModelKind; 6] = [
    ModelKind::LogReg,
    ModelKind::Mlp,
    ModelKind::DTree,
    ModelKind::RForest,
    ModelKind::Knn,
    ModelKind::Gnb,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn probabilistic_scores_stay_in_unit_interval(
        (xs, ys) in training_set(),
        seed in any::<u64>(),
    ) {
        for kind in PROBABILISTIC {
            let spec = ModelSpec::with_defaults(kind, seed);
            let model = fit(&spec, &xs, &ys).unwrap();
            for s in model.score(&xs).unwrap() {
                prop_assert!((0.0..=1.0).contains(&s), "{kind:?} score {s}");
            }
        }
    }

    #[test]
    fn refitting_is_deterministic((xs, ys) in training_set(), seed in any::<u64>()) {
        for kind in [ModelKind::KMeans, ModelKind::DTree, ModelKind::RForest, ModelKind::Mlp] {
            let spec = ModelSpec::with_defaults(kind, seed);
            let (a, b) = match (fit(&spec, &xs, &ys), fit(&spec, &xs, &ys)) {
                (Ok(a), Ok(b)) => (a, b),
                // Degenerate draws (e.g. identical points for k-means) must
                // at least fail identically.
                (Err(a), Err(b)) => {
                    prop_assert_eq!(a.to_string(), b.to_string());
                    continue;
                }
                (a, b) => return Err(TestCaseError::fail(format!("one fit failed: {a:?} / {b:?}"))),
            };
            prop_assert_eq!(a.score(&xs).unwrap(), b.score(&xs).unwrap());
            prop_assert_eq!(a.predict(&xs).unwrap(), b.predict(&xs).unwrap());
        }
    }
}
