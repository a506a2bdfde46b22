//! Native classifiers behind one uniform contract: [`fit`] → [`FittedModel`]
//! → `score`/`predict`.
//!
//! All eight models consume fixed-length feature vectors (each syscall number
//! cast to a real) and emit a real score where **higher = more
//! intrusion-like**. `predict` is derived uniformly from `score`: intrusion
//! iff `score > threshold`, where the threshold is 0.5 for probabilistic
//! scores and 0 for margins. A score exactly at the threshold predicts
//! normal, biasing ties toward fewer false positives.
//!
//! Hyperparameter defaults are pinned in each `*Params::default()` and
//! recorded in reports; changing a default is a breaking change to recorded
//! runs.

pub mod forest;
pub mod gnb;
pub mod kmeans;
pub mod knn;
pub mod logreg;
pub mod mlp;
pub mod standardize;
pub mod svm;
pub mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::preprocess::{ClassLabel, LabeledSequence};
use crate::Float;

pub use standardize::Standardizer;
pub use svm::kernel_poly;
pub use tree::gini_impurity;

/// Current on-disk model file version.
pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set lacks class {0}")]
    MissingClass(ClassLabel),
    #[error("feature length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("model file error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    KMeans,
    LogReg,
    SvmPoly,
    Mlp,
    DTree,
    RForest,
    Knn,
    Gnb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::KMeans,
        ModelKind::LogReg,
        ModelKind::SvmPoly,
        ModelKind::Mlp,
        ModelKind::DTree,
        ModelKind::RForest,
        ModelKind::Knn,
        ModelKind::Gnb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::KMeans => "kmeans",
            ModelKind::LogReg => "logreg",
            ModelKind::SvmPoly => "svm_poly",
            ModelKind::Mlp => "mlp",
            ModelKind::DTree => "dtree",
            ModelKind::RForest => "rforest",
            ModelKind::Knn => "knn",
            ModelKind::Gnb => "gnb",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown model {s:?}; known models: {}", known.join(", "))
            })
    }
}

/// How many features a split considers when searching tree splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    /// Every feature at every split (deterministic split search).
    All,
    /// ceil(√d) features drawn per split.
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 2,
            restarts: 10,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    /// L2 penalty strength on weights (bias unpenalized).
    pub l2: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            grad_tol: 1e-6,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmPolyParams {
    pub degree: u32,
    pub c: f64,
    pub coef0: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmPolyParams {
    fn default() -> Self {
        Self {
            degree: 3,
            c: 1.0,
            coef0: 0.0,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weights initialized uniform(−init_range, init_range).
    pub init_range: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 6,
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 50,
            init_range: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DTreeParams {
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub feature_subsample: FeatureSubsample,
}

impl Default for DTreeParams {
    fn default() -> Self {
        Self {
            min_samples_split: 10,
            min_samples_leaf: 5,
            feature_subsample: FeatureSubsample::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: DTreeParams,
}

impl Default for RForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            tree: DTreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnbParams {
    /// Variance smoothing as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for GnbParams {
    fn default() -> Self {
        Self {
            var_smoothing: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    KMeans(KMeansParams),
    LogReg(LogRegParams),
    SvmPoly(SvmPolyParams),
    Mlp(MlpParams),
    DTree(DTreeParams),
    RForest(RForestParams),
    Knn(KnnParams),
    Gnb(GnbParams),
}

impl ModelParams {
    pub fn defaults_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::KMeans => ModelParams::KMeans(KMeansParams::default()),
            ModelKind::LogReg => ModelParams::LogReg(LogRegParams::default()),
            ModelKind::SvmPoly => ModelParams::SvmPoly(SvmPolyParams::default()),
            ModelKind::Mlp => ModelParams::Mlp(MlpParams::default()),
            ModelKind::DTree => ModelParams::DTree(DTreeParams::default()),
            ModelKind::RForest => ModelParams::RForest(RForestParams::default()),
            ModelKind::Knn => ModelParams::Knn(KnnParams::default()),
            ModelKind::Gnb => ModelParams::Gnb(GnbParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::KMeans(_) => ModelKind::KMeans,
            ModelParams::LogReg(_) => ModelKind::LogReg,
            ModelParams::SvmPoly(_) => ModelKind::SvmPoly,
            ModelParams::Mlp(_) => ModelKind::Mlp,
            ModelParams::DTree(_) => ModelKind::DTree,
            ModelParams::RForest(_) => ModelKind::RForest,
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::Gnb(_) => ModelKind::Gnb,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        match self {
            ModelParams::KMeans(p) => {
                if p.k < 1 || p.restarts < 1 || p.max_iter < 1 || p.tol < 0.0 {
                    return bad(format!("kmeans: {p:?}"));
                }
            }
            ModelParams::LogReg(p) => {
                if p.l2 < 0.0 || p.grad_tol <= 0.0 || p.max_iter < 1 {
                    return bad(format!("logreg: {p:?}"));
                }
            }
            ModelParams::SvmPoly(p) => {
                if p.degree < 1 || p.c <= 0.0 || p.tol <= 0.0 || p.max_passes < 1 {
                    return bad(format!("svm_poly: {p:?}"));
                }
            }
            ModelParams::Mlp(p) => {
                if p.hidden < 1 || p.learning_rate <= 0.0 || p.batch_size < 1 || p.epochs < 1 {
                    return bad(format!("mlp: {p:?}"));
                }
            }
            ModelParams::DTree(p) => {
                if p.min_samples_split < 1 || p.min_samples_leaf < 1 {
                    return bad(format!("dtree: {p:?}"));
                }
            }
            ModelParams::RForest(p) => {
                if p.n_trees < 1 || p.tree.min_samples_split < 1 || p.tree.min_samples_leaf < 1 {
                    return bad(format!("rforest: {p:?}"));
                }
            }
            ModelParams::Knn(p) => {
                if p.k < 1 {
                    return bad(format!("knn: {p:?}"));
                }
            }
            ModelParams::Gnb(p) => {
                if p.var_smoothing < 0.0 {
                    return bad(format!("gnb: {p:?}"));
                }
            }
        }
        Ok(())
    }
}

/// What to train: the model family, its hyperparameters, and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub params: ModelParams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn with_defaults(kind: ModelKind, seed: u64) -> Self {
        Self {
            params: ModelParams::defaults_for(kind),
            seed,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound = "F: Float")]
pub enum ModelState<F: Float> {
    KMeans(kmeans::KMeansState<F>),
    LogReg(logreg::LogRegState<F>),
    SvmPoly(svm::SvmState<F>),
    Mlp(mlp::MlpState<F>),
    DTree(tree::TreeState<F>),
    RForest(forest::ForestState<F>),
    Knn(knn::KnnState<F>),
    Gnb(gnb::GnbState<F>),
}

/// A trained model: immutable, shareable, serializable. `predict` and
/// `score` are pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct FittedModel<F: Float> {
    pub spec: ModelSpec,
    pub summary: TrainingSummary,
    pub state: ModelState<F>,
}

impl<F: Float> FittedModel<F> {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    /// Feature length the model was trained on.
    pub fn n_features(&self) -> usize {
        match &self.state {
            ModelState::KMeans(s) => s.n_features(),
            ModelState::LogReg(s) => s.n_features(),
            ModelState::SvmPoly(s) => s.n_features(),
            ModelState::Mlp(s) => s.n_features(),
            ModelState::DTree(s) => s.n_features(),
            ModelState::RForest(s) => s.n_features(),
            ModelState::Knn(s) => s.n_features(),
            ModelState::Gnb(s) => s.n_features(),
        }
    }

    /// Decision threshold on the score scale: 0.5 for probabilistic scores,
    /// 0 for margins.
    pub fn threshold(&self) -> f64 {
        match self.kind() {
            ModelKind::KMeans | ModelKind::SvmPoly => 0.0,
            _ => 0.5,
        }
    }

    fn check_dims(&self, xs: &[Vec<F>]) -> Result<(), ModelError> {
        let expected = self.n_features();
        for x in xs {
            if x.len() != expected {
                return Err(ModelError::DimensionMismatch {
                    expected,
                    got: x.len(),
                });
            }
        }
        Ok(())
    }

    /// Real-valued outputs, higher = more intrusion-like.
    pub fn score(&self, xs: &[Vec<F>]) -> Result<Vec<F>, ModelError> {
        self.check_dims(xs)?;
        Ok(match &self.state {
            ModelState::KMeans(s) => xs.iter().map(|x| s.score_one(x)).collect(),
            ModelState::LogReg(s) => xs.iter().map(|x| s.score_one(x)).collect(),
            ModelState::SvmPoly(s) => xs.iter().map(|x| s.score_one(x)).collect(),
            ModelState::Mlp(s) => xs.iter().map(|x| s.score_one(x)).collect(),
            ModelState::DTree(s) => xs.iter().map(|x| s.score_one(x)).collect(),
            ModelState::RForest(s) => s.score_many(xs),
            ModelState::Knn(s) => s.score_many(xs),
            ModelState::Gnb(s) => xs.iter().map(|x| s.score_one(x)).collect(),
        })
    }

    /// Hard labels: intrusion iff score strictly exceeds the threshold.
    pub fn predict(&self, xs: &[Vec<F>]) -> Result<Vec<ClassLabel>, ModelError> {
        let threshold = self.threshold();
        Ok(self
            .score(xs)?
            .into_iter()
            .map(|s| {
                if s.to_f64_lossy() > threshold {
                    ClassLabel::Intrusion
                } else {
                    ClassLabel::Normal
                }
            })
            .collect())
    }

    /// Writes the model as versioned JSON.
    pub fn save_json(&self, mut w: impl Write) -> Result<(), ModelError> {
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            model: self,
        };
        let text =
            serde_json::to_string_pretty(&file).map_err(|e| ModelError::Format(e.to_string()))?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    /// Reads a model written by [`save_json`], rejecting unknown versions.
    pub fn load_json(mut r: impl Read) -> Result<Self, ModelError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let file: ModelFileOwned<F> =
            serde_json::from_str(&text).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.version != MODEL_FILE_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported model file version {} (expected {})",
                file.version, MODEL_FILE_VERSION
            )));
        }
        Ok(file.model)
    }
}

#[derive(Serialize)]
#[serde(bound = "F: Float")]
struct ModelFile<'a, F: Float> {
    version: u32,
    model: &'a FittedModel<F>,
}

#[derive(Deserialize)]
#[serde(bound = "F: Float")]
struct ModelFileOwned<F: Float> {
    version: u32,
    model: FittedModel<F>,
}

/// Casts labeled sequences into feature vectors (syscall number at each
/// position, as a real) plus labels.
pub fn sequences_to_features<F: Float>(seqs: &[LabeledSequence]) -> (Vec<Vec<F>>, Vec<ClassLabel>) {
    let xs = seqs
        .iter()
        .map(|s| {
            s.seq
                .iter()
                .map(|&v| F::from_f64_lossy(f64::from(v)))
                .collect()
        })
        .collect();
    let ys = seqs.iter().map(|s| s.label).collect();
    (xs, ys)
}

fn check_training_input<F: Float>(
    xs: &[Vec<F>],
    ys: &[ClassLabel],
    require_both_classes: bool,
) -> Result<usize, ModelError> {
    if xs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if xs.len() != ys.len() {
        return Err(ModelError::InvalidParams(format!(
            "{} feature vectors vs {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let n_features = xs[0].len();
    if n_features == 0 {
        return Err(ModelError::Degenerate("zero-length feature vectors".into()));
    }
    for x in xs {
        if x.len() != n_features {
            return Err(ModelError::DimensionMismatch {
                expected: n_features,
                got: x.len(),
            });
        }
    }
    if require_both_classes {
        for label in ClassLabel::ALL {
            if !ys.contains(&label) {
                return Err(ModelError::MissingClass(label));
            }
        }
    }
    Ok(n_features)
}

/// Trains any model kind. Deterministic given `(spec.seed, xs, ys)`.
pub fn fit<F: Float>(
    spec: &ModelSpec,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<FittedModel<F>, ModelError> {
    spec.params.validate()?;
    // K-means clusters without labels (they only color clusters afterwards),
    // so single-class training data is allowed there.
    let require_both = spec.kind() != ModelKind::KMeans;
    check_training_input(xs, ys, require_both)?;
    let (state, summary) = match &spec.params {
        ModelParams::KMeans(p) => kmeans::fit(p, spec.seed, xs, ys)?,
        ModelParams::LogReg(p) => logreg::fit(p, xs, ys)?,
        ModelParams::SvmPoly(p) => svm::fit(p, xs, ys)?,
        ModelParams::Mlp(p) => mlp::fit(p, spec.seed, xs, ys)?,
        ModelParams::DTree(p) => tree::fit(p, spec.seed, xs, ys)?,
        ModelParams::RForest(p) => forest::fit(p, spec.seed, xs, ys)?,
        ModelParams::Knn(p) => knn::fit(p, xs, ys)?,
        ModelParams::Gnb(p) => gnb::fit(p, xs, ys)?,
    };
    Ok(FittedModel {
        spec: spec.clone(),
        summary,
        state,
    })
}
