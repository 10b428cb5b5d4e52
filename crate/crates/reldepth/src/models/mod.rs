//! The four classifiers behind a uniform train / predict / persist
//! contract: decision tree, random forest, multinomial logistic regression
//! and a small feed-forward network.
//!
//! All training is deterministic given the hyperparameters (including the
//! RNG seed): rerunning `train` on the same inputs yields an identical
//! model, and parallel sub-tasks get pre-derived sub-seeds.

mod forest;
mod linear;
mod neural;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::Real;

pub use forest::ForestModel;
pub use linear::{LinearModel, SoftmaxObjective};
pub use neural::{Activation, MlpObjective, NeuralModel};
pub use tree::{SplitCriterion, TreeModel, TreeNode};

/// The supported classifier families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree,
    RandomForest,
    LogisticRegression,
    NeuralNetwork,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::LogisticRegression,
        ClassifierKind::NeuralNetwork,
    ];

    /// Short token used on the command line and in report tables.
    pub fn token(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "dt",
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::LogisticRegression => "lr",
            ClassifierKind::NeuralNetwork => "nn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(ClassifierKind::DecisionTree),
            "rf" => Ok(ClassifierKind::RandomForest),
            "lr" => Ok(ClassifierKind::LogisticRegression),
            "nn" => Ok(ClassifierKind::NeuralNetwork),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected dt, rf, lr or nn)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub criterion: SplitCriterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_samples_split: 2,
            criterion: SplitCriterion::Gini,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features examined per split; `None` means `round(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralParams {
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for NeuralParams {
    fn default() -> Self {
        Self {
            hidden_widths: vec![64],
            activation: Activation::Relu,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
        }
    }
}

/// Hyperparameters for every model family plus the training seed. Only the
/// block matching the trained kind is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Hyperparameters {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub linear: LinearParams,
    pub neural: NeuralParams,
    /// Weight samples by inverse class frequency during training.
    pub class_weighting: bool,
    pub rng_seed: u64,
}

impl Hyperparameters {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("tree.max_depth", self.tree.max_depth),
            ("tree.min_samples_split", self.tree.min_samples_split),
            ("forest.n_trees", self.forest.n_trees),
            ("linear.epochs", self.linear.epochs),
            ("neural.epochs", self.neural.epochs),
            ("neural.batch_size", self.neural.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if let Some(m) = self.forest.features_per_split {
            if m == 0 {
                return Err(Error::Config(
                    "forest.features_per_split must be positive".into(),
                ));
            }
        }
        for (name, v) in [
            ("linear.learning_rate", self.linear.learning_rate),
            ("neural.learning_rate", self.neural.learning_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.linear.l2 < 0.0 || !self.linear.l2.is_finite() {
            return Err(Error::Config("linear.l2 must be non-negative".into()));
        }
        if self.neural.hidden_widths.contains(&0) {
            return Err(Error::Config(
                "neural.hidden_widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Learned parameters of one classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams<R> {
    Tree(TreeModel<R>),
    Forest(ForestModel<R>),
    Linear(LinearModel<R>),
    Neural(NeuralModel<R>),
}

/// A trained classifier bound to the feature schema it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<R> {
    kind: ClassifierKind,
    hp: Hyperparameters,
    columns: Vec<String>,
    n_classes: usize,
    params: ModelParams<R>,
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax_tie_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-class training weights: uniform, or inverse class frequency when
/// enabled.
fn class_weights(y: &[usize], n_classes: usize, enabled: bool) -> Vec<f64> {
    if !enabled {
        return vec![1.0; n_classes];
    }
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                y.len() as f64 / (n_classes as f64 * c as f64)
            }
        })
        .collect()
}

/// Train a classifier of the requested kind.
pub fn train<R: Real>(
    kind: ClassifierKind,
    x: &FeatureMatrix<R>,
    y: &[usize],
    hp: &Hyperparameters,
) -> Result<TrainedModel<R>> {
    hp.validate()?;
    if x.n_rows() == 0 {
        return Err(Error::Training("empty training matrix".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            context: "labels vs training rows",
            left: y.len(),
            right: x.n_rows(),
        });
    }
    let n_classes = y.iter().copied().max().unwrap() + 1;
    let distinct = {
        let mut seen = vec![false; n_classes];
        for &c in y {
            seen[c] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::Training(format!(
            "need at least 2 distinct classes, got {distinct}"
        )));
    }
    let weights = class_weights(y, n_classes, hp.class_weighting);
    let params = match kind {
        ClassifierKind::DecisionTree => {
            ModelParams::Tree(tree::train(x, y, n_classes, &weights, &hp.tree))
        }
        ClassifierKind::RandomForest => ModelParams::Forest(forest::train(
            x,
            y,
            n_classes,
            &weights,
            &hp.tree,
            &hp.forest,
            hp.rng_seed,
        )),
        ClassifierKind::LogisticRegression => {
            ModelParams::Linear(linear::train(x, y, n_classes, &weights, &hp.linear))
        }
        ClassifierKind::NeuralNetwork => ModelParams::Neural(neural::train(
            x,
            y,
            n_classes,
            &weights,
            &hp.neural,
            hp.rng_seed,
        )),
    };
    Ok(TrainedModel {
        kind,
        hp: hp.clone(),
        columns: x.column_names(),
        n_classes,
        params,
    })
}

impl<R: Real> TrainedModel<R> {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn params(&self) -> &ModelParams<R> {
        &self.params
    }

    fn check_schema(&self, x: &FeatureMatrix<R>) -> Result<()> {
        if x.column_names() != self.columns {
            return Err(Error::SchemaMismatch(format!(
                "model trained on {} columns, input has {}",
                self.columns.len(),
                x.n_cols()
            )));
        }
        Ok(())
    }

    /// Predicted class label per row.
    pub fn predict(&self, x: &FeatureMatrix<R>) -> Result<Vec<usize>> {
        self.check_schema(x)?;
        Ok(match &self.params {
            ModelParams::Tree(t) => x.rows().map(|r| t.predict_row(r)).collect(),
            ModelParams::Forest(f) => x.rows().map(|r| f.predict_row(r)).collect(),
            ModelParams::Linear(l) => x.rows().map(|r| l.predict_row(r)).collect(),
            ModelParams::Neural(n) => x.rows().map(|r| n.predict_row(r)).collect(),
        })
    }

    /// Class-probability rows. Trees predict hard labels only, so the
    /// decision tree returns `None`.
    pub fn predict_proba(&self, x: &FeatureMatrix<R>) -> Result<Option<Vec<Vec<R>>>> {
        self.check_schema(x)?;
        Ok(match &self.params {
            ModelParams::Tree(_) => None,
            ModelParams::Forest(f) => Some(x.rows().map(|r| f.proba_row(r)).collect()),
            ModelParams::Linear(l) => Some(x.rows().map(|r| l.proba_row(r)).collect()),
            ModelParams::Neural(n) => Some(x.rows().map(|r| n.proba_row(r)).collect()),
        })
    }
}

// --- persistence ------------------------------------------------------------

const MODEL_FORMAT: &str = "reldepth-model";
const MODEL_VERSION: u32 = 1;

/// Serialized form of a trained model: a versioned JSON document with the
/// learned parameters as flat numeric arrays plus their shapes.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    format: String,
    version: u32,
    kind: ClassifierKind,
    n_classes: usize,
    columns: Vec<String>,
    hyperparameters: Hyperparameters,
    params: ParamsDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ParamsDoc {
    Tree {
        nodes: Vec<NodeDoc>,
        n_features: usize,
    },
    Forest {
        trees: Vec<TreeDoc>,
    },
    Linear {
        shape: [usize; 2],
        data: Vec<f64>,
    },
    Neural {
        dims: Vec<usize>,
        activation: Activation,
        data: Vec<f64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
    n_features: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NodeDoc {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

fn tree_to_doc<R: Real>(t: &TreeModel<R>) -> TreeDoc {
    TreeDoc {
        nodes: t
            .nodes()
            .iter()
            .map(|n| match n {
                TreeNode::Leaf { class } => NodeDoc::Leaf { class: *class },
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => NodeDoc::Split {
                    feature: *feature,
                    threshold: threshold.as_f64(),
                    left: *left,
                    right: *right,
                },
            })
            .collect(),
        n_features: t.n_features(),
    }
}

fn tree_from_doc<R: Real>(doc: TreeDoc, n_classes: usize) -> Result<TreeModel<R>> {
    let n_nodes = doc.nodes.len();
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| match n {
            NodeDoc::Leaf { class } if class < n_classes => Ok(TreeNode::Leaf { class }),
            NodeDoc::Leaf { class } => {
                Err(Error::Config(format!("leaf class {class} out of range")))
            }
            NodeDoc::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if left >= n_nodes || right >= n_nodes || feature >= doc.n_features {
                    return Err(Error::Config("split node index out of range".into()));
                }
                Ok(TreeNode::Split {
                    feature,
                    threshold: R::from_f64_lossy(threshold),
                    left,
                    right,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TreeModel::from_nodes(nodes, doc.n_features)
}

impl<R: Real> TrainedModel<R> {
    pub fn to_doc(&self) -> ModelDoc {
        let params = match &self.params {
            ModelParams::Tree(t) => {
                let doc = tree_to_doc(t);
                ParamsDoc::Tree {
                    nodes: doc.nodes,
                    n_features: doc.n_features,
                }
            }
            ModelParams::Forest(f) => ParamsDoc::Forest {
                trees: f.trees().iter().map(tree_to_doc).collect(),
            },
            ModelParams::Linear(l) => ParamsDoc::Linear {
                shape: l.shape(),
                data: l.weights().iter().map(|w| w.as_f64()).collect(),
            },
            ModelParams::Neural(n) => ParamsDoc::Neural {
                dims: n.dims().to_vec(),
                activation: n.activation(),
                data: n.weights().iter().map(|w| w.as_f64()).collect(),
            },
        };
        ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            kind: self.kind,
            n_classes: self.n_classes,
            columns: self.columns.clone(),
            hyperparameters: self.hp.clone(),
            params,
        }
    }

    pub fn from_doc(doc: ModelDoc) -> Result<TrainedModel<R>> {
        if doc.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "not a model document (format '{}')",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Version {
                artifact: "model",
                found: doc.version,
                expected: MODEL_VERSION,
            });
        }
        let params = match doc.params {
            ParamsDoc::Tree { nodes, n_features } => {
                ModelParams::Tree(tree_from_doc(TreeDoc { nodes, n_features }, doc.n_classes)?)
            }
            ParamsDoc::Forest { trees } => {
                let trees = trees
                    .into_iter()
                    .map(|t| tree_from_doc(t, doc.n_classes))
                    .collect::<Result<Vec<_>>>()?;
                ModelParams::Forest(ForestModel::from_trees(trees, doc.n_classes)?)
            }
            ParamsDoc::Linear { shape, data } => {
                let weights = data.into_iter().map(R::from_f64_lossy).collect();
                ModelParams::Linear(LinearModel::from_parts(shape, weights)?)
            }
            ParamsDoc::Neural {
                dims,
                activation,
                data,
            } => {
                let weights = data.into_iter().map(R::from_f64_lossy).collect();
                ModelParams::Neural(NeuralModel::from_parts(dims, activation, weights)?)
            }
        };
        let expected_kind = match &params {
            ModelParams::Tree(_) => ClassifierKind::DecisionTree,
            ModelParams::Forest(_) => ClassifierKind::RandomForest,
            ModelParams::Linear(_) => ClassifierKind::LogisticRegression,
            ModelParams::Neural(_) => ClassifierKind::NeuralNetwork,
        };
        if doc.kind != expected_kind {
            return Err(Error::Config(format!(
                "model kind '{}' does not match its parameters",
                doc.kind
            )));
        }
        Ok(TrainedModel {
            kind: doc.kind,
            hp: doc.hyperparameters,
            columns: doc.columns,
            n_classes: doc.n_classes,
            params,
        })
    }
}

/// Write a model to disk as versioned JSON.
pub fn save<R: Real>(model: &TrainedModel<R>, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(&model.to_doc())?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Load a model saved by [`save`].
pub fn load<R: Real>(path: impl AsRef<Path>) -> Result<TrainedModel<R>> {
    let text = std::fs::read_to_string(path)?;
    let doc: ModelDoc = serde_json::from_str(&text)?;
    TrainedModel::from_doc(doc)
}

#[cfg(test)]
mod tests;
