//! Run configuration: a flat key-value TOML document merged with
//! command-line overrides. Flags win over config-file values, which win
//! over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reldepth::dataset::DepthThreshold;
use reldepth::encoding::{AssembleOptions, SemanticEncoding};
use reldepth::matrix::GroupSet;
use reldepth::models::{Activation, ClassifierKind, Hyperparameters, SplitCriterion};
use reldepth::Error;

use crate::CommonArgs;

/// Raw config-file contents; every key optional.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub depth_manifest: Option<PathBuf>,
    pub thresholds: Option<Vec<u8>>,
    pub groups: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub lenient_depth: Option<bool>,
    pub invert_depth: Option<bool>,
    pub scene_confidence_weighting: Option<bool>,
    pub embeddings: Option<PathBuf>,
    pub rwa_weight: Option<String>,
    pub class_weighting: Option<bool>,

    pub dt_max_depth: Option<usize>,
    pub dt_min_samples_split: Option<usize>,
    pub dt_criterion: Option<String>,
    pub rf_n_trees: Option<usize>,
    pub rf_features_per_split: Option<usize>,
    pub rf_bootstrap: Option<bool>,
    pub lr_learning_rate: Option<f64>,
    pub lr_epochs: Option<usize>,
    pub lr_l2: Option<f64>,
    pub nn_hidden_widths: Option<Vec<usize>>,
    pub nn_activation: Option<String>,
    pub nn_learning_rate: Option<f64>,
    pub nn_epochs: Option<usize>,
    pub nn_batch_size: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, Error> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("config file '{}': {e}", path.display())))
    }
}

/// Per-command fallbacks applied when neither flags nor the config file
/// specify a value.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub thresholds: &'static [u8],
    pub groups: GroupDefault,
    pub models: ModelDefault,
}

#[derive(Debug, Clone)]
pub enum GroupDefault {
    Geo,
    Canonical,
}

#[derive(Debug, Clone)]
pub enum ModelDefault {
    Rf,
    All,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub depth_manifest: Option<PathBuf>,
    pub thresholds: Vec<u8>,
    pub groups: Vec<String>,
    pub models: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub lenient_depth: bool,
    pub invert_depth: bool,
    pub scene_confidence_weighting: bool,
    pub embeddings: Option<PathBuf>,
    pub rwa_weight: String,
    #[serde(skip)]
    pub hp: Hyperparameters,
    /// Echo of the hyperparameters for the run manifest.
    pub hyperparameters: serde_json::Value,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(
    values: &[String],
    what: &str,
) -> Result<Vec<T>, Error> {
    if values.is_empty() {
        return Err(Error::Config(format!("{what} list is empty")));
    }
    values.iter().map(|v| v.parse()).collect::<Result<_, _>>()
}

impl RunConfig {
    /// Resolve per-command defaults, config file and flags into one
    /// configuration (flags win, then the file, then the defaults).
    pub fn resolve(args: &CommonArgs, defaults: &Defaults) -> Result<RunConfig, Error> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let dataset =
            args.dataset.clone().or(file.dataset).ok_or_else(|| {
                Error::Config("missing 'dataset' (flag --dataset or config)".into())
            })?;
        let thresholds = if args.threshold.is_empty() {
            file.thresholds
                .unwrap_or_else(|| defaults.thresholds.to_vec())
        } else {
            args.threshold.clone()
        };
        if thresholds.is_empty() {
            return Err(Error::Config("thresholds list is empty".into()));
        }
        let groups = if args.groups.is_empty() {
            file.groups.unwrap_or_else(|| match defaults.groups {
                GroupDefault::Geo => vec!["geo".to_string()],
                GroupDefault::Canonical => GroupSet::canonical_combinations()
                    .iter()
                    .map(GroupSet::to_string)
                    .collect(),
            })
        } else {
            args.groups.clone()
        };
        let models = if args.model.is_empty() {
            file.models.unwrap_or_else(|| match defaults.models {
                ModelDefault::Rf => vec!["rf".to_string()],
                ModelDefault::All => ClassifierKind::ALL
                    .iter()
                    .map(|k| k.token().to_string())
                    .collect(),
            })
        } else {
            args.model.clone()
        };
        let folds = args.folds.or(file.folds).unwrap_or(5);
        if folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {folds}")));
        }
        let seed = args.seed.or(file.seed).unwrap_or(42);

        let mut hp = Hyperparameters::with_seed(seed);
        if let Some(v) = file.dt_max_depth {
            hp.tree.max_depth = v;
        }
        if let Some(v) = file.dt_min_samples_split {
            hp.tree.min_samples_split = v;
        }
        if let Some(v) = &file.dt_criterion {
            hp.tree.criterion = match v.as_str() {
                "gini" => SplitCriterion::Gini,
                "entropy" => SplitCriterion::Entropy,
                other => {
                    return Err(Error::Config(format!(
                        "dt_criterion must be 'gini' or 'entropy', got '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = file.rf_n_trees {
            hp.forest.n_trees = v;
        }
        if file.rf_features_per_split.is_some() {
            hp.forest.features_per_split = file.rf_features_per_split;
        }
        if let Some(v) = file.rf_bootstrap {
            hp.forest.bootstrap = v;
        }
        if let Some(v) = file.lr_learning_rate {
            hp.linear.learning_rate = v;
        }
        if let Some(v) = file.lr_epochs {
            hp.linear.epochs = v;
        }
        if let Some(v) = file.lr_l2 {
            hp.linear.l2 = v;
        }
        if let Some(v) = file.nn_hidden_widths {
            hp.neural.hidden_widths = v;
        }
        if let Some(v) = &file.nn_activation {
            hp.neural.activation = match v.as_str() {
                "relu" => Activation::Relu,
                "tanh" => Activation::Tanh,
                other => {
                    return Err(Error::Config(format!(
                        "nn_activation must be 'relu' or 'tanh', got '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = file.nn_learning_rate {
            hp.neural.learning_rate = v;
        }
        if let Some(v) = file.nn_epochs {
            hp.neural.epochs = v;
        }
        if let Some(v) = file.nn_batch_size {
            hp.neural.batch_size = v;
        }
        if let Some(v) = file.class_weighting {
            hp.class_weighting = v;
        }

        let rwa_weight = file
            .rwa_weight
            .unwrap_or_else(|| "inverse_distance".to_string());
        if !matches!(rwa_weight.as_str(), "inverse_distance" | "linear_taper") {
            return Err(Error::Config(format!(
                "rwa_weight must be 'inverse_distance' or 'linear_taper', got '{rwa_weight}'"
            )));
        }

        let config = RunConfig {
            dataset,
            depth_manifest: args.depth_manifest.clone().or(file.depth_manifest),
            thresholds,
            groups,
            models,
            folds,
            seed,
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            lenient_depth: file.lenient_depth.unwrap_or(false),
            invert_depth: file.invert_depth.unwrap_or(true),
            scene_confidence_weighting: file.scene_confidence_weighting.unwrap_or(false),
            embeddings: file.embeddings,
            rwa_weight,
            hyperparameters: serde_json::to_value(&hp)?,
            hp,
        };
        config.check_paths()?;
        Ok(config)
    }

    /// Referenced input paths must exist before any work starts.
    fn check_paths(&self) -> Result<(), Error> {
        let mut paths = vec![("dataset", &self.dataset)];
        if let Some(m) = &self.depth_manifest {
            paths.push(("depth_manifest", m));
        }
        if let Some(e) = &self.embeddings {
            paths.push(("embeddings", e));
        }
        for (field, path) in paths {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "{field} path '{}' does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn depth_thresholds(&self) -> Vec<DepthThreshold> {
        self.thresholds
            .iter()
            .copied()
            .map(DepthThreshold)
            .collect()
    }

    pub fn group_sets(&self) -> Result<Vec<GroupSet>, Error> {
        if self.groups.is_empty() {
            return Err(Error::Config("groups list is empty".into()));
        }
        self.groups.iter().map(|g| GroupSet::parse(g)).collect()
    }

    pub fn model_kinds(&self) -> Result<Vec<ClassifierKind>, Error> {
        parse_list(&self.models, "models")
    }

    pub fn rwa(&self) -> reldepth::depthmap::RadialWeight {
        match self.rwa_weight.as_str() {
            "linear_taper" => reldepth::depthmap::RadialWeight::LinearTaper,
            _ => reldepth::depthmap::RadialWeight::InverseDistance,
        }
    }

    pub fn assemble_options(&self) -> Result<AssembleOptions, Error> {
        let semantic = match &self.embeddings {
            None => SemanticEncoding::OneHot,
            Some(path) => {
                SemanticEncoding::Embeddings(reldepth::encoding::EmbeddingTable::load(path)?)
            }
        };
        Ok(AssembleOptions {
            semantic,
            scene_confidence_weighting: self.scene_confidence_weighting,
        })
    }
}
