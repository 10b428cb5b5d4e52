//! Stratified k-fold cross-validation, accuracy/confusion reporting and the
//! experiment grid over feature groups x models x thresholds.
//!
//! All per-fold fitting (vocabularies, standardizer, model) happens strictly
//! inside the fold's training split; held-out rows never influence fitted
//! parameters.

pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    class_distribution, ClassDistribution, DepthThreshold, RelClass, CLASS_COUNT,
};
use crate::encoding::{assemble, AssembleOptions, PairFeatures, SemanticEncoding, Vocabularies};
use crate::error::{Error, Result};
use crate::matrix::GroupSet;
use crate::models::{self, ClassifierKind, Hyperparameters, TrainedModel};
use crate::util::derive_seed;
use crate::Real;

/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 5;

/// Assignment of every row to one of `k` folds, stratified so per-class
/// counts across folds differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Stratified fold assignment: rows of each class are shuffled with the
/// seed, then dealt round-robin across folds. A rotating starting fold keeps
/// overall fold sizes balanced as well.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("fold count must be >= 2, got {k}")));
    }
    if k > y.len() {
        return Err(Error::Config(format!(
            "fold count {k} exceeds the {} rows",
            y.len()
        )));
    }
    let n_classes = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = crate::util::rng(seed);
    let mut fold_of = vec![0usize; y.len()];
    let mut offset = 0usize;
    for indices in by_class.iter_mut() {
        use rand::seq::SliceRandom;
        indices.shuffle(&mut rng);
        for (i, &row) in indices.iter().enumerate() {
            fold_of[row] = (offset + i) % k;
        }
        offset = (offset + indices.len()) % k;
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Square confusion-count matrix indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class * self.n_classes + predicted] += 1;
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> usize {
        self.counts[true_class * self.n_classes + predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes).map(|i| self.count(i, i)).sum()
    }

    /// Normalized trace; errors on an empty matrix.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::Config("accuracy of empty confusion matrix".into()));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        debug_assert_eq!(self.n_classes, other.n_classes);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.counts
            .chunks_exact(self.n_classes)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn from_pairs(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::LengthMismatch {
                context: "true vs predicted labels",
                left: y_true.len(),
                right: y_pred.len(),
            });
        }
        let mut m = ConfusionMatrix::new(n_classes);
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::Config(format!(
                    "label out of range: true {t}, predicted {p}, classes {n_classes}"
                )));
            }
            m.record(t, p);
        }
        Ok(m)
    }
}

/// Fraction of positions where the two aligned label lists agree.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            context: "true vs predicted labels",
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Config("accuracy of empty label lists".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// 3-way confusion matrix of predicted relative depth classes.
pub fn confusion(y_true: &[usize], y_pred: &[usize]) -> Result<ConfusionMatrix> {
    ConfusionMatrix::from_pairs(y_true, y_pred, CLASS_COUNT)
}

/// One cell of the experiment grid.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub groups: GroupSet,
    pub model: ClassifierKind,
    pub threshold: DepthThreshold,
    pub hp: Hyperparameters,
    pub folds: usize,
    pub options: AssembleOptions,
}

impl ExperimentSpec {
    pub fn new(groups: GroupSet, model: ClassifierKind, threshold: DepthThreshold) -> Self {
        Self {
            groups,
            model,
            threshold,
            hp: Hyperparameters::default(),
            folds: DEFAULT_FOLDS,
            options: AssembleOptions::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.hp.rng_seed = seed;
        self
    }
}

/// Identifying coordinates of a spec, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub groups: String,
    pub model: String,
    pub threshold: u8,
    pub folds: usize,
    pub seed: u64,
    pub semantic: String,
    pub scene_confidence_weighting: bool,
}

impl SpecEcho {
    fn of(spec: &ExperimentSpec) -> SpecEcho {
        SpecEcho {
            groups: spec.groups.to_string(),
            model: spec.model.to_string(),
            threshold: spec.threshold.0,
            folds: spec.folds,
            seed: spec.hp.rng_seed,
            semantic: match &spec.options.semantic {
                SemanticEncoding::OneHot => "one_hot".to_string(),
                SemanticEncoding::Embeddings(t) => format!("embeddings(dim={})", t.dim()),
            },
            scene_confidence_weighting: spec.options.scene_confidence_weighting,
        }
    }
}

/// Cross-validated evaluation of one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub spec: SpecEcho,
    pub fold_accuracies: Vec<f64>,
    /// Mean of the per-fold accuracies (the headline number).
    pub mean_accuracy: f64,
    /// Micro accuracy pooled over all held-out predictions, reported for
    /// transparency alongside the fold mean.
    pub pooled_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub class_distribution: ClassDistribution,
    pub notes: Vec<String>,
}

/// Everything fitted on one fold's training split.
#[derive(Debug, Clone)]
pub struct FittedFold<R> {
    pub vocabularies: Vocabularies,
    pub standardizer: crate::encoding::Standardizer<R>,
    pub model: TrainedModel<R>,
}

impl<R: Real> FittedFold<R> {
    /// Fit vocabularies, standardizer and model on the training rows only.
    pub fn fit(
        rows: &[PairFeatures<R>],
        train_idx: &[usize],
        spec: &ExperimentSpec,
        seed: u64,
    ) -> Result<FittedFold<R>> {
        let train_rows: Vec<&PairFeatures<R>> = train_idx.iter().map(|&i| &rows[i]).collect();
        let vocabularies = Vocabularies::fit(&train_rows);
        let raw = assemble(
            &train_rows,
            &spec.groups,
            &vocabularies,
            spec.threshold,
            &spec.options,
        )?;
        let standardizer = crate::encoding::fit_standardizer(&raw);
        let x = standardizer.apply(&raw)?;
        let y = raw.labels().to_vec();
        let mut hp = spec.hp.clone();
        hp.rng_seed = seed;
        let model = models::train(spec.model, &x, &y, &hp)?;
        Ok(FittedFold {
            vocabularies,
            standardizer,
            model,
        })
    }

    /// Predict classes for arbitrary rows using the fold's fitted encoders.
    pub fn predict(&self, rows: &[&PairFeatures<R>], spec: &ExperimentSpec) -> Result<Vec<usize>> {
        let raw = assemble(
            rows,
            &spec.groups,
            &self.vocabularies,
            spec.threshold,
            &spec.options,
        )?;
        let x = self.standardizer.apply(&raw)?;
        self.model.predict(&x)
    }
}

/// Run stratified cross-validation for one spec over the pair rows.
pub fn run_experiment<R: Real>(
    spec: &ExperimentSpec,
    rows: &[PairFeatures<R>],
) -> Result<EvaluationReport> {
    let labels: Vec<usize> = rows.iter().map(|r| r.class_at(spec.threshold)).collect();
    let assignment = stratified_kfold(&labels, spec.folds, spec.hp.rng_seed)?;

    let fold_seeds: Vec<u64> = (0..spec.folds)
        .map(|f| derive_seed(spec.hp.rng_seed, 1 + f as u64))
        .collect();
    let fold_results: Vec<Result<(f64, ConfusionMatrix)>> = fold_seeds
        .par_iter()
        .enumerate()
        .map(|(fold, &seed)| {
            let train_idx = assignment.train_indices(fold);
            let test_idx = assignment.test_indices(fold);
            let fitted = FittedFold::fit(rows, &train_idx, spec, seed)
                .map_err(|e| Error::Training(format!("fold {fold}: {e}")))?;
            let test_rows: Vec<&PairFeatures<R>> = test_idx.iter().map(|&i| &rows[i]).collect();
            let predicted = fitted.predict(&test_rows, spec)?;
            let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
            let acc = accuracy(&truth, &predicted)?;
            let confusion = ConfusionMatrix::from_pairs(&truth, &predicted, CLASS_COUNT)?;
            Ok((acc, confusion))
        })
        .collect();

    let mut fold_accuracies = Vec::with_capacity(spec.folds);
    let mut pooled = ConfusionMatrix::new(CLASS_COUNT);
    for r in fold_results {
        let (acc, conf) = r?;
        fold_accuracies.push(acc);
        pooled.merge(&conf);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    let pooled_accuracy = pooled.accuracy()?;

    let mut notes = Vec::new();
    if spec.threshold.0 >= 5 {
        notes.push(format!(
            "threshold {} inflates the equal class; accuracies are imbalance-prone",
            spec.threshold
        ));
    }
    if !spec.groups.is_canonical() {
        notes.push(format!(
            "group combination {} is not one of the eight standard ones",
            spec.groups
        ));
    }

    let dist = class_distribution(
        labels
            .iter()
            .map(|&l| RelClass::from_index(l).expect("labels derive from RelClass")),
    );

    Ok(EvaluationReport {
        spec: SpecEcho::of(spec),
        fold_accuracies,
        mean_accuracy,
        pooled_accuracy,
        confusion: pooled,
        class_distribution: dist,
        notes,
    })
}

/// A successfully evaluated grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEntry {
    pub spec_index: usize,
    pub report: EvaluationReport,
}

/// A failed grid cell; the grid keeps running.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFailure {
    pub spec_index: usize,
    pub spec: SpecEcho,
    pub error: String,
}

/// Reports for every spec, sorted descending by mean accuracy (ties keep
/// spec order), plus isolated per-spec failures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridOutcome {
    pub entries: Vec<GridEntry>,
    pub failures: Vec<GridFailure>,
}

/// Run every spec of the grid; failures are recorded, not propagated.
pub fn run_grid<R: Real>(specs: &[ExperimentSpec], rows: &[PairFeatures<R>]) -> GridOutcome {
    let results: Vec<(usize, Result<EvaluationReport>)> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| (i, run_experiment(spec, rows)))
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (spec_index, result) in results {
        match result {
            Ok(report) => entries.push(GridEntry { spec_index, report }),
            Err(e) => failures.push(GridFailure {
                spec_index,
                spec: SpecEcho::of(&specs[spec_index]),
                error: e.to_string(),
            }),
        }
    }
    entries.sort_by(|a, b| {
        b.report
            .mean_accuracy
            .partial_cmp(&a.report.mean_accuracy)
            .expect("accuracies are finite")
            .then(a.spec_index.cmp(&b.spec_index))
    });
    GridOutcome { entries, failures }
}

/// The full default grid: the eight group combinations x all four models x
/// the given thresholds.
pub fn default_grid_specs(
    thresholds: &[DepthThreshold],
    folds: usize,
    seed: u64,
    hp: &Hyperparameters,
    options: &AssembleOptions,
) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for groups in GroupSet::canonical_combinations() {
        for model in ClassifierKind::ALL {
            for &threshold in thresholds {
                let mut hp = hp.clone();
                hp.rng_seed = seed;
                specs.push(ExperimentSpec {
                    groups,
                    model,
                    threshold,
                    hp,
                    folds,
                    options: options.clone(),
                });
            }
        }
    }
    specs
}
