//! Encoders that turn annotations plus geometric features into numeric
//! model-ready matrices: one-hot categorical encoding (with an optional
//! embedding-table alternative for object labels), per-column
//! standardization fitted on training rows only, and feature-group
//! selection.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{derive_class, DepthThreshold, ImageRecord, PairInstance};
use crate::error::{Error, Result};
use crate::geometry::{self, GeometricFeatures};
use crate::matrix::{Column, FeatureGroup, FeatureMatrix, GroupSet};
use crate::Real;

/// Sorted, de-duplicated category list with an index lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    entries: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Build from any iterator of category strings; entries are sorted and
    /// de-duplicated so the result is stable across runs.
    pub fn build<I, S>(values: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries: Vec<String> = values.into_iter().map(|s| s.as_ref().to_string()).collect();
        entries.sort_unstable();
        entries.dedup();
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Vocabulary { entries, index }
    }

    /// Restore the index map after deserialization.
    fn reindex(&mut self) {
        self.index = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.index.get(value).copied()
    }

    /// One-hot encode a value. Unknown categories encode as all zeros (and
    /// are logged) so unseen labels at prediction time degrade gracefully
    /// instead of erroring.
    pub fn one_hot<R: Real>(&self, value: &str) -> Vec<R> {
        let mut v = vec![R::zero(); self.len()];
        match self.index_of(value) {
            Some(i) => v[i] = R::one(),
            None => log::debug!("category '{value}' not in vocabulary, encoded as zeros"),
        }
        v
    }
}

/// Build a vocabulary from a list of category strings.
pub fn build_vocabulary<I, S>(values: I) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Vocabulary::build(values)
}

/// Token-to-vector table loaded from a plain-text file of
/// `token v1 v2 ... vd` lines, usable as an alternative object-label
/// encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    table: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn load(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn read(r: impl BufRead) -> Result<EmbeddingTable> {
        let mut table = BTreeMap::new();
        let mut dim = None;
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let vector: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|e| {
                        Error::Config(format!("embedding line {}: bad value '{p}': {e}", ln + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "embedding line {}: non-finite component",
                    ln + 1
                )));
            }
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::Config(format!(
                        "embedding line {}: dimension {} != {}",
                        ln + 1,
                        vector.len(),
                        d
                    )))
                }
                _ => {}
            }
            table.insert(token.to_string(), vector);
        }
        let dim = dim.ok_or_else(|| Error::Config("empty embedding table".into()))?;
        if dim == 0 {
            return Err(Error::Config("embedding vectors must be non-empty".into()));
        }
        Ok(EmbeddingTable { dim, table })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.table.get(token).map(Vec::as_slice)
    }

    /// Embedding of a token, or the zero vector for unknown tokens.
    pub fn encode<R: Real>(&self, token: &str) -> Vec<R> {
        match self.lookup(token) {
            Some(v) => v.iter().map(|&x| R::from_f64_lossy(x)).collect(),
            None => {
                log::debug!("token '{token}' not in embedding table, encoded as zeros");
                vec![R::zero(); self.dim]
            }
        }
    }
}

/// How object labels are turned into semantic columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SemanticEncoding {
    /// One-hot over the fitted label vocabulary (the default).
    #[default]
    OneHot,
    /// Dense vectors from a pre-trained token table.
    Embeddings(EmbeddingTable),
}

/// Per-column mean and standard deviation fitted on training rows only.
///
/// Uses the population standard deviation; columns that are constant on the
/// training rows keep a deviation of 1 so they transform to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<R> {
    means: Vec<R>,
    stds: Vec<R>,
    columns: Vec<String>,
}

/// Relative tolerance below which a training column counts as constant.
const CONSTANT_COLUMN_EPS: f64 = 1e-12;

impl<R: Real> Standardizer<R> {
    pub fn fit(train: &FeatureMatrix<R>) -> Standardizer<R> {
        let n = train.n_rows().max(1);
        let n_r = R::from_usize(n).unwrap();
        let mut means = vec![R::zero(); train.n_cols()];
        let mut stds = vec![R::one(); train.n_cols()];
        for c in 0..train.n_cols() {
            let mut sum = R::zero();
            for r in 0..train.n_rows() {
                sum = sum + train.value(r, c);
            }
            let mean = sum / n_r;
            let mut var = R::zero();
            for r in 0..train.n_rows() {
                let d = train.value(r, c) - mean;
                var = var + d * d;
            }
            var = var / n_r;
            let std = var.sqrt();
            means[c] = mean;
            let scale = mean.abs().max(R::one());
            stds[c] = if std <= R::from_f64_lossy(CONSTANT_COLUMN_EPS) * scale {
                R::one()
            } else {
                std
            };
        }
        Standardizer {
            means,
            stds,
            columns: train.column_names(),
        }
    }

    pub fn means(&self) -> &[R] {
        &self.means
    }

    pub fn stds(&self) -> &[R] {
        &self.stds
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Rebuild a standardizer from persisted statistics.
    pub fn from_parts(
        means: Vec<R>,
        stds: Vec<R>,
        columns: Vec<String>,
    ) -> Result<Standardizer<R>> {
        if means.len() != columns.len() || stds.len() != columns.len() {
            return Err(Error::LengthMismatch {
                context: "standardizer statistics vs columns",
                left: means.len().min(stds.len()),
                right: columns.len(),
            });
        }
        if stds.iter().any(|s| *s <= R::zero() || !s.is_finite()) {
            return Err(Error::Config(
                "standardizer deviations must be positive".into(),
            ));
        }
        Ok(Standardizer {
            means,
            stds,
            columns,
        })
    }

    fn check_schema(&self, m: &FeatureMatrix<R>) -> Result<()> {
        if m.column_names() != self.columns {
            return Err(Error::SchemaMismatch(format!(
                "standardizer fitted on {} columns, applied to {}",
                self.columns.len(),
                m.n_cols()
            )));
        }
        Ok(())
    }

    /// Transform rows with the fitted statistics (test rows use the training
    /// statistics unchanged).
    pub fn apply(&self, m: &FeatureMatrix<R>) -> Result<FeatureMatrix<R>> {
        self.check_schema(m)?;
        let mut out = m.clone();
        for r in 0..m.n_rows() {
            for c in 0..m.n_cols() {
                *out.value_mut(r, c) = (m.value(r, c) - self.means[c]) / self.stds[c];
            }
        }
        Ok(out)
    }

    /// Undo [`Standardizer::apply`].
    pub fn invert(&self, m: &FeatureMatrix<R>) -> Result<FeatureMatrix<R>> {
        self.check_schema(m)?;
        let mut out = m.clone();
        for r in 0..m.n_rows() {
            for c in 0..m.n_cols() {
                *out.value_mut(r, c) = m.value(r, c) * self.stds[c] + self.means[c];
            }
        }
        Ok(out)
    }
}

/// Fit a standardizer on training rows.
pub fn fit_standardizer<R: Real>(train: &FeatureMatrix<R>) -> Standardizer<R> {
    Standardizer::fit(train)
}

/// Apply a fitted standardizer to rows.
pub fn apply_standardizer<R: Real>(
    s: &Standardizer<R>,
    rows: &FeatureMatrix<R>,
) -> Result<FeatureMatrix<R>> {
    s.apply(rows)
}

/// Everything one ordered pair contributes to the feature matrices: the
/// geometric feature vector plus the categorical/boolean raw material for
/// the semantic, perceptual and scene groups, and the two depth scores the
/// class labels derive from.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures<R> {
    pub image_id: String,
    pub geo: GeometricFeatures<R>,
    pub label1: String,
    pub label2: String,
    pub pose1: String,
    pub pose2: String,
    /// occluded, truncated, difficult for object 1.
    pub flags1: [bool; 3],
    /// occluded, truncated, difficult for object 2.
    pub flags2: [bool; 3],
    pub scene_label: String,
    pub scene_confidence: Option<f64>,
    pub depth1: u8,
    pub depth2: u8,
}

impl<R: Real> PairFeatures<R> {
    /// Build the row for one labeled pair of an image.
    pub fn from_pair(rec: &ImageRecord, pair: &PairInstance) -> Result<PairFeatures<R>> {
        let geo = geometry::extract_geometric_features(&pair.obj1.box_, &pair.obj2.box_, rec.dims)?;
        let flags = |o: &crate::dataset::ObjectAnnotation| [o.occluded, o.truncated, o.difficult];
        Ok(PairFeatures {
            image_id: rec.image_id.clone(),
            geo,
            label1: pair.obj1.label.clone(),
            label2: pair.obj2.label.clone(),
            pose1: pair.obj1.pose.clone(),
            pose2: pair.obj2.pose.clone(),
            flags1: flags(&pair.obj1),
            flags2: flags(&pair.obj2),
            scene_label: rec.scene_label.clone(),
            scene_confidence: rec.scene_confidence,
            depth1: pair
                .obj1
                .depth
                .ok_or_else(|| Error::Config("pair rows require specified depths".into()))?,
            depth2: pair
                .obj2
                .depth
                .ok_or_else(|| Error::Config("pair rows require specified depths".into()))?,
        })
    }

    /// Class label of this row at the given threshold.
    pub fn class_at(&self, t: DepthThreshold) -> usize {
        derive_class(self.depth1, self.depth2, t).index()
    }
}

/// Build the full set of valid pair rows across a dataset. The threshold
/// used for `labeled_pairs` here does not matter because rows keep the raw
/// depth scores; labels are derived per experiment.
pub fn pair_rows<R: Real>(records: &[ImageRecord]) -> Result<Vec<PairFeatures<R>>> {
    let mut rows = Vec::new();
    for rec in records {
        for pair in crate::dataset::labeled_pairs(rec, DepthThreshold(0)) {
            rows.push(PairFeatures::from_pair(rec, &pair)?);
        }
    }
    Ok(rows)
}

/// Category vocabularies fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub object_labels: Vocabulary,
    pub poses: Vocabulary,
    pub scenes: Vocabulary,
}

impl Vocabularies {
    pub fn fit<R: Real, P: std::borrow::Borrow<PairFeatures<R>>>(rows: &[P]) -> Vocabularies {
        Vocabularies {
            object_labels: Vocabulary::build(
                rows.iter()
                    .map(P::borrow)
                    .flat_map(|r| [r.label1.as_str(), r.label2.as_str()]),
            ),
            poses: Vocabulary::build(
                rows.iter()
                    .map(P::borrow)
                    .flat_map(|r| [r.pose1.as_str(), r.pose2.as_str()]),
            ),
            scenes: Vocabulary::build(rows.iter().map(|r| r.borrow().scene_label.as_str())),
        }
    }

    pub(crate) fn reindex(&mut self) {
        self.object_labels.reindex();
        self.poses.reindex();
        self.scenes.reindex();
    }
}

/// Assembly settings beyond the group selection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssembleOptions {
    pub semantic: SemanticEncoding,
    /// Multiply the scene one-hot by the scene confidence when present.
    pub scene_confidence_weighting: bool,
}

/// Assemble the feature matrix for the selected groups, with labels derived
/// at the given threshold. Columns appear in the fixed group order Geo, Sem,
/// Per, Scene.
pub fn assemble<R: Real, P: std::borrow::Borrow<PairFeatures<R>>>(
    rows: &[P],
    groups: &GroupSet,
    vocs: &Vocabularies,
    threshold: DepthThreshold,
    opts: &AssembleOptions,
) -> Result<FeatureMatrix<R>> {
    if !groups.is_canonical() {
        log::warn!("feature group combination '{groups}' is not one of the eight standard ones");
    }
    let mut columns: Vec<Column> = Vec::new();
    let col = |group: FeatureGroup, name: String| Column { name, group };

    if groups.contains(FeatureGroup::Geo) {
        for name in GeometricFeatures::<R>::names() {
            columns.push(col(FeatureGroup::Geo, name.to_string()));
        }
    }
    if groups.contains(FeatureGroup::Sem) {
        match &opts.semantic {
            SemanticEncoding::OneHot => {
                for obj in ["obj1", "obj2"] {
                    for entry in vocs.object_labels.entries() {
                        columns.push(col(FeatureGroup::Sem, format!("{obj}_label_{entry}")));
                    }
                }
            }
            SemanticEncoding::Embeddings(table) => {
                for obj in ["obj1", "obj2"] {
                    for d in 0..table.dim() {
                        columns.push(col(FeatureGroup::Sem, format!("{obj}_emb_{d}")));
                    }
                }
            }
        }
    }
    if groups.contains(FeatureGroup::Per) {
        for obj in ["obj1", "obj2"] {
            for entry in vocs.poses.entries() {
                columns.push(col(FeatureGroup::Per, format!("{obj}_pose_{entry}")));
            }
            for flag in ["occluded", "truncated", "difficult"] {
                columns.push(col(FeatureGroup::Per, format!("{obj}_{flag}")));
            }
        }
    }
    if groups.contains(FeatureGroup::Scene) {
        for entry in vocs.scenes.entries() {
            columns.push(col(FeatureGroup::Scene, format!("scene_{entry}")));
        }
    }

    let mut data = Vec::with_capacity(rows.len() * columns.len());
    let mut labels = Vec::with_capacity(rows.len());
    for row in rows.iter().map(P::borrow) {
        if groups.contains(FeatureGroup::Geo) {
            data.extend_from_slice(row.geo.values());
        }
        if groups.contains(FeatureGroup::Sem) {
            match &opts.semantic {
                SemanticEncoding::OneHot => {
                    data.extend(vocs.object_labels.one_hot::<R>(&row.label1));
                    data.extend(vocs.object_labels.one_hot::<R>(&row.label2));
                }
                SemanticEncoding::Embeddings(table) => {
                    data.extend(table.encode::<R>(&row.label1));
                    data.extend(table.encode::<R>(&row.label2));
                }
            }
        }
        if groups.contains(FeatureGroup::Per) {
            for (pose, flags) in [(&row.pose1, &row.flags1), (&row.pose2, &row.flags2)] {
                data.extend(vocs.poses.one_hot::<R>(pose));
                data.extend(flags.iter().map(|&f| if f { R::one() } else { R::zero() }));
            }
        }
        if groups.contains(FeatureGroup::Scene) {
            let weight = if opts.scene_confidence_weighting {
                R::from_f64_lossy(row.scene_confidence.unwrap_or(1.0))
            } else {
                R::one()
            };
            data.extend(
                vocs.scenes
                    .one_hot::<R>(&row.scene_label)
                    .into_iter()
                    .map(|v| v * weight),
            );
        }
        labels.push(row.class_at(threshold));
    }
    FeatureMatrix::new(data, rows.len(), columns, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{features_from_rects, Rect, FEATURE_COUNT};

    #[test]
    fn vocabulary_build_and_one_hot() {
        let v = build_vocabulary(["dog", "cat", "dog"]);
        assert_eq!(v.entries(), ["cat", "dog"]);
        assert_eq!(v.one_hot::<f64>("cat"), vec![1.0, 0.0]);
        assert_eq!(v.one_hot::<f64>("horse"), vec![0.0, 0.0]);
        assert!(build_vocabulary(Vec::<String>::new()).is_empty());

        let categories = [
            "aeroplane",
            "bird",
            "bicycle",
            "boat",
            "bottle",
            "bus",
            "car",
            "cat",
            "chair",
            "cow",
            "dining table",
            "dog",
            "horse",
            "motorbike",
            "person",
            "potted plant",
            "sheep",
            "sofa",
            "train",
            "TV/monitor",
        ];
        assert_eq!(build_vocabulary(categories).len(), 20);
    }

    #[test]
    fn one_hot_sums_are_zero_or_one() {
        let v = build_vocabulary(["a", "b", "c"]);
        for token in ["a", "b", "c", "zzz", ""] {
            let sum: f64 = v.one_hot::<f64>(token).iter().sum();
            assert!(sum == 0.0 || sum == 1.0);
        }
    }

    fn matrix_from_column(values: &[f64]) -> FeatureMatrix<f64> {
        FeatureMatrix::new(
            values.to_vec(),
            values.len(),
            vec![Column {
                name: "x".into(),
                group: FeatureGroup::Geo,
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn standardizer_matches_z_score_oracle() {
        let m = matrix_from_column(&[1.0, 2.0, 3.0]);
        let s = fit_standardizer(&m);
        let t = apply_standardizer(&s, &m).unwrap();
        // Closed-form z-scores with the population deviation sqrt(2/3).
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (i, e) in expected.iter().enumerate() {
            assert!((t.value(i, 0) - e).abs() < 1e-12);
        }
        let mean: f64 = (0..3).map(|i| t.value(i, 0)).sum::<f64>() / 3.0;
        let var: f64 = (0..3).map(|i| (t.value(i, 0) - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_column_transforms_to_zeros() {
        let m = matrix_from_column(&[5.0, 5.0, 5.0]);
        let s = fit_standardizer(&m);
        let t = apply_standardizer(&s, &m).unwrap();
        assert_eq!(
            (0..3).map(|i| t.value(i, 0)).collect::<Vec<_>>(),
            [0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn standardizer_round_trips_training_rows() {
        let m = matrix_from_column(&[0.5, -2.0, 7.25, 7.25]);
        let s = fit_standardizer(&m);
        let t = apply_standardizer(&s, &m).unwrap();
        let back = s.invert(&t).unwrap();
        for i in 0..4 {
            assert!((back.value(i, 0) - m.value(i, 0)).abs() < 1e-9);
        }
        // Applying twice is not the identity.
        let twice = apply_standardizer(&s, &t).unwrap();
        assert!((twice.value(0, 0) - t.value(0, 0)).abs() > 1e-6);
    }

    #[test]
    fn standardizer_ignores_test_rows() {
        let train = matrix_from_column(&[1.0, 2.0, 3.0]);
        let s = fit_standardizer(&train);
        let perturbed = matrix_from_column(&[1000.0, -999.0, 0.0]);
        let s2 = fit_standardizer(&train);
        // Fitting again after unrelated data exists changes nothing, and the
        // transform of new rows uses the training statistics.
        assert_eq!(s, s2);
        let t = s.apply(&perturbed).unwrap();
        assert!((t.value(0, 0) - (1000.0 - 2.0) / (2.0f64 / 3.0).sqrt()).abs() < 1e-9);
    }

    fn sample_rows() -> Vec<PairFeatures<f64>> {
        let geo = |dx: f64| {
            features_from_rects(
                &Rect {
                    x_min: 10.0 + dx,
                    y_min: 10.0,
                    x_max: 30.0,
                    y_max: 50.0,
                },
                &Rect {
                    x_min: 40.0,
                    y_min: 10.0,
                    x_max: 60.0,
                    y_max: 50.0,
                },
                100.0,
                100.0,
            )
        };
        vec![
            PairFeatures {
                image_id: "im1".into(),
                geo: geo(0.0),
                label1: "person".into(),
                label2: "dog".into(),
                pose1: "Frontal".into(),
                pose2: "Left".into(),
                flags1: [true, false, false],
                flags2: [false, false, true],
                scene_label: "street".into(),
                scene_confidence: Some(0.5),
                depth1: 10,
                depth2: 40,
            },
            PairFeatures {
                image_id: "im2".into(),
                geo: geo(2.0),
                label1: "dog".into(),
                label2: "cat".into(),
                pose1: "Rear".into(),
                pose2: "Frontal".into(),
                flags1: [false, false, false],
                flags2: [true, true, false],
                scene_label: "park".into(),
                scene_confidence: None,
                depth1: 55,
                depth2: 54,
            },
        ]
    }

    #[test]
    fn assemble_group_widths() {
        let rows = sample_rows();
        let vocs = Vocabularies::fit(&rows);
        let opts = AssembleOptions::default();
        let t = DepthThreshold(2);

        let geo = assemble(&rows, &GroupSet::parse("geo").unwrap(), &vocs, t, &opts).unwrap();
        assert_eq!(geo.n_cols(), FEATURE_COUNT);

        let sem = assemble(&rows, &GroupSet::parse("sem").unwrap(), &vocs, t, &opts).unwrap();
        assert_eq!(sem.n_cols(), 2 * vocs.object_labels.len());

        let per = assemble(&rows, &GroupSet::parse("per").unwrap(), &vocs, t, &opts).unwrap();
        assert_eq!(per.n_cols(), 2 * (vocs.poses.len() + 3));

        let all = assemble(
            &rows,
            &GroupSet::parse("geo,sem,per,scene").unwrap(),
            &vocs,
            t,
            &opts,
        )
        .unwrap();
        assert_eq!(
            all.n_cols(),
            geo.n_cols() + sem.n_cols() + per.n_cols() + vocs.scenes.len()
        );
        // Labels derive from the depth scores at the threshold.
        assert_eq!(all.labels(), &[0, 1]);
    }

    #[test]
    fn assemble_20_label_vocabulary_yields_40_sem_columns() {
        let mut rows = sample_rows();
        let labels = [
            "aeroplane",
            "bird",
            "bicycle",
            "boat",
            "bottle",
            "bus",
            "car",
            "cat",
            "chair",
            "cow",
            "dining table",
            "dog",
            "horse",
            "motorbike",
            "person",
            "potted plant",
            "sheep",
            "sofa",
            "train",
            "TV/monitor",
        ];
        for (i, l) in labels.iter().enumerate() {
            let mut r = rows[0].clone();
            r.label1 = l.to_string();
            r.label2 = labels[(i + 1) % labels.len()].to_string();
            rows.push(r);
        }
        let vocs = Vocabularies::fit(&rows);
        assert_eq!(vocs.object_labels.len(), 20);
        let sem = assemble(
            &rows,
            &GroupSet::parse("sem").unwrap(),
            &vocs,
            DepthThreshold(0),
            &AssembleOptions::default(),
        )
        .unwrap();
        assert_eq!(sem.n_cols(), 40);
    }

    #[test]
    fn group_selection_consistency() {
        let rows = sample_rows();
        let vocs = Vocabularies::fit(&rows);
        let opts = AssembleOptions::default();
        let t = DepthThreshold(0);
        let full_groups = GroupSet::parse("geo,sem,per").unwrap();
        let full = assemble(&rows, &full_groups, &vocs, t, &opts).unwrap();
        let dropped = full.select_groups(&full_groups.without(FeatureGroup::Sem).unwrap());
        let direct =
            assemble(&rows, &GroupSet::parse("geo,per").unwrap(), &vocs, t, &opts).unwrap();
        assert_eq!(dropped, direct);
    }

    #[test]
    fn scene_confidence_weighting_scales_one_hot() {
        let rows = sample_rows();
        let vocs = Vocabularies::fit(&rows);
        let opts = AssembleOptions {
            scene_confidence_weighting: true,
            ..Default::default()
        };
        let m = assemble(
            &rows,
            &GroupSet::parse("scene").unwrap(),
            &vocs,
            DepthThreshold(0),
            &opts,
        )
        .unwrap();
        let street = vocs.scenes.index_of("street").unwrap();
        assert_eq!(m.value(0, street), 0.5);
        // Row without confidence falls back to weight 1.
        let park = vocs.scenes.index_of("park").unwrap();
        assert_eq!(m.value(1, park), 1.0);
    }

    #[test]
    fn embedding_table_parsing_and_encoding() {
        let text = "cat 1.0 2.0\ndog -0.5 0.25\n";
        let table = EmbeddingTable::read(text.as_bytes()).unwrap();
        assert_eq!(table.dim(), 2);
        assert_eq!(table.lookup("cat").unwrap(), &[1.0, 2.0]);
        assert_eq!(table.encode::<f64>("horse"), vec![0.0, 0.0]);

        assert!(EmbeddingTable::read("cat 1.0\ndog 1.0 2.0\n".as_bytes()).is_err());
        assert!(EmbeddingTable::read("cat inf\n".as_bytes()).is_err());
        assert!(EmbeddingTable::read("".as_bytes()).is_err());

        let rows = sample_rows();
        let vocs = Vocabularies::fit(&rows);
        let opts = AssembleOptions {
            semantic: SemanticEncoding::Embeddings(table),
            ..Default::default()
        };
        let m = assemble(
            &rows,
            &GroupSet::parse("sem").unwrap(),
            &vocs,
            DepthThreshold(0),
            &opts,
        )
        .unwrap();
        assert_eq!(m.n_cols(), 4);
        // Row 1: label1 = dog -> (-0.5, 0.25); label2 = cat unknown? cat known.
        assert_eq!(m.row(1), &[-0.5, 0.25, 1.0, 2.0]);
        // Row 0: label1 = person unknown -> zeros.
        assert_eq!(&m.row(0)[..2], &[0.0, 0.0]);
    }
}
