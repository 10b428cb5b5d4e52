//! End-to-end inference bundle: feature-group selection, fitted
//! vocabularies, standardizer and trained model persisted together so a
//! saved model can score new annotation data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::DepthThreshold;
use crate::encoding::{
    assemble, fit_standardizer, AssembleOptions, EmbeddingTable, PairFeatures, SemanticEncoding,
    Standardizer, Vocabularies,
};
use crate::error::{Error, Result};
use crate::evaluation::ExperimentSpec;
use crate::matrix::GroupSet;
use crate::models::{self, ModelDoc, TrainedModel};
use crate::Real;

const PIPELINE_FORMAT: &str = "reldepth-pipeline";
const PIPELINE_VERSION: u32 = 1;

/// A fitted end-to-end classifier for pair rows.
#[derive(Debug, Clone)]
pub struct PipelineModel<R> {
    pub groups: GroupSet,
    pub threshold: DepthThreshold,
    pub options: AssembleOptions,
    pub vocabularies: Vocabularies,
    pub standardizer: Standardizer<R>,
    pub model: TrainedModel<R>,
}

impl<R: Real> PipelineModel<R> {
    /// Fit encoders and model on all given rows.
    pub fn fit(rows: &[PairFeatures<R>], spec: &ExperimentSpec) -> Result<PipelineModel<R>> {
        let vocabularies = Vocabularies::fit(rows);
        let raw = assemble(
            rows,
            &spec.groups,
            &vocabularies,
            spec.threshold,
            &spec.options,
        )?;
        let standardizer = fit_standardizer(&raw);
        let x = standardizer.apply(&raw)?;
        let y = raw.labels().to_vec();
        let model = models::train(spec.model, &x, &y, &spec.hp)?;
        Ok(PipelineModel {
            groups: spec.groups,
            threshold: spec.threshold,
            options: spec.options.clone(),
            vocabularies,
            standardizer,
            model,
        })
    }

    /// Predict relative depth classes for pair rows.
    pub fn predict(&self, rows: &[PairFeatures<R>]) -> Result<Vec<usize>> {
        let raw = assemble(
            rows,
            &self.groups,
            &self.vocabularies,
            self.threshold,
            &self.options,
        )?;
        let x = self.standardizer.apply(&raw)?;
        self.model.predict(&x)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let doc = PipelineDoc {
            format: PIPELINE_FORMAT.to_string(),
            version: PIPELINE_VERSION,
            groups: self.groups.to_string(),
            threshold: self.threshold,
            scene_confidence_weighting: self.options.scene_confidence_weighting,
            embeddings: match &self.options.semantic {
                SemanticEncoding::OneHot => None,
                SemanticEncoding::Embeddings(t) => Some(t.clone()),
            },
            vocabularies: self.vocabularies.clone(),
            standardizer: StandardizerDoc {
                columns: self.standardizer.columns().to_vec(),
                means: self
                    .standardizer
                    .means()
                    .iter()
                    .map(|m| m.as_f64())
                    .collect(),
                stds: self
                    .standardizer
                    .stds()
                    .iter()
                    .map(|s| s.as_f64())
                    .collect(),
            },
            model: self.model.to_doc(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PipelineModel<R>> {
        let text = std::fs::read_to_string(path)?;
        let mut doc: PipelineDoc = serde_json::from_str(&text)?;
        if doc.format != PIPELINE_FORMAT {
            return Err(Error::Config(format!(
                "not a pipeline document (format '{}')",
                doc.format
            )));
        }
        if doc.version != PIPELINE_VERSION {
            return Err(Error::Version {
                artifact: "pipeline",
                found: doc.version,
                expected: PIPELINE_VERSION,
            });
        }
        doc.vocabularies.reindex();
        let standardizer = Standardizer::from_parts(
            doc.standardizer
                .means
                .into_iter()
                .map(R::from_f64_lossy)
                .collect(),
            doc.standardizer
                .stds
                .into_iter()
                .map(R::from_f64_lossy)
                .collect(),
            doc.standardizer.columns,
        )?;
        Ok(PipelineModel {
            groups: GroupSet::parse(&doc.groups)?,
            threshold: doc.threshold,
            options: AssembleOptions {
                semantic: match doc.embeddings {
                    None => SemanticEncoding::OneHot,
                    Some(t) => SemanticEncoding::Embeddings(t),
                },
                scene_confidence_weighting: doc.scene_confidence_weighting,
            },
            vocabularies: doc.vocabularies,
            standardizer,
            model: TrainedModel::from_doc(doc.model)?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PipelineDoc {
    format: String,
    version: u32,
    groups: String,
    threshold: DepthThreshold,
    scene_confidence_weighting: bool,
    embeddings: Option<EmbeddingTable>,
    vocabularies: Vocabularies,
    standardizer: StandardizerDoc,
    model: ModelDoc,
}

#[derive(Serialize, Deserialize)]
struct StandardizerDoc {
    columns: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_annotations_str, ParseOptions};
    use crate::encoding::pair_rows;
    use crate::models::ClassifierKind;

    fn fixture_rows() -> Vec<PairFeatures<f64>> {
        // Two images, three objects each, all depths specified.
        let text = r#"{
          "images": [
            {"id": "a", "width": 64, "height": 64, "scene_label": "street",
             "objects": [
               {"id": "o1", "label": "person", "box": {"x_min": 2, "y_min": 30, "x_max": 20, "y_max": 60},
                "depth": 10, "pose": "Frontal", "occluded": false, "truncated": false, "difficult": false},
               {"id": "o2", "label": "car", "box": {"x_min": 30, "y_min": 10, "x_max": 60, "y_max": 30},
                "depth": 70, "pose": "Left", "occluded": false, "truncated": false, "difficult": false},
               {"id": "o3", "label": "dog", "box": {"x_min": 10, "y_min": 40, "x_max": 30, "y_max": 62},
                "depth": 12, "pose": "Rear", "occluded": true, "truncated": false, "difficult": false}
             ]},
            {"id": "b", "width": 64, "height": 64, "scene_label": "park",
             "objects": [
               {"id": "o1", "label": "dog", "box": {"x_min": 5, "y_min": 45, "x_max": 25, "y_max": 64},
                "depth": 20, "pose": "Frontal", "occluded": false, "truncated": false, "difficult": false},
               {"id": "o2", "label": "person", "box": {"x_min": 40, "y_min": 5, "x_max": 55, "y_max": 25},
                "depth": 85, "pose": "Right", "occluded": false, "truncated": true, "difficult": false},
               {"id": "o3", "label": "cat", "box": {"x_min": 30, "y_min": 30, "x_max": 45, "y_max": 50},
                "depth": 50, "pose": "Left", "occluded": false, "truncated": false, "difficult": false}
             ]}
          ]
        }"#;
        let records = parse_annotations_str(text, ParseOptions::default()).unwrap();
        pair_rows(&records).unwrap()
    }

    #[test]
    fn fit_predict_save_load_round_trip() {
        let rows = fixture_rows();
        assert_eq!(rows.len(), 12); // two images x 3*2 ordered pairs
        let spec = ExperimentSpec::new(
            GroupSet::parse("geo,sem,per,scene").unwrap(),
            ClassifierKind::RandomForest,
            DepthThreshold(2),
        )
        .with_seed(5);
        let fitted = PipelineModel::fit(&rows, &spec).unwrap();
        let preds = fitted.predict(&rows).unwrap();
        assert_eq!(preds.len(), rows.len());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.json");
        fitted.save(&path).unwrap();
        let loaded = PipelineModel::<f64>::load(&path).unwrap();
        assert_eq!(loaded.predict(&rows).unwrap(), preds);
        assert_eq!(loaded.groups, fitted.groups);
        assert_eq!(loaded.threshold, fitted.threshold);
    }

    #[test]
    fn load_rejects_foreign_documents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.json");
        std::fs::write(&path, "{\"format\": \"something-else\"}").unwrap();
        assert!(PipelineModel::<f64>::load(&path).is_err());
    }

    #[test]
    fn predictions_handle_unseen_categories() {
        let rows = fixture_rows();
        let spec = ExperimentSpec::new(
            GroupSet::parse("sem,scene").unwrap(),
            ClassifierKind::LogisticRegression,
            DepthThreshold(0),
        )
        .with_seed(3);
        let fitted = PipelineModel::fit(&rows, &spec).unwrap();
        let mut unseen = rows.clone();
        for r in unseen.iter_mut() {
            r.label1 = "unknown_animal".into();
            r.scene_label = "unknown_place".into();
        }
        // Unknown categories encode as zeros instead of erroring.
        let preds = fitted.predict(&unseen).unwrap();
        assert_eq!(preds.len(), unseen.len());
    }
}
