use super::*;
use crate::matrix::{Column, FeatureGroup};
use crate::util;

use rand::Rng;

fn matrix(data: Vec<f64>, n_cols: usize) -> FeatureMatrix<f64> {
    let n_rows = data.len() / n_cols;
    let columns = (0..n_cols)
        .map(|i| Column {
            name: format!("c{i}"),
            group: FeatureGroup::Geo,
        })
        .collect();
    FeatureMatrix::new(data, n_rows, columns, vec![]).unwrap()
}

/// Three well-separated 2-feature blobs with `per_class` points each.
fn blobs(per_class: usize, seed: u64) -> (FeatureMatrix<f64>, Vec<usize>) {
    let centers = [(0.0, 0.0), (12.0, 0.0), (0.0, 12.0)];
    let mut rng = util::rng(seed);
    let mut data = Vec::new();
    let mut y = Vec::new();
    for (c, (cx, cy)) in centers.iter().enumerate() {
        for _ in 0..per_class {
            data.push(cx + util::standard_normal(&mut rng) * 0.6);
            data.push(cy + util::standard_normal(&mut rng) * 0.6);
            y.push(c);
        }
    }
    (matrix(data, 2), y)
}

/// Brute-force linear-separation check: two point sets are linearly
/// separable if some direction among a dense angle sweep projects them onto
/// disjoint intervals.
fn linearly_separable(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    (0..720).any(|step| {
        let theta = f64::from(step) * std::f64::consts::PI / 360.0;
        let (dx, dy) = (theta.cos(), theta.sin());
        let proj = |pts: &[(f64, f64)]| {
            pts.iter()
                .map(|(x, y)| x * dx + y * dy)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p), hi.max(p))
                })
        };
        let (a_lo, a_hi) = proj(a);
        let (b_lo, b_hi) = proj(b);
        a_hi < b_lo || b_hi < a_lo
    })
}

fn blob_points(x: &FeatureMatrix<f64>, y: &[usize], class: usize) -> Vec<(f64, f64)> {
    (0..x.n_rows())
        .filter(|&i| y[i] == class)
        .map(|i| (x.value(i, 0), x.value(i, 1)))
        .collect()
}

fn train_accuracy(model: &TrainedModel<f64>, x: &FeatureMatrix<f64>, y: &[usize]) -> f64 {
    let pred = model.predict(x).unwrap();
    pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64
}

fn majority_fraction(y: &[usize]) -> f64 {
    let k = y.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    for &c in y {
        counts[c] += 1;
    }
    *counts.iter().max().unwrap() as f64 / y.len() as f64
}

#[test]
fn tree_splits_on_feature_sign() {
    let x = matrix(vec![-2.0, -1.5, -0.1, 0.3, 1.0, 2.5], 1);
    let y = vec![0, 0, 0, 1, 1, 1];
    let hp = Hyperparameters::default();
    let model = train(ClassifierKind::DecisionTree, &x, &y, &hp).unwrap();
    assert_eq!(train_accuracy(&model, &x, &y), 1.0);
}

#[test]
fn tree_reaches_purity_without_conflicts() {
    let mut rng = util::rng(11);
    let n = 128;
    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut seen = std::collections::HashSet::new();
    while y.len() < n {
        let a: f64 = f64::from(rng.gen_range(-1000..1000i32));
        let b: f64 = f64::from(rng.gen_range(-1000..1000i32));
        if !seen.insert((a as i64, b as i64)) {
            continue; // no duplicate feature rows, so labels cannot conflict
        }
        data.push(a);
        data.push(b);
        y.push(rng.gen_range(0..3usize));
    }
    let x = matrix(data, 2);
    let mut hp = Hyperparameters::default();
    hp.tree.max_depth = usize::MAX;
    let model = train(ClassifierKind::DecisionTree, &x, &y, &hp).unwrap();
    assert_eq!(train_accuracy(&model, &x, &y), 1.0);
}

#[test]
fn logistic_regression_fits_separable_blobs() {
    let (x, y) = blobs(20, 3);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        assert!(
            linearly_separable(&blob_points(&x, &y, a), &blob_points(&x, &y, b)),
            "blob classes {a} and {b} must be linearly separable"
        );
    }
    let hp = Hyperparameters::default();
    let model = train(ClassifierKind::LogisticRegression, &x, &y, &hp).unwrap();
    assert_eq!(train_accuracy(&model, &x, &y), 1.0);
    // Prediction on the training set equals the labels.
    assert_eq!(model.predict(&x).unwrap(), y);
}

#[test]
fn all_kinds_beat_majority_baseline_on_blobs() {
    let (x, y) = blobs(15, 4);
    let baseline = majority_fraction(&y);
    for kind in ClassifierKind::ALL {
        let mut hp = Hyperparameters::with_seed(9);
        hp.neural.epochs = 60;
        let model = train(kind, &x, &y, &hp).unwrap();
        let acc = train_accuracy(&model, &x, &y);
        assert!(acc >= baseline, "{kind}: {acc} < baseline {baseline}");
    }
}

#[test]
fn single_tree_forest_degenerates_to_decision_tree() {
    let (x, y) = blobs(12, 5);
    let mut hp = Hyperparameters::with_seed(17);
    hp.forest.n_trees = 1;
    hp.forest.bootstrap = false;
    hp.forest.features_per_split = Some(x.n_cols());
    let forest = train(ClassifierKind::RandomForest, &x, &y, &hp).unwrap();
    let tree = train(ClassifierKind::DecisionTree, &x, &y, &hp).unwrap();
    let (xt, _) = blobs(12, 99);
    assert_eq!(forest.predict(&xt).unwrap(), tree.predict(&xt).unwrap());
}

#[test]
fn forest_prediction_is_modal_vote() {
    let (x, y) = blobs(10, 6);
    let mut hp = Hyperparameters::with_seed(2);
    hp.forest.n_trees = 17;
    let model = train(ClassifierKind::RandomForest, &x, &y, &hp).unwrap();
    let ModelParams::Forest(forest) = model.params() else {
        panic!("expected forest params");
    };
    for i in 0..x.n_rows() {
        let row = x.row(i);
        let mut votes = [0usize; 3];
        for t in forest.trees() {
            votes[t.predict_row(row)] += 1;
        }
        let expected = votes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        assert_eq!(forest.predict_row(row), expected);
    }
}

#[test]
fn vote_ties_resolve_to_lowest_class() {
    assert_eq!(argmax_tie_lowest(&[3, 3, 1]), 0);
    assert_eq!(argmax_tie_lowest(&[1, 3, 3]), 1);
    assert_eq!(argmax_tie_lowest(&[0.5, 0.5, 0.5]), 0);
}

#[test]
fn probability_rows_sum_to_one() {
    let (x, y) = blobs(10, 7);
    for kind in [
        ClassifierKind::RandomForest,
        ClassifierKind::LogisticRegression,
        ClassifierKind::NeuralNetwork,
    ] {
        let mut hp = Hyperparameters::with_seed(1);
        hp.neural.epochs = 30;
        hp.forest.n_trees = 9;
        let model = train(kind, &x, &y, &hp).unwrap();
        let proba = model.predict_proba(&x).unwrap().expect("has probabilities");
        for row in proba {
            assert_eq!(row.len(), 3);
            assert!(row.iter().all(|&p| p >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
    let hp = Hyperparameters::default();
    let dt = train(ClassifierKind::DecisionTree, &x, &y, &hp).unwrap();
    assert!(dt.predict_proba(&x).unwrap().is_none());
}

#[test]
fn training_is_seed_deterministic() {
    let (x, y) = blobs(12, 8);
    let (xt, _) = blobs(12, 12);
    for kind in ClassifierKind::ALL {
        let mut hp = Hyperparameters::with_seed(123);
        hp.neural.epochs = 20;
        hp.forest.n_trees = 11;
        let a = train(kind, &x, &y, &hp).unwrap();
        let b = train(kind, &x, &y, &hp).unwrap();
        assert_eq!(
            serde_json::to_string(&a.to_doc()).unwrap(),
            serde_json::to_string(&b.to_doc()).unwrap(),
            "{kind} params differ between identical trainings"
        );
        assert_eq!(a.predict(&xt).unwrap(), b.predict(&xt).unwrap());
    }
}

#[test]
fn degenerate_training_inputs_error() {
    let x = matrix(vec![1.0, 2.0, 3.0], 1);
    let hp = Hyperparameters::default();
    // Single class.
    assert!(train(ClassifierKind::DecisionTree, &x, &[1, 1, 1], &hp).is_err());
    // Misaligned labels.
    assert!(train(ClassifierKind::DecisionTree, &x, &[0, 1], &hp).is_err());
    // Empty matrix.
    let empty = matrix(vec![], 1);
    assert!(train(ClassifierKind::DecisionTree, &empty, &[], &hp).is_err());
    // Bad hyperparameters.
    let mut bad = Hyperparameters::default();
    bad.linear.learning_rate = -1.0;
    assert!(train(ClassifierKind::LogisticRegression, &x, &[0, 1, 0], &bad).is_err());
}

#[test]
fn empty_prediction_input_yields_empty_output() {
    let (x, y) = blobs(10, 9);
    let model = train(
        ClassifierKind::DecisionTree,
        &x,
        &y,
        &Hyperparameters::default(),
    )
    .unwrap();
    let empty = matrix(vec![], 2);
    assert!(model.predict(&empty).unwrap().is_empty());
}

#[test]
fn single_precision_training_works() {
    // The whole train/predict/persist path at f32.
    let (x64, y) = blobs(10, 40);
    let columns = x64.columns().to_vec();
    let data: Vec<f32> = (0..x64.n_rows())
        .flat_map(|i| x64.row(i).iter().map(|&v| v as f32).collect::<Vec<_>>())
        .collect();
    let x = FeatureMatrix::<f32>::new(data, x64.n_rows(), columns, vec![]).unwrap();
    for kind in ClassifierKind::ALL {
        let mut hp = Hyperparameters::with_seed(8);
        hp.neural.epochs = 30;
        hp.forest.n_trees = 9;
        let model = train(kind, &x, &y, &hp).unwrap();
        let preds = model.predict(&x).unwrap();
        let acc = preds.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
        assert!(acc >= majority_fraction(&y), "{kind} at f32: {acc}");
        let doc = model.to_doc();
        let back = TrainedModel::<f32>::from_doc(
            serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap(),
        )
        .unwrap();
        assert_eq!(back.predict(&x).unwrap(), preds);
    }
}

#[test]
fn save_load_round_trip_predictions() {
    let (x, y) = blobs(10, 10);
    let (xt, _) = blobs(8, 21);
    let dir = tempfile::tempdir().unwrap();
    for kind in ClassifierKind::ALL {
        let mut hp = Hyperparameters::with_seed(5);
        hp.neural.epochs = 15;
        hp.forest.n_trees = 7;
        let model = train(kind, &x, &y, &hp).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        save(&model, &path).unwrap();
        let loaded: TrainedModel<f64> = load(&path).unwrap();
        assert_eq!(model.predict(&xt).unwrap(), loaded.predict(&xt).unwrap());
        assert_eq!(loaded.kind(), kind);
    }
}

#[test]
fn truncated_model_file_errors() {
    let (x, y) = blobs(10, 13);
    let model = train(
        ClassifierKind::LogisticRegression,
        &x,
        &y,
        &Hyperparameters::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save(&model, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(load::<f64>(&path).is_err());
}

#[test]
fn unsupported_version_errors() {
    let (x, y) = blobs(10, 14);
    let model = train(
        ClassifierKind::DecisionTree,
        &x,
        &y,
        &Hyperparameters::default(),
    )
    .unwrap();
    let mut value = serde_json::to_value(model.to_doc()).unwrap();
    value["version"] = serde_json::json!(99);
    let doc: ModelDoc = serde_json::from_value(value).unwrap();
    let err = TrainedModel::<f64>::from_doc(doc).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
}

#[test]
fn schema_mismatch_on_predict() {
    let (x, y) = blobs(10, 15);
    let model = train(
        ClassifierKind::DecisionTree,
        &x,
        &y,
        &Hyperparameters::default(),
    )
    .unwrap();
    let other = {
        let columns = vec![
            Column {
                name: "other0".into(),
                group: FeatureGroup::Geo,
            },
            Column {
                name: "other1".into(),
                group: FeatureGroup::Geo,
            },
        ];
        FeatureMatrix::new(vec![0.0, 0.0], 1, columns, vec![]).unwrap()
    };
    let err = model.predict(&other).unwrap_err();
    assert!(matches!(err, Error::SchemaMismatch(_)), "{err}");
}

#[test]
fn class_weighting_is_deterministic_and_valid() {
    let (x, mut y) = blobs(12, 16);
    // Make class 0 rare.
    for c in y.iter_mut().skip(4) {
        if *c == 0 {
            *c = 1;
        }
    }
    let mut hp = Hyperparameters::with_seed(3);
    hp.class_weighting = true;
    hp.neural.epochs = 20;
    for kind in ClassifierKind::ALL {
        let a = train(kind, &x, &y, &hp).unwrap();
        let b = train(kind, &x, &y, &hp).unwrap();
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
    }
}

// --- gradient checks --------------------------------------------------------

fn central_difference_grad(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(w.len());
    let mut probe = w.to_vec();
    for i in 0..w.len() {
        probe[i] = w[i] + h;
        let up = f(&probe);
        probe[i] = w[i] - h;
        let down = f(&probe);
        probe[i] = w[i];
        g.push((up - down) / (2.0 * h));
    }
    g
}

fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let diff = (a - n).abs();
            if diff < 1e-10 {
                0.0
            } else {
                diff / a.abs().max(n.abs())
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let mut rng = util::rng(31);
    let n = 12;
    let d = 4;
    let data: Vec<f64> = (0..n * d)
        .map(|_| util::standard_normal(&mut rng))
        .collect();
    let x = matrix(data, d);
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let weights = vec![1.0; 3];
    let objective = SoftmaxObjective::new(&x, &y, 3, &weights, 1e-3);
    let w: Vec<f64> = (0..objective.n_params())
        .map(|_| util::standard_normal(&mut rng) * 0.5)
        .collect();
    let analytic = objective.grad(&w);
    let numeric = central_difference_grad(|p| objective.loss(p), &w, 1e-5);
    let err = max_relative_error(&analytic, &numeric);
    assert!(err <= 1e-5, "relative error {err}");
}

#[test]
fn neural_gradient_matches_finite_differences() {
    let mut rng = util::rng(33);
    let n = 10;
    let d = 3;
    let data: Vec<f64> = (0..n * d)
        .map(|_| util::standard_normal(&mut rng))
        .collect();
    let x = matrix(data, d);
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let weights = vec![1.0; 3];
    let rows: Vec<usize> = (0..n).collect();
    for activation in [Activation::Tanh, Activation::Relu] {
        let objective = MlpObjective::new(&x, &y, &[6], 3, activation, &weights);
        let w = objective.init_weights(77);
        let analytic = objective.grad(&w, &rows);
        let numeric = central_difference_grad(|p| objective.loss(p, &rows), &w, 1e-5);
        let err = max_relative_error(&analytic, &numeric);
        assert!(err <= 1e-4, "{activation:?}: relative error {err}");
    }
}
