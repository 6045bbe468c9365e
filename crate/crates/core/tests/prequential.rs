use std::collections::HashSet;

use qol_core::eval::{Passthrough, StreamNormalizer};
use qol_core::{
    run_prequential, EvalConfig, LabeledSample, MlpClassifier, OnlineClassifier, QolError,
    QuantileNormalizer, Result,
};

#[derive(Debug, PartialEq)]
enum Call {
    Predict(Vec<f64>),
    Learn(Vec<f64>, usize),
}

/// Records every call and refuses to predict a sample whose label it has
/// already been shown. Inputs are identified by their bit pattern.
#[derive(Default)]
struct Recorder {
    calls: Vec<Call>,
    learned: HashSet<Vec<u64>>,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl OnlineClassifier for Recorder {
    fn predict_proba(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        assert!(!self.learned.contains(&key(x)), "label seen before prediction");
        self.calls.push(Call::Predict(x.to_vec()));
        Ok(vec![0.5, 0.5])
    }

    fn learn(&mut self, x: &[f64], y: usize) -> Result<f64> {
        self.learned.insert(key(x));
        self.calls.push(Call::Learn(x.to_vec(), y));
        Ok(0.0)
    }
}

/// Predicts whatever class the feature vector encodes in its first slot.
struct Oracle;

impl OnlineClassifier for Oracle {
    fn predict_proba(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let mut p = vec![0.0; 3];
        p[x[0] as usize] = 1.0;
        Ok(p)
    }

    fn learn(&mut self, _: &[f64], _: usize) -> Result<f64> {
        Ok(0.0)
    }
}

struct Majority;

impl OnlineClassifier for Majority {
    fn predict_proba(&mut self, _: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0, 0.0])
    }

    fn learn(&mut self, _: &[f64], _: usize) -> Result<f64> {
        Ok(0.0)
    }
}

fn stream(n: usize) -> Vec<LabeledSample> {
    (0..n)
        .map(|i| LabeledSample::new(vec![i as f64, (i * 7 % 5) as f64], i % 2))
        .collect()
}

#[test]
fn every_prediction_precedes_its_training_call() {
    let data = stream(40);
    let mut norm = Passthrough::new(2);
    let mut model = Recorder::default();
    let res = run_prequential(&data, &mut norm, &mut model, &EvalConfig::new(2)).unwrap();
    assert_eq!(res.samples_evaluated, 40);
    assert_eq!(model.calls.len(), 80);
    for (i, pair) in model.calls.chunks(2).enumerate() {
        match pair {
            [Call::Predict(a), Call::Learn(b, y)] => {
                assert_eq!(a, b);
                assert_eq!(a, &data[i].features);
                assert_eq!(*y, data[i].label);
            }
            other => panic!("unexpected order at sample {i}: {other:?}"),
        }
    }
}

#[test]
fn warmup_replay_is_trained_but_not_scored_by_default() {
    let data = stream(30);
    let mut model = Recorder::default();
    let mut norm = QuantileNormalizer::new(10, 0.99, 2).unwrap();
    let res = run_prequential(&data, &mut norm, &mut model, &EvalConfig::new(2)).unwrap();
    assert_eq!(res.samples_evaluated, 20);
    assert_eq!(res.truths, data[10..].iter().map(|s| s.label).collect::<Vec<_>>());
    // the model still sees all 30 samples, test-then-train
    assert_eq!(model.calls.len(), 60);
    let learn_labels: Vec<usize> = model
        .calls
        .iter()
        .filter_map(|c| match c {
            Call::Learn(_, y) => Some(*y),
            Call::Predict(_) => None,
        })
        .collect();
    assert_eq!(learn_labels, data.iter().map(|s| s.label).collect::<Vec<_>>());

    let mut norm = QuantileNormalizer::new(10, 0.99, 2).unwrap();
    let cfg = EvalConfig {
        include_warmup: true,
        ..EvalConfig::new(2)
    };
    let res = run_prequential(&data, &mut norm, &mut Recorder::default(), &cfg).unwrap();
    assert_eq!(res.samples_evaluated, 30);
}

#[test]
fn perfect_predictor_scores_one() {
    let data: Vec<LabeledSample> = (0..30)
        .map(|i| LabeledSample::new(vec![(i % 3) as f64], i % 3))
        .collect();
    let res = run_prequential(&data, &mut Passthrough::new(1), &mut Oracle, &EvalConfig::new(3))
        .unwrap();
    assert_eq!(res.overall_accuracy, 1.0);
    assert_eq!(res.balanced_accuracy, 1.0);
}

#[test]
fn majority_predictor_on_secom_label_counts() {
    let mut data: Vec<LabeledSample> = (0..1463).map(|_| LabeledSample::new(vec![0.0], 0)).collect();
    data.extend((0..104).map(|_| LabeledSample::new(vec![0.0], 1)));
    let res = run_prequential(&data, &mut Passthrough::new(1), &mut Majority, &EvalConfig::new(2))
        .unwrap();
    assert_eq!(res.overall_accuracy, 1463.0 / 1567.0);
    assert!((res.overall_accuracy - 0.9336).abs() < 5e-5);
    assert_eq!(res.balanced_accuracy, 0.5);
}

#[test]
fn single_sample_stream() {
    let data = vec![LabeledSample::new(vec![1.0], 1)];
    let res = run_prequential(&data, &mut Passthrough::new(1), &mut Majority, &EvalConfig::new(2))
        .unwrap();
    assert_eq!(res.samples_evaluated, 1);
    assert_eq!(res.confusion.total(), 1);
}

#[test]
fn stream_errors() {
    let empty: Vec<LabeledSample> = Vec::new();
    assert!(matches!(
        run_prequential(&empty, &mut Passthrough::new(1), &mut Majority, &EvalConfig::new(2)),
        Err(QolError::EmptyStream)
    ));

    let drift = vec![LabeledSample::new(vec![1.0], 0), LabeledSample::new(vec![1.0, 2.0], 0)];
    assert!(matches!(
        run_prequential(&drift, &mut Passthrough::new(1), &mut Majority, &EvalConfig::new(2)),
        Err(QolError::DimensionMismatch { .. })
    ));

    let short = stream(3);
    let mut norm = QuantileNormalizer::new(5, 1.0, 2).unwrap();
    assert!(matches!(
        run_prequential(&short, &mut norm, &mut Majority, &EvalConfig::new(2)),
        Err(QolError::NothingEvaluated)
    ));
}

#[test]
fn split_mode_scores_only_the_tail() {
    let data = stream(50);
    let cfg = EvalConfig {
        score_from: 35,
        ..EvalConfig::new(2)
    };
    let mut model = Recorder::default();
    let res = run_prequential(&data, &mut Passthrough::new(2), &mut model, &cfg).unwrap();
    assert_eq!(res.samples_evaluated, 15);
    assert_eq!(model.calls.len(), 100);
}

#[test]
fn metrics_rebuild_from_confusion_and_runs_repeat() {
    let data = qol_core::data::gen_synthetic(&qol_core::SyntheticConfig::fet_like(6, 3, 400, 9)).unwrap();
    let run = || {
        let mut norm = QuantileNormalizer::new(20, 0.99, 6).unwrap();
        let mut model = MlpClassifier::new(6, 16, 3, 0.05, 4).unwrap();
        run_prequential(&data, &mut norm, &mut model, &EvalConfig::new(3)).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.confusion, b.confusion);
    assert_eq!(a.confusion.total() as usize, a.samples_evaluated);
    assert_eq!(a.confusion.overall_accuracy().unwrap(), a.overall_accuracy);
    assert_eq!(a.confusion.balanced_accuracy().unwrap(), a.balanced_accuracy);

    let doc = a.to_document(serde_json::json!({"seed": 4}));
    let json = serde_json::to_value(&doc).unwrap();
    for field in ["config", "metrics", "confusion", "n_evaluated", "wall_time_ms"] {
        assert!(json.get(field).is_some(), "missing {field}");
    }
    assert_eq!(json["metrics"]["overall"], a.overall_accuracy);
    assert_eq!(json["metrics"]["balanced"], a.balanced_accuracy);
}

#[test]
fn box_dyn_normalizer_works() {
    let mut norm: Box<dyn StreamNormalizer> = Box::new(Passthrough::new(2));
    let res = run_prequential(stream(5), &mut norm, &mut Majority, &EvalConfig::new(2)).unwrap();
    assert_eq!(res.samples_evaluated, 5);
}
