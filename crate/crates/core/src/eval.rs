//! Prequential (test-then-train) evaluation and accuracy metrics.

use std::borrow::Borrow;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{log_transform, raw_passthrough, SlidingWindowNormalizer};
use crate::data::LabeledSample;
use crate::error::{QolError, Result};
use crate::sketch::{QuantileNormalizer, WarmupStatus};

/// A classifier that can be queried and then updated one sample at a time.
///
/// `predict_proba` takes `&mut self` so instrumented implementations can
/// record call order; real models must not learn from it.
pub trait OnlineClassifier {
    fn predict_proba(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    fn learn(&mut self, x: &[f64], y: usize) -> Result<f64>;
}

/// What a normalizer hands back for one raw sample.
#[derive(Clone, Debug, PartialEq)]
pub enum Emission {
    /// Buffered; nothing to evaluate yet.
    Pending,
    /// The normalizer just became ready: the buffered samples, in arrival
    /// order, ending with the current one.
    Warmup(Vec<Vec<f64>>),
    /// The current sample, normalized.
    Live(Vec<f64>),
}

pub trait StreamNormalizer {
    fn dim(&self) -> usize;
    fn push(&mut self, sample: &[f64]) -> Result<Emission>;
}

impl StreamNormalizer for QuantileNormalizer {
    fn dim(&self) -> usize {
        QuantileNormalizer::dim(self)
    }

    fn push(&mut self, sample: &[f64]) -> Result<Emission> {
        if self.is_ready() {
            return self.normalize(sample).map(Emission::Live);
        }
        match self.ingest_warmup(sample)? {
            WarmupStatus::Pending { .. } => Ok(Emission::Pending),
            WarmupStatus::Ready => self.take_warmup_replay().map(Emission::Warmup),
        }
    }
}

impl StreamNormalizer for SlidingWindowNormalizer {
    fn dim(&self) -> usize {
        SlidingWindowNormalizer::dim(self)
    }

    fn push(&mut self, sample: &[f64]) -> Result<Emission> {
        self.normalize(sample).map(Emission::Live)
    }
}

/// Forwards raw values unchanged.
#[derive(Clone, Copy, Debug)]
pub struct Passthrough {
    n: usize,
}

impl Passthrough {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl StreamNormalizer for Passthrough {
    fn dim(&self) -> usize {
        self.n
    }

    fn push(&mut self, sample: &[f64]) -> Result<Emission> {
        if sample.len() != self.n {
            return Err(QolError::DimensionMismatch {
                expected: self.n,
                actual: sample.len(),
            });
        }
        Ok(Emission::Live(raw_passthrough(sample)))
    }
}

/// Applies the signed log transform before the wrapped normalizer.
#[derive(Clone, Debug)]
pub struct LogTransformed<N>(pub N);

impl<N: StreamNormalizer> StreamNormalizer for LogTransformed<N> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn push(&mut self, sample: &[f64]) -> Result<Emission> {
        self.0.push(&log_transform(sample))
    }
}

impl<N: StreamNormalizer + ?Sized> StreamNormalizer for Box<N> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn push(&mut self, sample: &[f64]) -> Result<Emission> {
        (**self).push(sample)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_classes: usize,
    /// Score the warm-up replay as well as live samples.
    pub include_warmup: bool,
    /// Samples with a stream index below this are trained on but never
    /// scored. Zero scores the whole stream; a train/test split sets it to
    /// the length of the training prefix.
    pub score_from: usize,
}

impl EvalConfig {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            include_warmup: false,
            score_from: 0,
        }
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if counts.iter().any(|row| row.len() != c) {
            return Err(QolError::Data("confusion matrix must be square".into()));
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn overall_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(QolError::EmptyConfusion);
        }
        let correct: u64 = (0..self.classes()).map(|i| self.counts[i][i]).sum();
        Ok(correct as f64 / total as f64)
    }

    /// Mean recall over the classes that occur as truths.
    pub fn balanced_accuracy(&self) -> Result<f64> {
        let recalls: Vec<f64> = self
            .counts
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let support: u64 = row.iter().sum();
                (support > 0).then(|| row[i] as f64 / support as f64)
            })
            .collect();
        if recalls.is_empty() {
            return Err(QolError::EmptyConfusion);
        }
        Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
    }
}

pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    cm.balanced_accuracy()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrequentialResult {
    pub predictions: Vec<usize>,
    pub truths: Vec<usize>,
    pub confusion: ConfusionMatrix,
    pub overall_accuracy: f64,
    pub balanced_accuracy: f64,
    pub samples_evaluated: usize,
    pub wall_time: Duration,
}

impl PrequentialResult {
    pub fn to_document(&self, config: serde_json::Value) -> ResultDocument {
        ResultDocument {
            config,
            metrics: Metrics {
                overall: self.overall_accuracy,
                balanced: self.balanced_accuracy,
            },
            confusion: self.confusion.counts.clone(),
            n_evaluated: self.samples_evaluated,
            wall_time_ms: self.wall_time.as_secs_f64() * 1e3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub overall: f64,
    pub balanced: f64,
}

/// On-disk form of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config: serde_json::Value,
    pub metrics: Metrics,
    pub confusion: Vec<Vec<u64>>,
    pub n_evaluated: usize,
    pub wall_time_ms: f64,
}

/// Index of the largest probability; ties go to the lower class.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

struct Scorer {
    predictions: Vec<usize>,
    truths: Vec<usize>,
    confusion: ConfusionMatrix,
}

impl Scorer {
    fn step(
        &mut self,
        model: &mut dyn OnlineClassifier,
        x: &[f64],
        label: usize,
        scored: bool,
    ) -> Result<()> {
        let predicted = argmax(&model.predict_proba(x)?);
        if scored {
            self.predictions.push(predicted);
            self.truths.push(label);
            self.confusion.record(label, predicted);
        }
        model.learn(x, label)?;
        Ok(())
    }
}

/// Runs the test-then-train protocol over `stream`.
///
/// Each normalized sample is first predicted (and scored) by `model`, then
/// used for one training step. Samples the normalizer buffers during warm-up
/// reach the model once it becomes ready, in arrival order, and are scored
/// only when `config.include_warmup` is set.
pub fn run_prequential<I>(
    stream: I,
    normalizer: &mut dyn StreamNormalizer,
    model: &mut dyn OnlineClassifier,
    config: &EvalConfig,
) -> Result<PrequentialResult>
where
    I: IntoIterator,
    I::Item: Borrow<LabeledSample>,
{
    let start = Instant::now();
    let dim = normalizer.dim();
    let mut scorer = Scorer {
        predictions: Vec::new(),
        truths: Vec::new(),
        confusion: ConfusionMatrix::new(config.n_classes),
    };
    let mut pending: Vec<(usize, usize)> = Vec::new();
    let mut seen = 0usize;

    for (index, item) in stream.into_iter().enumerate() {
        let sample = item.borrow();
        seen += 1;
        if sample.features.len() != dim {
            return Err(QolError::DimensionMismatch {
                expected: dim,
                actual: sample.features.len(),
            });
        }
        if sample.label >= config.n_classes {
            return Err(QolError::LabelOutOfRange {
                label: sample.label,
                classes: config.n_classes,
            });
        }
        pending.push((index, sample.label));
        match normalizer.push(&sample.features)? {
            Emission::Pending => {}
            Emission::Warmup(replay) => {
                debug_assert_eq!(replay.len(), pending.len());
                for (x, (idx, label)) in replay.iter().zip(pending.drain(..)) {
                    let scored = config.include_warmup && idx >= config.score_from;
                    scorer.step(model, x, label, scored)?;
                }
            }
            Emission::Live(x) => {
                pending.clear();
                scorer.step(model, &x, sample.label, index >= config.score_from)?;
            }
        }
    }

    if seen == 0 {
        return Err(QolError::EmptyStream);
    }
    if scorer.predictions.is_empty() {
        return Err(QolError::NothingEvaluated);
    }
    let overall_accuracy = scorer.confusion.overall_accuracy()?;
    let balanced_accuracy = scorer.confusion.balanced_accuracy()?;
    Ok(PrequentialResult {
        samples_evaluated: scorer.predictions.len(),
        predictions: scorer.predictions,
        truths: scorer.truths,
        confusion: scorer.confusion,
        overall_accuracy,
        balanced_accuracy,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn balanced_accuracy_examples() {
        assert_eq!(balanced_accuracy(&cm(&[&[50, 0], &[0, 50]])).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&cm(&[&[100, 0], &[10, 0]])).unwrap(), 0.5);
        assert_eq!(balanced_accuracy(&cm(&[&[8, 2], &[0, 0]])).unwrap(), 0.8);
        assert!(matches!(
            balanced_accuracy(&cm(&[&[0, 0], &[0, 0]])),
            Err(QolError::EmptyConfusion)
        ));
    }

    #[test]
    fn overall_accuracy_counts_diagonal() {
        let m = cm(&[&[3, 1], &[2, 4]]);
        assert_eq!(m.total(), 10);
        assert_eq!(m.overall_accuracy().unwrap(), 0.7);
    }

    #[test]
    fn argmax_prefers_lower_class_on_ties() {
        assert_eq!(argmax(&[0.25, 0.25, 0.5]), 2);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn from_counts_rejects_ragged() {
        assert!(ConfusionMatrix::from_counts(vec![vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn log_wrapper_transforms_before_inner() {
        let mut n = LogTransformed(Passthrough::new(2));
        let Emission::Live(out) = n.push(&[99.0, -9.0]).unwrap() else {
            panic!("passthrough never buffers");
        };
        assert!((out[0] - 2.0).abs() < 1e-15);
        assert!((out[1] + 1.0).abs() < 1e-15);
    }
}
