//! Per-feature weighted cluster-centre buffers that map raw values to
//! approximate quantile ranks in a single pass.
//!
//! Each feature keeps `p` sorted centres and a weight per centre. A new value
//! snaps to its nearest centre, hands part of that centre's weight to the
//! neighbour on the far side of the value, takes over the centre position,
//! and is emitted as the weight prefix sum up to that centre divided by the
//! total weight. After every sample all weights decay by the discount factor.

use serde::{Deserialize, Serialize};

use crate::error::{QolError, Result};

/// Buffer length used when none is configured.
pub const DEFAULT_BUFFER_LEN: usize = 20;
/// Weight decay applied after each sample when none is configured.
pub const DEFAULT_DISCOUNT: f64 = 0.99;

const CHECKPOINT_VERSION: u32 = 1;

fn check_discount(discount: f64) -> Result<()> {
    if discount > 0.0 && discount <= 1.0 {
        Ok(())
    } else {
        Err(QolError::InvalidParameter(format!(
            "eta must lie in (0, 1], got {discount}"
        )))
    }
}

/// Which side of the chosen centre the value fell on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// `value >= centre`, mass shared with the left neighbour.
    Geq,
    /// `value < centre`, mass shared with the right neighbour.
    Lt,
    /// The neighbour on the relevant side does not exist; the centre keeps
    /// all of its old weight.
    BoundaryMissing,
}

/// Record of a single weight update, for inspection and tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateTrace {
    pub feature_index: usize,
    pub chosen_idx: usize,
    pub case_tag: CaseTag,
    pub percentage: f64,
    pub old_weight: f64,
}

/// Sorted centres and their weights for one feature.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSketch {
    centres: Vec<f64>,
    weights: Vec<f64>,
    discount: f64,
}

impl FeatureSketch {
    /// Builds a sketch from warm-up values: centres are the values sorted
    /// ascending, every weight is one.
    pub fn from_values(values: &[f64], discount: f64) -> Result<Self> {
        let mut centres = values.to_vec();
        centres.sort_by(f64::total_cmp);
        let weights = vec![1.0; centres.len()];
        Self::from_parts(centres, weights, discount)
    }

    /// Restores a sketch from explicit state, validating every invariant.
    pub fn from_parts(centres: Vec<f64>, weights: Vec<f64>, discount: f64) -> Result<Self> {
        check_discount(discount)?;
        if centres.len() < 2 {
            return Err(QolError::InvalidParameter(format!(
                "a sketch needs at least 2 centres, got {}",
                centres.len()
            )));
        }
        if centres.len() != weights.len() {
            return Err(QolError::DimensionMismatch {
                expected: centres.len(),
                actual: weights.len(),
            });
        }
        if let Some(i) = centres.iter().position(|c| !c.is_finite()) {
            return Err(QolError::NonFinite { feature: i });
        }
        if centres.windows(2).any(|w| w[0] > w[1]) {
            return Err(QolError::InvalidParameter("centres must be sorted".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(QolError::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            centres,
            weights,
            discount,
        })
    }

    pub fn centres(&self) -> &[f64] {
        &self.centres
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn discount_factor(&self) -> f64 {
        self.discount
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Index of the centre closest to `value`.
    ///
    /// On equal distance the lower centre wins. When the winning centre lies
    /// below `value` and has duplicates, the last of the duplicates is
    /// returned so that overwriting it keeps the centres sorted.
    pub fn nearest_centre(&self, value: f64) -> usize {
        let centres = &self.centres;
        // first centre >= value
        let upper = centres.partition_point(|&c| c < value);
        if upper == 0 {
            return 0;
        }
        let below = upper - 1;
        if upper == centres.len() {
            return below;
        }
        let dist_below = (centres[below] - value).abs();
        let dist_upper = (centres[upper] - value).abs();
        if dist_below <= dist_upper {
            below
        } else {
            upper
        }
    }

    /// Moves centre `idx` to `value` and redistributes its weight.
    ///
    /// The old weight is split between the centre and its neighbour on the
    /// far side of `value` in proportion to the distance ratio, and the new
    /// observation adds one unit of mass. Total weight grows by exactly one.
    /// `idx` must be `self.nearest_centre(value)`; any other index can push the
    /// split ratio outside `[0, 1]` and break the centre ordering.
    pub fn split_update(&mut self, value: f64, idx: usize) -> UpdateTrace {
        let old_weight = self.weights[idx];
        let centre = self.centres[idx];
        let (side, neighbour) = if value >= centre {
            (CaseTag::Geq, idx.checked_sub(1))
        } else {
            (CaseTag::Lt, Some(idx + 1).filter(|&j| j < self.centres.len()))
        };

        let (case_tag, percentage) = match neighbour {
            Some(nb) => {
                let near = (centre - value).abs();
                let far = (self.centres[nb] - value).abs();
                let percentage = if far == 0.0 { 0.0 } else { near / far };
                self.weights[idx] = (1.0 - percentage) * old_weight + 1.0;
                self.weights[nb] += percentage * old_weight;
                (side, percentage)
            }
            None => {
                self.weights[idx] = old_weight + 1.0;
                (CaseTag::BoundaryMissing, 0.0)
            }
        };
        self.centres[idx] = value;

        UpdateTrace {
            feature_index: 0,
            chosen_idx: idx,
            case_tag,
            percentage,
            old_weight,
        }
    }

    /// Share of the total weight held by centres `0..=idx`.
    pub fn quantile_of(&self, idx: usize) -> Result<f64> {
        let mut acc = 0.0;
        for w in &self.weights[..=idx] {
            acc += w;
        }
        let prefix = acc;
        for w in &self.weights[idx + 1..] {
            acc += w;
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(QolError::ZeroWeight);
        }
        Ok(prefix / acc)
    }

    /// Quantile of `value` against the current state, without updating it.
    pub fn snapshot_quantile(&self, value: f64) -> Result<f64> {
        self.quantile_of(self.nearest_centre(value))
    }

    /// Multiplies every weight by the discount factor.
    pub fn apply_discount(&mut self) {
        let eta = self.discount;
        self.weights.iter_mut().for_each(|w| *w *= eta);
    }

    /// Nearest centre, weight update, then quantile. Does not discount.
    pub fn observe(&mut self, value: f64) -> Result<(f64, UpdateTrace)> {
        let idx = self.nearest_centre(value);
        let trace = self.split_update(value, idx);
        Ok((self.quantile_of(idx)?, trace))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizerState {
    Warmup,
    Ready,
}

/// Result of feeding one warm-up sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WarmupStatus {
    Pending { remaining: usize },
    Ready,
}

/// One [`FeatureSketch`] per input dimension plus the warm-up buffer that
/// seeds them.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileNormalizer {
    p: usize,
    n: usize,
    discount: f64,
    warmup: Vec<Vec<f64>>,
    sketches: Vec<FeatureSketch>,
}

impl QuantileNormalizer {
    pub fn new(p: usize, eta: f64, n: usize) -> Result<Self> {
        if p < 2 {
            return Err(QolError::InvalidParameter(format!(
                "buffer length p must be at least 2, got {p}"
            )));
        }
        if n < 1 {
            return Err(QolError::InvalidParameter(
                "feature count n must be at least 1".into(),
            ));
        }
        check_discount(eta)?;
        Ok(Self {
            p,
            n,
            discount: eta,
            warmup: Vec::with_capacity(p),
            sketches: Vec::new(),
        })
    }

    pub fn buffer_len(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.discount
    }

    pub fn state(&self) -> NormalizerState {
        if self.sketches.is_empty() {
            NormalizerState::Warmup
        } else {
            NormalizerState::Ready
        }
    }

    pub fn is_ready(&self) -> bool {
        self.state() == NormalizerState::Ready
    }

    pub fn sketches(&self) -> &[FeatureSketch] {
        &self.sketches
    }

    /// Buffered warm-up samples not yet taken by [`Self::take_warmup_replay`].
    pub fn warmup_buffer(&self) -> &[Vec<f64>] {
        &self.warmup
    }

    fn check_sample(&self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.n {
            return Err(QolError::DimensionMismatch {
                expected: self.n,
                actual: sample.len(),
            });
        }
        match sample.iter().position(|v| !v.is_finite()) {
            Some(feature) => Err(QolError::NonFinite { feature }),
            None => Ok(()),
        }
    }

    /// Buffers a warm-up sample. On the `p`-th sample every feature's centres
    /// become its buffered values sorted ascending with unit weights.
    pub fn ingest_warmup(&mut self, sample: &[f64]) -> Result<WarmupStatus> {
        if self.is_ready() {
            return Err(QolError::AlreadyReady);
        }
        self.check_sample(sample)?;
        self.warmup.push(sample.to_vec());
        if self.warmup.len() < self.p {
            return Ok(WarmupStatus::Pending {
                remaining: self.p - self.warmup.len(),
            });
        }
        self.sketches = (0..self.n)
            .map(|j| {
                let column: Vec<f64> = self.warmup.iter().map(|s| s[j]).collect();
                FeatureSketch::from_values(&column, self.discount)
            })
            .collect::<Result<_>>()?;
        Ok(WarmupStatus::Ready)
    }

    /// Maps each buffered warm-up sample through the freshly initialised
    /// sketches in arrival order without updating them, then drops the buffer.
    pub fn take_warmup_replay(&mut self) -> Result<Vec<Vec<f64>>> {
        if !self.is_ready() {
            return Err(QolError::NotReady {
                seen: self.warmup.len(),
                needed: self.p,
            });
        }
        let buffered = std::mem::take(&mut self.warmup);
        buffered.iter().map(|s| self.snapshot(s)).collect()
    }

    /// Normalizes one sample and updates the sketches.
    pub fn normalize(&mut self, sample: &[f64]) -> Result<Vec<f64>> {
        self.normalize_traced(sample).map(|(out, _)| out)
    }

    /// [`Self::normalize`], also returning the per-feature update traces.
    pub fn normalize_traced(&mut self, sample: &[f64]) -> Result<(Vec<f64>, Vec<UpdateTrace>)> {
        if !self.is_ready() {
            return Err(QolError::NotReady {
                seen: self.warmup.len(),
                needed: self.p,
            });
        }
        self.check_sample(sample)?;
        let mut out = Vec::with_capacity(self.n);
        let mut traces = Vec::with_capacity(self.n);
        for (j, (sketch, &value)) in self.sketches.iter_mut().zip(sample).enumerate() {
            let (q, mut trace) = sketch.observe(value)?;
            trace.feature_index = j;
            out.push(q);
            traces.push(trace);
        }
        self.discount_all();
        Ok((out, traces))
    }

    /// Quantile ranks of `sample` against the current state. Pure.
    pub fn snapshot(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if !self.is_ready() {
            return Err(QolError::NotReady {
                seen: self.warmup.len(),
                needed: self.p,
            });
        }
        self.check_sample(sample)?;
        self.sketches
            .iter()
            .zip(sample)
            .map(|(sk, &v)| sk.snapshot_quantile(v))
            .collect()
    }

    pub fn discount_all(&mut self) {
        self.sketches.iter_mut().for_each(FeatureSketch::apply_discount);
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            p: self.p,
            n: self.n,
            eta: self.discount,
            state: self.state(),
            sketches: self
                .sketches
                .iter()
                .map(|s| SketchState {
                    centres: s.centres.clone(),
                    weights: s.weights.clone(),
                })
                .collect(),
            warmup: self.warmup.clone(),
        }
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Self> {
        if cp.version != CHECKPOINT_VERSION {
            return Err(QolError::Data(format!(
                "unsupported checkpoint version {}",
                cp.version
            )));
        }
        let mut norm = Self::new(cp.p, cp.eta, cp.n)?;
        match cp.state {
            NormalizerState::Warmup => {
                if !cp.sketches.is_empty() || cp.warmup.len() >= cp.p {
                    return Err(QolError::Data("inconsistent warm-up checkpoint".into()));
                }
            }
            NormalizerState::Ready => {
                if cp.sketches.len() != cp.n {
                    return Err(QolError::DimensionMismatch {
                        expected: cp.n,
                        actual: cp.sketches.len(),
                    });
                }
                norm.sketches = cp
                    .sketches
                    .into_iter()
                    .map(|s| {
                        if s.centres.len() != cp.p {
                            return Err(QolError::DimensionMismatch {
                                expected: cp.p,
                                actual: s.centres.len(),
                            });
                        }
                        FeatureSketch::from_parts(s.centres, s.weights, cp.eta)
                    })
                    .collect::<Result<_>>()?;
            }
        }
        for sample in &cp.warmup {
            norm.check_sample(sample)?;
        }
        norm.warmup = cp.warmup;
        Ok(norm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_checkpoint())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_checkpoint(serde_json::from_str(json)?)
    }
}

/// Versioned JSON form of a [`QuantileNormalizer`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub p: usize,
    pub n: usize,
    pub eta: f64,
    pub state: NormalizerState,
    pub sketches: Vec<SketchState>,
    #[serde(default)]
    pub warmup: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchState {
    pub centres: Vec<f64>,
    pub weights: Vec<f64>,
}
