//! Dataset loading, missing-value imputation and a synthetic stream generator.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{QolError, Result};

/// Feature count of the UCI SECOM dataset.
pub const SECOM_FEATURES: usize = 590;
/// Sample count of the UCI SECOM dataset.
pub const SECOM_SAMPLES: usize = 1567;

/// One observation. Missing values are NaN until imputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

pub type SampleStream = Vec<LabeledSample>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputePolicy {
    /// Carry the most recent finite value of the feature forward; 0.0 before
    /// any has been seen.
    #[default]
    LastObserved,
    Zero,
}

/// Replaces every non-finite feature value according to `policy`.
pub fn impute(mut stream: SampleStream, policy: ImputePolicy) -> SampleStream {
    let mut last: Vec<f64> = Vec::new();
    for sample in &mut stream {
        if last.len() < sample.features.len() {
            last.resize(sample.features.len(), 0.0);
        }
        for (v, prev) in sample.features.iter_mut().zip(last.iter_mut()) {
            if v.is_finite() {
                *prev = *v;
            } else {
                *v = match policy {
                    ImputePolicy::LastObserved => *prev,
                    ImputePolicy::Zero => 0.0,
                };
            }
        }
    }
    stream
}

/// Seeded Fisher-Yates shuffle. Streams are otherwise kept in file order.
pub fn shuffle(mut stream: SampleStream, seed: u64) -> SampleStream {
    stream.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    stream
}

pub fn class_counts(stream: &[LabeledSample], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for s in stream {
        if s.label >= counts.len() {
            counts.resize(s.label + 1, 0);
        }
        counts[s.label] += 1;
    }
    counts
}

/// Loads the UCI SECOM files: `features_path` holds one space-separated row
/// of values per sample with literal `NaN` for missing entries;
/// `labels_path` holds `<label> <timestamp>` lines with label -1 (pass) or
/// 1 (fail), mapped to classes 0 and 1.
pub fn load_secom(
    features_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    policy: ImputePolicy,
) -> Result<SampleStream> {
    let features = BufReader::new(File::open(features_path)?);
    let labels = BufReader::new(File::open(labels_path)?);
    parse_secom(features, labels, policy)
}

pub fn parse_secom(
    features: impl BufRead,
    labels: impl BufRead,
    policy: ImputePolicy,
) -> Result<SampleStream> {
    let mut rows = Vec::new();
    let mut width = None;
    for (i, line) in features.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| QolError::Parse {
                    line: i + 1,
                    message: format!("malformed feature token {tok:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(QolError::Parse {
                    line: i + 1,
                    message: format!("expected {w} columns, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        rows.push(row);
    }

    let mut classes = Vec::with_capacity(rows.len());
    for (i, line) in labels.lines().enumerate() {
        let line = line?;
        let Some(tok) = line.split_whitespace().next() else {
            continue;
        };
        let class = match tok {
            "-1" => 0,
            "1" => 1,
            other => {
                return Err(QolError::Parse {
                    line: i + 1,
                    message: format!("expected label -1 or 1, found {other:?}"),
                })
            }
        };
        classes.push(class);
    }

    if rows.len() != classes.len() {
        return Err(QolError::Data(format!(
            "feature file has {} rows but label file has {}",
            rows.len(),
            classes.len()
        )));
    }
    if rows.is_empty() {
        return Err(QolError::EmptyStream);
    }
    let stream = rows
        .into_iter()
        .zip(classes)
        .map(|(features, label)| LabeledSample { features, label })
        .collect();
    Ok(impute(stream, policy))
}

/// Loads a headed, comma-delimited file. Every column other than
/// `label_column` is a feature, in header order. Empty cells become NaN.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<SampleStream> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| QolError::Data(format!("label column {label_column:?} not found")))?;

    let mut stream = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let mut features = Vec::with_capacity(record.len().saturating_sub(1));
        let mut label = None;
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if col == label_idx {
                label = Some(cell.parse::<usize>().map_err(|_| QolError::Parse {
                    line,
                    message: format!("label {cell:?} is not a class id"),
                })?);
            } else if cell.is_empty() {
                features.push(f64::NAN);
            } else {
                features.push(cell.parse::<f64>().map_err(|_| QolError::Parse {
                    line,
                    message: format!("non-numeric cell {cell:?} in column {:?}", &headers[col]),
                })?);
            }
        }
        let label = label.ok_or_else(|| QolError::Parse {
            line,
            message: "missing label cell".into(),
        })?;
        stream.push(LabeledSample { features, label });
    }
    Ok(stream)
}

/// Writes `f0..f{n-1},label`. Values use the shortest text that parses back
/// to the same `f64`.
pub fn write_csv(path: impl AsRef<Path>, stream: &[LabeledSample]) -> Result<()> {
    let n = stream.first().map_or(0, |s| s.features.len());
    let mut out = std::io::BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..n).map(|j| format!("f{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for s in stream {
        if s.features.len() != n {
            return Err(QolError::DimensionMismatch {
                expected: n,
                actual: s.features.len(),
            });
        }
        for v in &s.features {
            if v.is_finite() {
                write!(out, "{v},")?;
            } else {
                write!(out, ",")?;
            }
        }
        writeln!(out, "{}", s.label)?;
    }
    out.flush()?;
    Ok(())
}

/// Mixed-range, class-structured stream standing in for device-level defect
/// data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_features: usize,
    pub n_classes: usize,
    pub n_samples: usize,
    /// The first `log_features` features are log-normal; the rest are
    /// unit-scale Gaussian.
    pub log_features: usize,
    /// Decades between the smallest and largest log-normal feature medians.
    pub orders_of_magnitude: f64,
    /// Class-mean offset in units of the within-class noise. Zero makes all
    /// classes identically distributed.
    pub class_separation: f64,
    /// Stream indices at which every feature's mean jumps.
    #[serde(default)]
    pub drift_switch_points: Vec<usize>,
    pub seed: u64,
}

/// Within-class spread of the log-normal features, in decades.
const LOG_NOISE_DECADES: f64 = 0.25;

impl SyntheticConfig {
    /// 2/3 log-normal features across 8 decades, separation 1.
    pub fn fet_like(n_features: usize, n_classes: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            n_features,
            n_classes,
            n_samples,
            log_features: (2 * n_features).div_ceil(3),
            orders_of_magnitude: 8.0,
            class_separation: 1.0,
            drift_switch_points: Vec::new(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(QolError::InvalidParameter(m.to_string()));
        if self.n_features == 0 || self.n_samples == 0 {
            return bad("synthetic stream needs at least one feature and one sample");
        }
        if self.n_classes < 2 {
            return bad("synthetic stream needs at least two classes");
        }
        if self.log_features > self.n_features {
            return bad("log_features exceeds n_features");
        }
        if !(self.orders_of_magnitude.is_finite() && self.orders_of_magnitude >= 0.0) {
            return bad("orders_of_magnitude must be finite and non-negative");
        }
        if !(self.class_separation.is_finite() && self.class_separation >= 0.0) {
            return bad("class_separation must be finite and non-negative");
        }
        if self
            .drift_switch_points
            .windows(2)
            .any(|w| w[0] >= w[1])
            || self.drift_switch_points.iter().any(|&p| p >= self.n_samples)
        {
            return bad("drift_switch_points must be strictly increasing and inside the stream");
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Generates a stream from `cfg`, deterministic per seed.
///
/// Each class gets a random offset vector scaled by the class separation.
/// Log-normal feature `j` has base median `10^b_j`, with the `b_j` spread
/// evenly over the configured number of decades, and class offsets and noise
/// applied in log space. At each drift point every feature's mean shifts by
/// a fresh standard-normal amount (in noise units), shared by all classes.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<SampleStream> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_features;

    let base: Vec<f64> = (0..n)
        .map(|j| {
            if j >= cfg.log_features || cfg.log_features == 1 {
                0.0
            } else {
                let t = j as f64 / (cfg.log_features - 1) as f64;
                cfg.orders_of_magnitude * (t - 0.5)
            }
        })
        .collect();
    let offsets: Vec<Vec<f64>> = (0..cfg.n_classes)
        .map(|_| (0..n).map(|_| cfg.class_separation * normal(&mut rng)).collect())
        .collect();
    let shifts: Vec<Vec<f64>> = cfg
        .drift_switch_points
        .iter()
        .map(|_| (0..n).map(|_| normal(&mut rng)).collect())
        .collect();

    let mut drift = vec![0.0; n];
    let mut next_switch = 0;
    let mut stream = Vec::with_capacity(cfg.n_samples);
    for i in 0..cfg.n_samples {
        while next_switch < cfg.drift_switch_points.len() && cfg.drift_switch_points[next_switch] == i {
            for (d, s) in drift.iter_mut().zip(&shifts[next_switch]) {
                *d += s;
            }
            next_switch += 1;
        }
        let label = rng.random_range(0..cfg.n_classes);
        let features = (0..n)
            .map(|j| {
                let z = offsets[label][j] + drift[j] + normal(&mut rng);
                if j < cfg.log_features {
                    10f64.powf(base[j] + LOG_NOISE_DECADES * z)
                } else {
                    z
                }
            })
            .collect();
        stream.push(LabeledSample { features, label });
    }
    Ok(stream)
}
