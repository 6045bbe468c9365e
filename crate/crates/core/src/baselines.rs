//! Reference normalizers used for comparison against the quantile sketch.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{QolError, Result};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_DELTA: f64 = 0.2;

const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    ZScore,
    MinMax,
}

/// Scales each feature against the statistics of its last `w` raw values.
#[derive(Clone, Debug)]
pub struct SlidingWindowNormalizer {
    window: usize,
    mode: WindowMode,
    /// Accepted for configuration parity with adaptive normalization; not
    /// consulted by the windowed rule.
    delta: f64,
    buffers: Vec<VecDeque<f64>>,
}

impl SlidingWindowNormalizer {
    pub fn new(window: usize, mode: WindowMode, delta: f64, n: usize) -> Result<Self> {
        if window == 0 {
            return Err(QolError::InvalidParameter("window must be at least 1".into()));
        }
        if n == 0 {
            return Err(QolError::InvalidParameter(
                "feature count n must be at least 1".into(),
            ));
        }
        Ok(Self {
            window,
            mode,
            delta,
            buffers: vec![VecDeque::with_capacity(window); n],
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mode(&self) -> WindowMode {
        self.mode
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.buffers.len()
    }

    /// Scales `sample` against the current windows, then pushes it in.
    /// Features with an empty window pass through unchanged.
    pub fn normalize(&mut self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() != self.buffers.len() {
            return Err(QolError::DimensionMismatch {
                expected: self.buffers.len(),
                actual: sample.len(),
            });
        }
        let mode = self.mode;
        let window = self.window;
        Ok(self
            .buffers
            .iter_mut()
            .zip(sample)
            .map(|(buf, &x)| {
                let out = scale(buf, x, mode);
                if buf.len() == window {
                    buf.pop_front();
                }
                buf.push_back(x);
                out
            })
            .collect())
    }
}

fn scale(buf: &VecDeque<f64>, x: f64, mode: WindowMode) -> f64 {
    if buf.is_empty() {
        return x;
    }
    match mode {
        WindowMode::ZScore => {
            let len = buf.len() as f64;
            let mean = buf.iter().sum::<f64>() / len;
            let var = buf.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len;
            (x - mean) / var.sqrt().max(STD_FLOOR)
        }
        WindowMode::MinMax => {
            let lo = buf.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        }
    }
}

/// `sign(x) * log10(1 + |x|)` per component.
pub fn log_transform(sample: &[f64]) -> Vec<f64> {
    sample.iter().map(|&x| signed_log10(x)).collect()
}

fn signed_log10(x: f64) -> f64 {
    let magnitude = x.abs().ln_1p() / std::f64::consts::LN_10;
    if x < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

pub fn raw_passthrough(sample: &[f64]) -> Vec<f64> {
    sample.to_vec()
}
