//! Two-layer feed-forward classifier trained one sample at a time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QolError, Result};
use crate::eval::OnlineClassifier;

pub const DEFAULT_HIDDEN: usize = 50;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

/// `softmax(W2ᵀ relu(W1ᵀ x + b1) + b2)` with plain per-sample SGD on
/// cross-entropy.
///
/// Parameters live in one flat vector laid out as `W1` (`n × h`, row-major),
/// `b1` (`h`), `W2` (`h × c`, row-major), `b2` (`c`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    input_dim: usize,
    hidden_dim: usize,
    class_count: usize,
    learning_rate: f64,
    seed: u64,
    params: Vec<f64>,
}

struct Forward {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn validate(n: usize, h: usize, c: usize, lr: f64) -> Result<()> {
    if n == 0 || h == 0 || c == 0 {
        return Err(QolError::InvalidParameter(format!(
            "classifier dimensions must be positive, got n={n} h={h} c={c}"
        )));
    }
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(QolError::InvalidParameter(format!(
            "learning rate must be finite and non-negative, got {lr}"
        )));
    }
    Ok(())
}

fn param_count(n: usize, h: usize, c: usize) -> usize {
    n * h + h + h * c + c
}

impl MlpClassifier {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation, deterministic
    /// per seed.
    pub fn new(n: usize, h: usize, c: usize, lr: f64, seed: u64) -> Result<Self> {
        validate(n, h, c, lr)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(n, h, c));
        let first = 1.0 / (n as f64).sqrt();
        let second = 1.0 / (h as f64).sqrt();
        params.extend((0..n * h + h).map(|_| rng.random_range(-first..first)));
        params.extend((0..h * c + c).map(|_| rng.random_range(-second..second)));
        Ok(Self {
            input_dim: n,
            hidden_dim: h,
            class_count: c,
            learning_rate: lr,
            seed,
            params,
        })
    }

    /// All parameters zero.
    pub fn zeroed(n: usize, h: usize, c: usize, lr: f64) -> Result<Self> {
        validate(n, h, c, lr)?;
        Ok(Self {
            input_dim: n,
            hidden_dim: h,
            class_count: c,
            learning_rate: lr,
            seed: 0,
            params: vec![0.0; param_count(n, h, c)],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (n, h, c) = (self.input_dim, self.hidden_dim, self.class_count);
        let b1 = n * h;
        let w2 = b1 + h;
        let b2 = w2 + h * c;
        (b1, w2, b2)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(QolError::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        match x.iter().position(|v| !v.is_finite()) {
            Some(feature) => Err(QolError::NonFinite { feature }),
            None => Ok(()),
        }
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let (h, c) = (self.hidden_dim, self.class_count);
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;

        let mut hidden = p[b1..w2].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &p[i * h..(i + 1) * h];
            for (acc, w) in hidden.iter_mut().zip(row) {
                *acc += xi * w;
            }
        }
        hidden.iter_mut().for_each(|v| *v = v.max(0.0));

        let mut logits = p[b2..b2 + c].to_vec();
        for (k, &hk) in hidden.iter().enumerate() {
            if hk == 0.0 {
                continue;
            }
            let row = &p[w2 + k * c..w2 + (k + 1) * c];
            for (acc, w) in logits.iter_mut().zip(row) {
                *acc += hk * w;
            }
        }
        Forward { hidden, logits }
    }

    /// Class probabilities for `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(softmax(&self.forward(x).logits))
    }

    /// Cross-entropy loss of `(x, y)` at the current parameters.
    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        self.check_input(x)?;
        self.check_label(y)?;
        let logits = self.forward(x).logits;
        Ok(log_sum_exp(&logits) - logits[y])
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.class_count {
            return Err(QolError::LabelOutOfRange {
                label: y,
                classes: self.class_count,
            });
        }
        Ok(())
    }

    /// Loss and its gradient with respect to [`Self::parameters`].
    pub fn gradient(&self, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        self.check_label(y)?;
        let (h, c) = (self.hidden_dim, self.class_count);
        let (b1, w2, b2) = self.offsets();
        let fwd = self.forward(x);
        let loss = log_sum_exp(&fwd.logits) - fwd.logits[y];

        let mut d_logits = softmax(&fwd.logits);
        d_logits[y] -= 1.0;

        let mut grad = vec![0.0; self.params.len()];
        grad[b2..b2 + c].copy_from_slice(&d_logits);

        let mut d_hidden = vec![0.0; h];
        for k in 0..h {
            let row = &self.params[w2 + k * c..w2 + (k + 1) * c];
            let g_row = &mut grad[w2 + k * c..w2 + (k + 1) * c];
            let hk = fwd.hidden[k];
            let mut back = 0.0;
            for m in 0..c {
                g_row[m] = hk * d_logits[m];
                back += row[m] * d_logits[m];
            }
            // relu'(z) is 0 where the unit was clipped
            d_hidden[k] = if hk > 0.0 { back } else { 0.0 };
        }

        grad[b1..w2].copy_from_slice(&d_hidden);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (g, d) in grad[i * h..(i + 1) * h].iter_mut().zip(&d_hidden) {
                *g = xi * d;
            }
        }
        Ok((loss, grad))
    }

    /// One SGD step on `(x, y)`. Returns the loss before the update.
    ///
    /// If the step would leave any parameter non-finite the parameters are
    /// left untouched and [`QolError::NonFiniteUpdate`] is returned.
    pub fn train_step(&mut self, x: &[f64], y: usize) -> Result<f64> {
        let (loss, grad) = self.gradient(x, y)?;
        if self.learning_rate == 0.0 {
            return Ok(loss);
        }
        let lr = self.learning_rate;
        let updated: Vec<f64> = self
            .params
            .iter()
            .zip(&grad)
            .map(|(p, g)| p - lr * g)
            .collect();
        if updated.iter().any(|p| !p.is_finite()) {
            return Err(QolError::NonFiniteUpdate);
        }
        self.params = updated;
        Ok(loss)
    }
}

impl OnlineClassifier for MlpClassifier {
    fn predict_proba(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict(x)
    }

    fn learn(&mut self, x: &[f64], y: usize) -> Result<f64> {
        self.train_step(x, y)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
