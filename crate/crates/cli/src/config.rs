use std::fmt;
use std::path::PathBuf;

use qol_core::baselines::{DEFAULT_DELTA, DEFAULT_WINDOW};
use qol_core::online_net::{DEFAULT_HIDDEN, DEFAULT_LEARNING_RATE};
use qol_core::sketch::{DEFAULT_BUFFER_LEN, DEFAULT_DISCOUNT};
use qol_core::{ImputePolicy, QolError, SyntheticConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 42;

/// Failure classes, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<QolError> for CliError {
    fn from(e: QolError) -> Self {
        match e {
            QolError::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    Secom { features: PathBuf, labels: PathBuf },
    Csv { path: PathBuf, label_column: String },
    Synthetic(SyntheticConfig),
}

impl DatasetSpec {
    /// Short name used in reports.
    pub fn label(&self) -> String {
        match self {
            DatasetSpec::Secom { .. } => "secom".into(),
            DatasetSpec::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
            DatasetSpec::Synthetic(_) => "synthetic".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerKind {
    Qol,
    SlidingZscore,
    SlidingMinmax,
    Raw,
}

impl NormalizerKind {
    pub fn name(self) -> &'static str {
        match self {
            NormalizerKind::Qol => "qol",
            NormalizerKind::SlidingZscore => "sliding-zscore",
            NormalizerKind::SlidingMinmax => "sliding-minmax",
            NormalizerKind::Raw => "raw",
        }
    }
}

impl fmt::Display for NormalizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
        }
    }
}

/// Everything needed to reproduce one run. Embedded verbatim in the result
/// file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub normalizer: NormalizerKind,
    pub log_transform: bool,
    pub p: usize,
    pub eta: f64,
    pub window: usize,
    pub delta: f64,
    pub model: ModelKind,
    pub hidden: usize,
    pub lr: f64,
    pub seed: u64,
    pub include_warmup: bool,
    #[serde(default)]
    pub impute: ImputePolicy,
    #[serde(default)]
    pub shuffle: bool,
    /// Leading fraction of the stream that is trained on but not scored.
    #[serde(default)]
    pub train_fraction: Option<f64>,
}

impl RunConfig {
    pub fn new(dataset: DatasetSpec, normalizer: NormalizerKind) -> Self {
        Self {
            dataset,
            normalizer,
            log_transform: false,
            p: DEFAULT_BUFFER_LEN,
            eta: DEFAULT_DISCOUNT,
            window: DEFAULT_WINDOW,
            delta: DEFAULT_DELTA,
            model: ModelKind::Mlp,
            hidden: DEFAULT_HIDDEN,
            lr: DEFAULT_LEARNING_RATE,
            seed: DEFAULT_SEED,
            include_warmup: false,
            impute: ImputePolicy::LastObserved,
            shuffle: false,
            train_fraction: None,
        }
    }

    /// Rejects values outside hard bounds and returns warnings for values
    /// outside the usual tuning ranges.
    pub fn validate(&self) -> Result<Vec<String>, CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return usage(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if self.p < 2 {
            return usage(format!("p must be at least 2, got {}", self.p));
        }
        if self.window == 0 {
            return usage("window must be at least 1".into());
        }
        if self.hidden == 0 {
            return usage("hidden width must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return usage(format!("lr must be positive and finite, got {}", self.lr));
        }
        if let Some(f) = self.train_fraction {
            if !(0.0..1.0).contains(&f) {
                return usage(format!("train fraction must lie in [0, 1), got {f}"));
            }
        }
        if let DatasetSpec::Synthetic(s) = &self.dataset {
            s.validate()?;
        }

        let mut warnings = Vec::new();
        if !(10..=30).contains(&self.p) {
            warnings.push(format!("p={} is outside the usual range 10..=30", self.p));
        }
        if !(1e-4..=1e-1).contains(&self.lr) {
            warnings.push(format!("lr={} is outside the usual range [1e-4, 1e-1]", self.lr));
        }
        if !(2..=5).contains(&self.window) {
            warnings.push(format!("window={} is outside the usual range 2..=5", self.window));
        }
        if !(0.1..=0.3).contains(&self.delta) {
            warnings.push(format!("delta={} is outside the usual range [0.1, 0.3]", self.delta));
        }
        Ok(warnings)
    }

    /// Stable 12-hex-digit digest of the serialized config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hex::encode(&hash[..6])
    }

    /// `<normalizer>_<model>_<hash>.json`
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}.json",
            self.normalizer.name(),
            self.model.name(),
            self.digest()
        )
    }

    /// Normalizer column label for reports, e.g. `qol` or `log+raw`.
    pub fn preprocess_label(&self) -> String {
        if self.log_transform {
            format!("log+{}", self.normalizer)
        } else {
            self.normalizer.to_string()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> RunConfig {
        RunConfig::new(
            DatasetSpec::Synthetic(SyntheticConfig::fet_like(4, 2, 50, 1)),
            NormalizerKind::Qol,
        )
    }

    #[test]
    fn defaults_validate_cleanly() {
        assert!(synthetic().validate().unwrap().is_empty());
    }

    #[test]
    fn hard_bounds_are_usage_errors() {
        let mut cfg = synthetic();
        cfg.eta = 1.5;
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("(0, 1]"));

        let mut cfg = synthetic();
        cfg.p = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = synthetic();
        cfg.lr = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn soft_bounds_warn() {
        let mut cfg = synthetic();
        cfg.lr = 0.5;
        cfg.p = 40;
        assert_eq!(cfg.validate().unwrap().len(), 2);
    }

    #[test]
    fn file_name_is_stable_and_config_sensitive() {
        let a = synthetic();
        let name = a.file_name();
        assert!(name.starts_with("qol_mlp_") && name.ends_with(".json"));
        assert_eq!(name.len(), "qol_mlp_".len() + 12 + ".json".len());
        assert_eq!(name, synthetic().file_name());
        let mut b = synthetic();
        b.seed += 1;
        assert_ne!(name, b.file_name());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = synthetic();
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["dataset"]["kind"], "synthetic");
        assert_eq!(json["normalizer"], "qol");
        let back: RunConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, cfg);
    }
}
