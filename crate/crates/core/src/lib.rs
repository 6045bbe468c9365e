//! Single-pass quantile normalization for streaming classification.
//!
//! Raw feature values are replaced by approximate quantile ranks read from a
//! small per-feature buffer of weighted cluster centres, which is updated in
//! place as the stream goes by. The crate also carries the pieces needed to
//! evaluate that normalizer end to end: a two-layer online classifier,
//! windowed baseline normalizers, a prequential runner and dataset loaders.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod online_net;
pub mod sketch;

pub use baselines::{SlidingWindowNormalizer, WindowMode};
pub use data::{ImputePolicy, LabeledSample, SampleStream, SyntheticConfig};
pub use error::{QolError, Result};
pub use eval::{
    run_prequential, ConfusionMatrix, EvalConfig, OnlineClassifier, PrequentialResult,
    ResultDocument, StreamNormalizer,
};
pub use online_net::MlpClassifier;
pub use sketch::{FeatureSketch, QuantileNormalizer, UpdateTrace};
