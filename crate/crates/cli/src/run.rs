use std::fs;
use std::path::Path;

use qol_core::data::{self, gen_synthetic, impute, load_csv, load_secom};
use qol_core::eval::{LogTransformed, Passthrough};
use qol_core::{
    run_prequential, EvalConfig, MlpClassifier, PrequentialResult, QuantileNormalizer,
    ResultDocument, SampleStream, SlidingWindowNormalizer, StreamNormalizer, WindowMode,
};

use crate::config::{CliError, DatasetSpec, ModelKind, NormalizerKind, RunConfig};

pub const LOG_WITH_QOL_WARNING: &str =
    "the log transform is intended for the baseline normalizers and is not applied to qol; \
     pass --force to apply it anyway";

/// Validates `cfg` and settles the log-transform rule: with the quantile
/// normalizer the transform is dropped unless `force` is set. Returns the
/// config that will actually run plus any warnings.
pub fn prepare(mut cfg: RunConfig, force: bool) -> Result<(RunConfig, Vec<String>), CliError> {
    let mut warnings = cfg.validate()?;
    if cfg.normalizer == NormalizerKind::Qol && cfg.log_transform && !force {
        warnings.push(LOG_WITH_QOL_WARNING.to_string());
        cfg.log_transform = false;
    }
    Ok((cfg, warnings))
}

pub fn load_stream(cfg: &RunConfig) -> Result<(SampleStream, usize), CliError> {
    let (stream, classes) = match &cfg.dataset {
        DatasetSpec::Secom { features, labels } => (load_secom(features, labels, cfg.impute)?, 2),
        DatasetSpec::Csv { path, label_column } => {
            let stream = impute(load_csv(path, label_column)?, cfg.impute);
            let classes = stream.iter().map(|s| s.label + 1).max().unwrap_or(0);
            (stream, classes)
        }
        DatasetSpec::Synthetic(s) => (gen_synthetic(s)?, s.n_classes),
    };
    if stream.is_empty() {
        return Err(CliError::Data("dataset is empty".into()));
    }
    let stream = if cfg.shuffle {
        data::shuffle(stream, cfg.seed)
    } else {
        stream
    };
    Ok((stream, classes))
}

fn build_normalizer(cfg: &RunConfig, n: usize) -> Result<Box<dyn StreamNormalizer>, CliError> {
    let inner: Box<dyn StreamNormalizer> = match cfg.normalizer {
        NormalizerKind::Qol => Box::new(QuantileNormalizer::new(cfg.p, cfg.eta, n)?),
        NormalizerKind::SlidingZscore => Box::new(SlidingWindowNormalizer::new(
            cfg.window,
            WindowMode::ZScore,
            cfg.delta,
            n,
        )?),
        NormalizerKind::SlidingMinmax => Box::new(SlidingWindowNormalizer::new(
            cfg.window,
            WindowMode::MinMax,
            cfg.delta,
            n,
        )?),
        NormalizerKind::Raw => Box::new(Passthrough::new(n)),
    };
    Ok(if cfg.log_transform {
        Box::new(LogTransformed(inner))
    } else {
        inner
    })
}

/// Runs the prequential protocol for an already prepared config.
pub fn execute(cfg: &RunConfig) -> Result<(ResultDocument, PrequentialResult), CliError> {
    let (stream, classes) = load_stream(cfg)?;
    let n = stream[0].features.len();
    let mut normalizer = build_normalizer(cfg, n)?;
    let mut model = match cfg.model {
        ModelKind::Mlp => MlpClassifier::new(n, cfg.hidden, classes, cfg.lr, cfg.seed)?,
    };
    let eval = EvalConfig {
        n_classes: classes,
        include_warmup: cfg.include_warmup,
        score_from: cfg
            .train_fraction
            .map_or(0, |f| (f * stream.len() as f64).floor() as usize),
    };
    let result = run_prequential(&stream, &mut normalizer, &mut model, &eval)?;
    let doc = result.to_document(serde_json::to_value(cfg)?);
    Ok((doc, result))
}

/// Writes `doc` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, doc: &ResultDocument) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer_pretty(&mut tmp, doc)?;
    tmp.persist(path).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

pub fn summary_line(doc: &ResultDocument) -> String {
    format!(
        "overall={:.4} balanced={:.4}",
        doc.metrics.overall, doc.metrics.balanced
    )
}

/// Prepare, execute, and optionally persist one run.
pub fn cmd_run(
    cfg: RunConfig,
    force: bool,
    output: Option<&Path>,
) -> Result<(ResultDocument, Vec<String>), CliError> {
    let (cfg, warnings) = prepare(cfg, force)?;
    let (doc, _) = execute(&cfg)?;
    if let Some(path) = output {
        write_atomic(path, &doc)?;
    }
    Ok((doc, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qol_core::SyntheticConfig;

    fn small(normalizer: NormalizerKind) -> RunConfig {
        RunConfig::new(
            DatasetSpec::Synthetic(SyntheticConfig::fet_like(5, 3, 200, 2)),
            normalizer,
        )
    }

    #[test]
    fn log_transform_with_qol_needs_force() {
        let mut cfg = small(NormalizerKind::Qol);
        cfg.log_transform = true;
        let (prepared, warnings) = prepare(cfg.clone(), false).unwrap();
        assert!(!prepared.log_transform);
        assert!(warnings.iter().any(|w| w.contains("--force")));

        let (prepared, warnings) = prepare(cfg, true).unwrap();
        assert!(prepared.log_transform);
        assert!(warnings.is_empty());

        let mut cfg = small(NormalizerKind::Raw);
        cfg.log_transform = true;
        let (prepared, warnings) = prepare(cfg, false).unwrap();
        assert!(prepared.log_transform);
        assert!(warnings.is_empty());
    }

    #[test]
    fn every_normalizer_runs() {
        for kind in [
            NormalizerKind::Qol,
            NormalizerKind::SlidingZscore,
            NormalizerKind::SlidingMinmax,
            NormalizerKind::Raw,
        ] {
            let (doc, result) = execute(&small(kind)).unwrap();
            let expected = if kind == NormalizerKind::Qol { 180 } else { 200 };
            assert_eq!(result.samples_evaluated, expected, "{kind}");
            assert_eq!(doc.config["normalizer"], kind.name());
        }
    }

    #[test]
    fn train_fraction_limits_scoring() {
        let mut cfg = small(NormalizerKind::Raw);
        cfg.train_fraction = Some(0.75);
        let (_, result) = execute(&cfg).unwrap();
        assert_eq!(result.samples_evaluated, 50);
    }

    #[test]
    fn output_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.json");
        let (doc, _) = cmd_run(small(NormalizerKind::Qol), false, Some(&path)).unwrap();
        let back: ResultDocument =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, doc);
        assert!(summary_line(&doc).starts_with("overall="));
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn missing_data_is_a_data_error() {
        let cfg = RunConfig::new(
            DatasetSpec::Secom {
                features: "/nonexistent/secom.data".into(),
                labels: "/nonexistent/secom_labels.data".into(),
            },
            NormalizerKind::Qol,
        );
        assert_eq!(cmd_run(cfg, false, None).unwrap_err().exit_code(), 2);
    }
}
