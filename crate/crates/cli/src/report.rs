use std::fs;
use std::path::{Path, PathBuf};

use qol_core::ResultDocument;

use crate::config::{CliError, ModelKind, RunConfig};
use crate::sweep::FAILURES_FILE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Md,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub preprocess: String,
    pub model: ModelKind,
    pub overall: f64,
    pub balanced: f64,
    pub source: PathBuf,
}

/// Accuracy as a percentage with two decimals.
pub fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension().is_some_and(|e| e == "json")
                        && p.file_name().is_some_and(|n| n != FAILURES_FILE)
                })
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn read_row(path: &Path) -> Result<ReportRow, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let doc: ResultDocument = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let cfg: RunConfig = serde_json::from_value(doc.config).map_err(|e| e.to_string())?;
    Ok(ReportRow {
        dataset: cfg.dataset.label(),
        preprocess: cfg.preprocess_label(),
        model: cfg.model,
        overall: doc.metrics.overall,
        balanced: doc.metrics.balanced,
        source: path.to_path_buf(),
    })
}

/// Loads every readable result; unreadable files come back as warnings.
pub fn collect_rows(inputs: &[PathBuf]) -> Result<(Vec<ReportRow>, Vec<String>), CliError> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for path in expand(inputs)? {
        match read_row(&path) {
            Ok(row) => rows.push(row),
            Err(e) => warnings.push(format!("skipping {}: {e}", path.display())),
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data("no valid result files".into()));
    }
    rows.sort_by(|a, b| {
        (&a.dataset, &a.preprocess, &a.source).cmp(&(&b.dataset, &b.preprocess, &b.source))
    });
    Ok((rows, warnings))
}

const MODELS: [ModelKind; 1] = [ModelKind::Mlp];

/// One row per result; one `overall/balanced` column per model.
pub fn render(rows: &[ReportRow], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Md => {
            out.push_str("| Dataset | Preprocess |");
            for m in MODELS {
                out.push_str(&format!(" {} |", m.name().to_uppercase()));
            }
            out.push_str("\n|---|---|");
            for _ in MODELS {
                out.push_str("---|");
            }
            out.push('\n');
            for r in rows {
                out.push_str(&format!("| {} | {} |", r.dataset, r.preprocess));
                for m in MODELS {
                    if r.model == m {
                        out.push_str(&format!(" {}/{} |", percent(r.overall), percent(r.balanced)));
                    } else {
                        out.push_str(" |");
                    }
                }
                out.push('\n');
            }
        }
        ReportFormat::Csv => {
            out.push_str("dataset,preprocess,model,overall,balanced\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.dataset,
                    r.preprocess,
                    r.model.name(),
                    percent(r.overall),
                    percent(r.balanced)
                ));
            }
        }
    }
    out
}

pub fn cmd_report(
    inputs: &[PathBuf],
    format: ReportFormat,
) -> Result<(String, Vec<String>), CliError> {
    let (rows, warnings) = collect_rows(inputs)?;
    Ok((render(&rows, format), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DatasetSpec, NormalizerKind};
    use crate::run::write_atomic;
    use qol_core::eval::Metrics;
    use qol_core::SyntheticConfig;

    fn write(dir: &Path, normalizer: NormalizerKind, overall: f64, balanced: f64) -> PathBuf {
        let mut cfg = RunConfig::new(
            DatasetSpec::Synthetic(SyntheticConfig::fet_like(3, 2, 10, 0)),
            normalizer,
        );
        cfg.seed = (overall * 1e4) as u64;
        let doc = ResultDocument {
            config: serde_json::to_value(&cfg).unwrap(),
            metrics: Metrics { overall, balanced },
            confusion: vec![vec![1, 0], vec![0, 1]],
            n_evaluated: 2,
            wall_time_ms: 1.0,
        };
        let path = dir.join(cfg.file_name());
        write_atomic(&path, &doc).unwrap();
        path
    }

    #[test]
    fn markdown_has_one_row_per_result() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), NormalizerKind::Qol, 0.9244, 0.5165);
        write(dir.path(), NormalizerKind::Raw, 0.9253, 0.5134);
        write(dir.path(), NormalizerKind::SlidingZscore, 0.9072, 0.5287);
        write(dir.path(), NormalizerKind::SlidingMinmax, 0.5, 0.5);
        let (table, warnings) = cmd_report(&[dir.path().to_path_buf()], ReportFormat::Md).unwrap();
        assert!(warnings.is_empty());
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2 + 4);
        assert!(table.contains("| synthetic | qol | 92.44/51.65 |"));
    }

    #[test]
    fn csv_uses_two_decimal_percentages() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), NormalizerKind::Qol, 0.92437, 0.516549);
        let (table, _) = cmd_report(&[path], ReportFormat::Csv).unwrap();
        assert_eq!(
            table,
            "dataset,preprocess,model,overall,balanced\nsynthetic,qol,mlp,92.44,51.65\n"
        );
    }

    #[test]
    fn corrupt_files_are_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), NormalizerKind::Qol, 0.9, 0.6);
        fs::write(dir.path().join("broken.json"), "{not json").unwrap();
        let (table, warnings) = cmd_report(&[dir.path().to_path_buf()], ReportFormat::Md).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("broken.json"));
        assert_eq!(table.lines().count(), 3);
    }

    #[test]
    fn no_valid_inputs_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("broken.json"), "[]").unwrap();
        assert!(cmd_report(&[dir.path().to_path_buf()], ReportFormat::Csv).is_err());
    }
}
