use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CliError, NormalizerKind, RunConfig};
use crate::run::{execute, prepare, write_atomic};

/// Values to sweep. An axis left empty keeps the base config's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grid {
    pub normalizers: Vec<NormalizerKind>,
    pub lr: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: Vec<usize>,
    pub window: Vec<usize>,
    pub hidden: Vec<usize>,
    pub seed: Vec<u64>,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.normalizers.is_empty()
            && self.lr.is_empty()
            && self.eta.is_empty()
            && self.p.is_empty()
            && self.window.is_empty()
            && self.hidden.is_empty()
            && self.seed.is_empty()
    }

    /// Cartesian product over the non-empty axes, deduplicated by config
    /// digest and ordered by output file name.
    pub fn points(&self, base: &RunConfig) -> Result<Vec<RunConfig>, CliError> {
        if self.is_empty() {
            return Err(CliError::Usage("sweep grid has no axes".into()));
        }
        let mut points = BTreeMap::new();
        for normalizer in axis(&self.normalizers, base.normalizer) {
            for lr in axis(&self.lr, base.lr) {
                for eta in axis(&self.eta, base.eta) {
                    for p in axis(&self.p, base.p) {
                        for window in axis(&self.window, base.window) {
                            for hidden in axis(&self.hidden, base.hidden) {
                                for seed in axis(&self.seed, base.seed) {
                                    let cfg = RunConfig {
                                        normalizer,
                                        lr,
                                        eta,
                                        p,
                                        window,
                                        hidden,
                                        seed,
                                        ..base.clone()
                                    };
                                    points.insert(cfg.file_name(), cfg);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(points.into_values().collect())
    }
}

#[derive(Debug, Serialize)]
pub struct SweepFailure {
    pub config: RunConfig,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<SweepFailure>,
    pub warnings: Vec<String>,
}

pub const FAILURES_FILE: &str = "failures.json";

/// Runs every grid point in parallel, one result file per point. Points
/// that fail are collected into `failures.json` and the rest still run.
pub fn cmd_sweep(
    base: &RunConfig,
    grid: &Grid,
    force: bool,
    out_dir: &Path,
) -> Result<SweepOutcome, CliError> {
    let points = grid.points(base)?;
    fs::create_dir_all(out_dir)?;

    let results: Vec<_> = points
        .into_par_iter()
        .map(|cfg| {
            let attempt = prepare(cfg.clone(), force).and_then(|(prepared, warnings)| {
                let (doc, _) = execute(&prepared)?;
                let path = out_dir.join(cfg.file_name());
                write_atomic(&path, &doc)?;
                Ok((path, warnings))
            });
            (cfg, attempt)
        })
        .collect();

    let mut outcome = SweepOutcome::default();
    for (cfg, attempt) in results {
        match attempt {
            Ok((path, warnings)) => {
                outcome.written.push(path);
                outcome.warnings.extend(warnings);
            }
            Err(e) => outcome.failures.push(SweepFailure {
                config: cfg,
                error: e.to_string(),
            }),
        }
    }
    outcome.warnings.sort();
    outcome.warnings.dedup();
    if !outcome.failures.is_empty() {
        let json = serde_json::to_string_pretty(&outcome.failures)?;
        fs::write(out_dir.join(FAILURES_FILE), json)?;
    }
    Ok(outcome)
}
