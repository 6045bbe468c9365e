use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qol_core::baselines::{DEFAULT_DELTA, DEFAULT_WINDOW};
use qol_core::online_net::{DEFAULT_HIDDEN, DEFAULT_LEARNING_RATE};
use qol_core::sketch::{DEFAULT_BUFFER_LEN, DEFAULT_DISCOUNT};
use qol_core::{ImputePolicy, ResultDocument, SyntheticConfig};

use crate::config::{CliError, DatasetSpec, ModelKind, NormalizerKind, RunConfig, DEFAULT_SEED};
use crate::report::ReportFormat;
use crate::sweep::Grid;

#[derive(Debug, Parser)]
#[command(name = "qol", version, about = "Streaming quantile normalization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one prequential experiment and write its result JSON
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Load the run config from a config or result JSON file instead of flags
        #[arg(long)]
        config: Option<PathBuf>,
        /// Result file to write
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Apply --log-transform even with the qol normalizer
        #[arg(long)]
        force: bool,
    },
    /// Run a grid of experiments, one result file per point
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Tabulate result files
    Report {
        /// Result files or directories containing them
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "md")]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Secom,
    Csv,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ImputeArg {
    LastObserved,
    Zero,
}

impl From<ImputeArg> for ImputePolicy {
    fn from(a: ImputeArg) -> Self {
        match a {
            ImputeArg::LastObserved => ImputePolicy::LastObserved,
            ImputeArg::Zero => ImputePolicy::Zero,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    pub dataset: DatasetKind,
    /// Directory holding secom.data and secom_labels.data
    #[arg(long)]
    pub secom_dir: Option<PathBuf>,
    #[arg(long)]
    pub secom_features: Option<PathBuf>,
    #[arg(long)]
    pub secom_labels: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,

    #[arg(long, default_value_t = 23)]
    pub n_features: usize,
    #[arg(long, default_value_t = 10)]
    pub n_classes: usize,
    #[arg(long, default_value_t = 2739)]
    pub n_samples: usize,
    /// Number of log-normal features (default: two thirds)
    #[arg(long)]
    pub log_features: Option<usize>,
    #[arg(long, default_value_t = 8.0)]
    pub orders: f64,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, value_delimiter = ',')]
    pub drift_at: Vec<usize>,
    /// Seed for the synthetic generator (default: --seed)
    #[arg(long)]
    pub data_seed: Option<u64>,

    #[arg(long, value_enum, default_value = "qol")]
    pub normalizer: NormalizerKind,
    #[arg(long)]
    pub log_transform: bool,
    #[arg(long, default_value_t = DEFAULT_BUFFER_LEN)]
    pub p: usize,
    #[arg(long, default_value_t = DEFAULT_DISCOUNT)]
    pub eta: f64,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "mlp")]
    pub model: ModelKind,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    pub hidden: usize,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Score the warm-up samples too
    #[arg(long)]
    pub include_warmup: bool,
    #[arg(long, value_enum, default_value = "last-observed")]
    pub impute: ImputeArg,
    /// Seeded shuffle of the stream before the run
    #[arg(long)]
    pub shuffle: bool,
    /// Train on this leading fraction without scoring it
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let usage = |m: &str| CliError::Usage(m.to_string());
        let secom_given =
            self.secom_dir.is_some() || self.secom_features.is_some() || self.secom_labels.is_some();
        if self.dataset != DatasetKind::Secom && secom_given {
            return Err(usage("SECOM paths given but --dataset is not secom"));
        }
        if self.dataset != DatasetKind::Csv && self.csv.is_some() {
            return Err(usage("--csv given but --dataset is not csv"));
        }
        let dataset = match self.dataset {
            DatasetKind::Secom => {
                let dir = self.secom_dir.clone();
                let features = self
                    .secom_features
                    .clone()
                    .or_else(|| dir.as_ref().map(|d| d.join("secom.data")))
                    .ok_or_else(|| usage("--dataset secom needs --secom-dir or --secom-features"))?;
                let labels = self
                    .secom_labels
                    .clone()
                    .or_else(|| dir.as_ref().map(|d| d.join("secom_labels.data")))
                    .ok_or_else(|| usage("--dataset secom needs --secom-dir or --secom-labels"))?;
                DatasetSpec::Secom { features, labels }
            }
            DatasetKind::Csv => DatasetSpec::Csv {
                path: self.csv.clone().ok_or_else(|| usage("--dataset csv needs --csv"))?,
                label_column: self.label_column.clone(),
            },
            DatasetKind::Synthetic => {
                let mut s = SyntheticConfig::fet_like(
                    self.n_features,
                    self.n_classes,
                    self.n_samples,
                    self.data_seed.unwrap_or(self.seed),
                );
                if let Some(k) = self.log_features {
                    s.log_features = k;
                }
                s.orders_of_magnitude = self.orders;
                s.class_separation = self.separation;
                s.drift_switch_points = self.drift_at.clone();
                DatasetSpec::Synthetic(s)
            }
        };
        Ok(RunConfig {
            dataset,
            normalizer: self.normalizer,
            log_transform: self.log_transform,
            p: self.p,
            eta: self.eta,
            window: self.window,
            delta: self.delta,
            model: self.model,
            hidden: self.hidden,
            lr: self.lr,
            seed: self.seed,
            include_warmup: self.include_warmup,
            impute: self.impute.into(),
            shuffle: self.shuffle,
            train_fraction: self.train_fraction,
        })
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct GridArgs {
    #[arg(long, value_enum, value_delimiter = ',')]
    pub normalizers: Vec<NormalizerKind>,
    #[arg(long, value_delimiter = ',')]
    pub lrs: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub etas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub ps: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub hiddens: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

impl From<GridArgs> for Grid {
    fn from(g: GridArgs) -> Self {
        Grid {
            normalizers: g.normalizers,
            lr: g.lrs,
            eta: g.etas,
            p: g.ps,
            window: g.windows,
            hidden: g.hiddens,
            seed: g.seeds,
        }
    }
}

/// Reads a run config from either a bare config file or a result file.
pub fn load_config_file(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)?;
    if let Ok(doc) = serde_json::from_str::<ResultDocument>(&text) {
        return Ok(serde_json::from_value(doc.config)?);
    }
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qol").chain(args.iter().copied())).unwrap()
    }

    fn run_config(args: &[&str]) -> Result<RunConfig, CliError> {
        match parse(args).command {
            Command::Run { run, .. } => run.to_config(),
            other => panic!("expected run, got {other:?}"),
        }
    }

    #[test]
    fn defaults_match_pinned_values() {
        let cfg = run_config(&["run"]).unwrap();
        assert_eq!(cfg.p, 20);
        assert_eq!(cfg.eta, 0.99);
        assert_eq!(cfg.hidden, 50);
        assert_eq!(cfg.lr, 0.01);
        assert_eq!(cfg.window, 5);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.normalizer, NormalizerKind::Qol);
        match cfg.dataset {
            DatasetSpec::Synthetic(s) => {
                assert_eq!((s.n_features, s.n_classes, s.n_samples, s.seed), (23, 10, 2739, 42))
            }
            other => panic!("unexpected dataset {other:?}"),
        }
    }

    #[test]
    fn secom_dir_expands_to_both_files() {
        let cfg = run_config(&["run", "--dataset", "secom", "--secom-dir", "/data/secom"]).unwrap();
        assert_eq!(
            cfg.dataset,
            DatasetSpec::Secom {
                features: "/data/secom/secom.data".into(),
                labels: "/data/secom/secom_labels.data".into(),
            }
        );
    }

    #[test]
    fn conflicting_sources_are_usage_errors() {
        assert!(run_config(&["run", "--csv", "x.csv"]).is_err());
        assert!(run_config(&["run", "--dataset", "csv"]).is_err());
        assert!(run_config(&["run", "--dataset", "secom"]).is_err());
        assert!(run_config(&["run", "--secom-dir", "d"]).is_err());
    }

    #[test]
    fn sweep_grid_lists() {
        match parse(&[
            "sweep",
            "--normalizers",
            "qol,raw",
            "--lrs",
            "0.01,0.001",
            "--out-dir",
            "out",
        ])
        .command
        {
            Command::Sweep { grid, .. } => {
                let grid = Grid::from(grid);
                assert_eq!(grid.normalizers, vec![NormalizerKind::Qol, NormalizerKind::Raw]);
                assert_eq!(grid.lr, vec![0.01, 0.001]);
            }
            other => panic!("expected sweep, got {other:?}"),
        }
    }
}
