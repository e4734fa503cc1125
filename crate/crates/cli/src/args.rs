use std::path::PathBuf;

use anorand::data::SyntheticConfig;
use anorand::model::Mode;
use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::harness::{AnoRandSettings, DEFAULT_TEST_FRACTION};

#[derive(Debug, Parser)]
#[command(name = "anorand", version, about = "Anomaly detection with synthetic labels and a joint noise-detector/autoencoder network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labelled dataset as CSV.
    Generate(GenerateArgs),
    /// Train a model on a CSV dataset and write a checkpoint.
    Train(TrainArgs),
    /// Score a CSV dataset with a checkpoint.
    Score(ScoreArgs),
    /// Compute ROC-AUC and PR-AUC of a score file against labels.
    Eval(EvalArgs),
    /// Repeat train/evaluate runs over a grid of loss weights w.
    SweepW(SweepArgs),
    /// Repeat train/evaluate runs over a grid of label-noise levels sigma.
    SweepNoise(SweepArgs),
    /// Compare detectors over repeated splits of one or more datasets.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SyntheticArgs {
    /// Number of rows.
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    /// Number of features.
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    /// Fraction of rows in the anomaly class.
    #[arg(long, default_value_t = 0.05)]
    pub imbalance: f64,
    /// Half side of the hypercube whose vertices carry the cluster centers.
    #[arg(long, default_value_t = 1.0)]
    pub class_sep: f64,
    /// Fraction of labels swapped between the classes.
    #[arg(long, default_value_t = 0.01)]
    pub flip: f64,
    #[arg(long, default_value_t = 1)]
    pub clusters_per_class: usize,
    /// Features carrying the clusters (default: all).
    #[arg(long)]
    pub informative: Option<usize>,
    /// Linear combinations of the informative features.
    #[arg(long, default_value_t = 0)]
    pub redundant: usize,
}

impl SyntheticArgs {
    pub fn config(&self, seed: u64) -> anyhow::Result<SyntheticConfig> {
        ensure!(self.n >= 10, "--n must be at least 10, got {}", self.n);
        ensure!(self.dim >= 2, "--dim must be at least 2, got {}", self.dim);
        ensure!(
            self.imbalance > 0.0 && self.imbalance < 0.5,
            "--imbalance must lie in (0, 0.5), got {}",
            self.imbalance
        );
        ensure!(
            self.class_sep.is_finite() && self.class_sep >= 0.0,
            "--class-sep must be finite and nonnegative, got {}",
            self.class_sep
        );
        ensure!((0.0..=1.0).contains(&self.flip), "--flip must lie in [0, 1], got {}", self.flip);
        ensure!(self.clusters_per_class >= 1, "--clusters-per-class must be at least 1");
        let config = SyntheticConfig {
            n: self.n,
            d: self.dim,
            imbalance: self.imbalance,
            class_sep: self.class_sep,
            flip_fraction: self.flip,
            clusters_per_class: self.clusters_per_class,
            n_informative: self.informative,
            n_redundant: self.redundant,
            seed,
        };
        config.validate().context("invalid synthetic data flags")?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Weight of the noise-detector cross entropy in the joint loss.
    #[arg(long, default_value_t = 0.2)]
    pub w: f64,
    /// Std of the Gaussian noise on synthetic anomalies, in standardized units.
    #[arg(long, default_value_t = 0.6)]
    pub sigma: f64,
    /// Fraction of normal rows relabelled as synthetic anomalies.
    #[arg(long, default_value_t = 0.02)]
    pub subset: f64,
    /// Synthetic anomaly fraction after SMOTE oversampling.
    #[arg(long, default_value_t = 0.05)]
    pub target: f64,
    #[arg(long, default_value_t = 5)]
    pub smote_k: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
}

impl ModelArgs {
    pub fn settings(&self) -> anyhow::Result<AnoRandSettings> {
        ensure!((0.0..=1.0).contains(&self.w), "--w must lie in [0, 1], got {}", self.w);
        ensure!(
            self.sigma.is_finite() && self.sigma >= 0.0,
            "--sigma must be finite and nonnegative, got {}",
            self.sigma
        );
        ensure!(self.subset > 0.0 && self.subset < 1.0, "--subset must lie in (0, 1), got {}", self.subset);
        ensure!(self.target > 0.0 && self.target < 1.0, "--target must lie in (0, 1), got {}", self.target);
        ensure!(self.smote_k >= 1, "--smote-k must be at least 1");
        ensure!(self.epochs >= 1, "--epochs must be at least 1");
        ensure!(self.batch >= 1, "--batch must be at least 1");
        ensure!(self.lr.is_finite() && self.lr > 0.0, "--lr must be positive, got {}", self.lr);
        Ok(AnoRandSettings {
            w: self.w,
            sigma: self.sigma,
            subset: self.subset,
            target: self.target,
            smote_k: self.smote_k,
            epochs: self.epochs,
            batch_size: self.batch,
            learning_rate: self.lr,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: SyntheticArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    #[value(name = "semi_supervised", alias = "semi")]
    SemiSupervised,
    #[value(name = "supervised")]
    Supervised,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SemiSupervised => Mode::SemiSupervised,
            ModeArg::Supervised => Mode::Supervised,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column: dropped in semi-supervised mode, required in supervised mode.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, value_enum, default_value_t = ModeArg::SemiSupervised)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint path (JSON).
    #[arg(long)]
    pub model_out: PathBuf,
    /// Per-epoch loss CSV; defaults to the checkpoint path with `.history.csv`.
    #[arg(long)]
    pub history_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV holding at least the checkpoint's feature columns.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for scoring; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Score CSV with a `row_index` column.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "y_fused")]
    pub score_column: String,
    /// CSV holding the labels, one row per scored row (defaults to the score file).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// JSON output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed to record in the result.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: SyntheticArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated grid; defaults to 0,0.1,...,1 for w and 0.1,...,1 for sigma.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// First repeat seed; repeat i uses seed + i for data, split, labels and init.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Ignore rows already present in the output file.
    #[arg(long)]
    pub fresh: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Detector {
    AnoRand,
    Knn,
    Pca,
    External(PathBuf),
}

impl Detector {
    pub fn name(&self) -> String {
        match self {
            Detector::AnoRand => "anorand".into(),
            Detector::Knn => "knn".into(),
            Detector::Pca => "pca".into(),
            Detector::External(p) => format!(
                "external:{}",
                p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            ),
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "anorand" => Detector::AnoRand,
            "knn" => Detector::Knn,
            "pca" => Detector::Pca,
            _ => match s.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Detector::External(PathBuf::from(p)),
                _ => bail!("unknown detector `{s}` (expected anorand, knn, pca or external:<path>)"),
            },
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Labelled CSV datasets; the default synthetic dataset when none are given.
    #[arg(long = "data", num_args = 1..)]
    pub datasets: Vec<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    /// Comma-separated: anorand, knn, pca, external:<scores.csv>.
    #[arg(long, value_delimiter = ',', default_value = "anorand,knn,pca")]
    pub detectors: Vec<Detector>,
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,
    /// PCA components; half the features, rounded up, by default.
    #[arg(long)]
    pub pca_components: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    /// Per-run comparison CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Rank table CSV; defaults to the comparison path with `.ranks.csv`.
    #[arg(long)]
    pub ranks_out: Option<PathBuf>,
}
