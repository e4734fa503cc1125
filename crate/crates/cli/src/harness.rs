//! Single-run experiment protocol shared by the sweep and bench commands.
//!
//! One run: split a labelled dataset, fit a detector on the training part,
//! score the held-out part, and report both ranking metrics. Semi-supervised
//! AnoRand and the unsupervised baselines only see the training rows labelled
//! normal; supervised AnoRand sees every training row with its label.

use std::time::Instant;

use anorand::baselines::{KnnDetector, PcaDetector};
use anorand::data::{split, standardize, SplitSpec, SyntheticConfig};
use anorand::Dataset;
use anorand::labelgen::{build_training_set, LabelGenConfig};
use anorand::metrics::{pr_auc, roc_auc};
use anorand::model::{AnoRandModel, Mode, ModelConfig};
use anorand::Result;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TEST_FRACTION: f64 = 0.3;

/// Training hyperparameters that do not depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnoRandSettings {
    pub w: f64,
    pub sigma: f64,
    pub subset: f64,
    pub target: f64,
    pub smote_k: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for AnoRandSettings {
    fn default() -> Self {
        let model = ModelConfig::new(1);
        let labels = LabelGenConfig::default();
        Self {
            w: model.loss_weight_w,
            sigma: labels.noise_sigma,
            subset: labels.subset_fraction,
            target: labels.target_anomaly_fraction,
            smote_k: labels.smote_k,
            epochs: model.epochs,
            batch_size: model.batch_size,
            learning_rate: model.learning_rate,
        }
    }
}

impl AnoRandSettings {
    pub fn model_config(&self, input_dim: usize, mode: Mode, seed: u64) -> ModelConfig {
        let mut config = ModelConfig::new(input_dim);
        config.loss_weight_w = self.w;
        config.epochs = self.epochs;
        config.batch_size = self.batch_size;
        config.learning_rate = self.learning_rate;
        config.mode = mode;
        config.seed = seed;
        config
    }

    pub fn labelgen_config(&self, seed: u64) -> LabelGenConfig {
        LabelGenConfig {
            subset_fraction: self.subset,
            target_anomaly_fraction: self.target,
            smote_k: self.smote_k,
            noise_sigma: self.sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub roc_auc: f64,
    pub pr_auc: f64,
    /// Wall time of fitting, including synthetic label construction.
    pub fit_seconds: f64,
    pub score_seconds: f64,
}

impl RunOutcome {
    pub fn runtime_seconds(&self) -> f64 {
        self.fit_seconds + self.score_seconds
    }
}

/// A labelled train/test split of one dataset.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Original row index of every test row.
    pub test_rows: Vec<usize>,
}

impl Split {
    pub fn new(data: &Dataset, test_fraction: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            test_fraction,
            stratified: true,
            seed,
        };
        let indices = anorand::data::split_indices(data, &spec)?;
        let (train, test) = split(data, &spec)?;
        Ok(Self {
            train,
            test,
            test_rows: indices.test,
        })
    }

    /// Training rows labelled 0.
    pub fn train_normals(&self) -> Result<Dataset> {
        let labels = self.train.labels()?;
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
        Ok(self.train.select_rows(&rows))
    }

    pub fn test_labels(&self) -> Result<&[u8]> {
        self.test.labels()
    }
}

/// Fresh synthetic data for one repeat, split with the same seed.
pub fn synthetic_split(base: &SyntheticConfig, test_fraction: f64, seed: u64) -> Result<Split> {
    let config = SyntheticConfig { seed, ..base.clone() };
    let data = anorand::data::generate_synthetic(&config)?;
    Split::new(&data, test_fraction, seed)
}

fn outcome(scores: &[f64], labels: &[u8], fit_seconds: f64, score_seconds: f64) -> Result<RunOutcome> {
    Ok(RunOutcome {
        roc_auc: roc_auc(scores, labels)?,
        pr_auc: pr_auc(scores, labels)?,
        fit_seconds,
        score_seconds,
    })
}

/// Standardizes the fitting rows and the test rows with statistics of the
/// fitting rows.
fn standardized(fit_rows: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
    let (fit_rows, mut others) = standardize(fit_rows, &[test])?;
    Ok((fit_rows, others.remove(0)))
}

pub fn run_anorand(split: &Split, settings: &AnoRandSettings, seed: u64) -> Result<RunOutcome> {
    let (normals, test) = standardized(&split.train_normals()?, &split.test)?;
    let start = Instant::now();
    let training_set = build_training_set(&normals.features, &settings.labelgen_config(seed))?;
    let mut model = AnoRandModel::new(settings.model_config(normals.n_features(), Mode::SemiSupervised, seed))?;
    model.fit(&training_set)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let report = model.score(&test.features)?;
    let score_seconds = start.elapsed().as_secs_f64();
    outcome(&report.y_fused, split.test_labels()?, fit_seconds, score_seconds)
}

pub fn run_supervised(split: &Split, settings: &AnoRandSettings, seed: u64) -> Result<RunOutcome> {
    let (train, test) = standardized(&split.train, &split.test)?;
    let start = Instant::now();
    let mut model = AnoRandModel::new(settings.model_config(train.n_features(), Mode::Supervised, seed))?;
    model.fit_supervised(&train)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let report = model.score(&test.features)?;
    let score_seconds = start.elapsed().as_secs_f64();
    outcome(&report.y_fused, split.test_labels()?, fit_seconds, score_seconds)
}

pub fn run_knn(split: &Split, k: usize) -> Result<RunOutcome> {
    let (normals, test) = standardized(&split.train_normals()?, &split.test)?;
    let start = Instant::now();
    let detector = KnnDetector::fit(&normals.features, k)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let scores = detector.score(&test.features)?;
    let score_seconds = start.elapsed().as_secs_f64();
    outcome(&scores, split.test_labels()?, fit_seconds, score_seconds)
}

/// `n_components = None` keeps half the features, rounded up.
pub fn run_pca(split: &Split, n_components: Option<usize>) -> Result<RunOutcome> {
    let (normals, test) = standardized(&split.train_normals()?, &split.test)?;
    let components = n_components.unwrap_or_else(|| normals.n_features().div_ceil(2));
    let start = Instant::now();
    let detector = PcaDetector::fit(&normals.features, components)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let scores = detector.score(&test.features)?;
    let score_seconds = start.elapsed().as_secs_f64();
    outcome(&scores, split.test_labels()?, fit_seconds, score_seconds)
}

/// Scores produced elsewhere for every row of the dataset, evaluated on the
/// test rows of `split`. No timing is known.
pub fn run_external(split: &Split, all_scores: &[f64]) -> Result<RunOutcome> {
    let scores: Vec<f64> = split
        .test_rows
        .iter()
        .map(|&r| {
            all_scores.get(r).copied().ok_or_else(|| {
                anorand::Error::Validation(format!("external scores have {} rows, need row {r}", all_scores.len()))
            })
        })
        .collect::<Result<_>>()?;
    outcome(&scores, split.test_labels()?, f64::NAN, f64::NAN)
}

pub fn median(values: &[f64]) -> f64 {
    anorand::math::stats::quantile(values, 0.5).unwrap_or(f64::NAN)
}

pub fn iqr(values: &[f64]) -> f64 {
    use anorand::math::stats::quantile;
    match (quantile(values, 0.75), quantile(values, 0.25)) {
        (Some(q3), Some(q1)) => q3 - q1,
        _ => f64::NAN,
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    anorand::math::stats::mean(values)
}
