use std::io::Write;
use std::path::Path;

use super::{compute_alpha, AnoRandModel, BatchLoss, Mode};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::labelgen::LabeledTrainingSet;
use crate::math::{Matrix, Rng, Stream};
use crate::scalar::Scalar;

/// Row-weighted epoch means of the batch losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub total: f64,
    pub ce_nd: f64,
    pub ce_ae: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochLoss>,
}

impl TrainingHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn first(&self) -> Option<&EpochLoss> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    /// `epoch,total,ce_nd,ce_ae,mae`, epochs counted from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "total", "ce_nd", "ce_ae", "mae"])?;
        for (i, e) in self.epochs.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                e.total.to_string(),
                e.ce_nd.to_string(),
                e.ce_ae.to_string(),
                e.mae.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

impl<T: Scalar> AnoRandModel<T> {
    /// Semi-supervised training on synthetic labels, then fixes alpha from the
    /// training-set score quartiles.
    pub fn fit(&mut self, training_set: &LabeledTrainingSet<T>) -> Result<TrainingHistory> {
        if self.config.mode != Mode::SemiSupervised {
            return Err(Error::State(format!("fit needs semi_supervised mode, model is {}", self.config.mode)));
        }
        let targets: Vec<T> = training_set.labels.iter().map(|&l| T::from(l).expect("0/1")).collect();
        let history = self.train_epochs(&training_set.features, &targets)?;
        let out = self.forward(&training_set.features)?;
        self.alpha = Some(compute_alpha(&out.y_nd, &out.y_ae)?);
        Ok(history)
    }

    /// Supervised training on true labels. Scores are the head output, so
    /// alpha is fixed at 0.
    pub fn fit_supervised(&mut self, dataset: &Dataset<T>) -> Result<TrainingHistory> {
        if self.config.mode != Mode::Supervised {
            return Err(Error::State(format!("fit_supervised needs supervised mode, model is {}", self.config.mode)));
        }
        let labels = dataset
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("supervised training needs labels"))?;
        let targets: Vec<T> = labels.iter().map(|&l| T::from(l).expect("0/1")).collect();
        let history = self.train_epochs(&dataset.features, &targets)?;
        self.alpha = Some(T::zero());
        Ok(history)
    }

    /// Mini-batch Adam for the configured number of epochs over a fresh
    /// permutation each epoch. The last batch of an epoch may be short.
    fn train_epochs(&mut self, features: &Matrix<T>, targets: &[T]) -> Result<TrainingHistory> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::invalid("empty training set"));
        }
        if features.cols() != self.config.input_dim {
            return Err(Error::dims("training features", self.config.input_dim, features.cols()));
        }
        let mut rng = Rng::stream(self.config.seed, Stream::Shuffle);
        let batch_size = self.config.batch_size;
        let mut history = TrainingHistory {
            epochs: Vec::with_capacity(self.config.epochs),
        };
        let mut batch_targets = Vec::with_capacity(batch_size);
        for _ in 0..self.config.epochs {
            let order = rng.permutation(n);
            let mut acc = [0.0f64; 4];
            for chunk in order.chunks(batch_size) {
                let batch = features.select_rows(chunk);
                batch_targets.clear();
                batch_targets.extend(chunk.iter().map(|&i| targets[i]));
                let (loss, grads) = self.loss_and_gradients(&batch, &batch_targets)?;
                self.apply_gradients(&grads)?;
                let BatchLoss { total, ce_nd, ce_ae, mae } = loss;
                let rows = chunk.len() as f64;
                for (a, v) in acc.iter_mut().zip([total, ce_nd, ce_ae, mae]) {
                    *a += v.to_f64_lossy() * rows;
                }
            }
            let [total, ce_nd, ce_ae, mae] = acc.map(|a| a / n as f64);
            if !total.is_finite() {
                return Err(Error::State(format!("training diverged: epoch loss {total}")));
            }
            history.epochs.push(EpochLoss { total, ce_nd, ce_ae, mae });
        }
        Ok(history)
    }
}
