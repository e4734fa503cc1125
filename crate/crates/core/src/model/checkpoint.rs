//! JSON checkpoint: config, every parameter tensor, alpha and the
//! standardization fitted on the training data.
//!
//! Numbers are written in shortest round-trip form and parsed exactly, so a
//! reloaded model scores bit-identically. Optimizer moments are not stored;
//! a reloaded model starts a fresh Adam state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnoRandModel, ModelConfig};
use crate::data::Standardization;
use crate::error::{Error, Result};
use crate::math::{Activation, DenseLayer, Matrix};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "anorand-checkpoint";
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Scalar> {
    pub model: AnoRandModel<T>,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization<T>>,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    fan_in: usize,
    fan_out: usize,
    activation: Activation,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Layers {
    ffp: Vec<LayerRecord>,
    head: LayerRecord,
    encoder: Vec<LayerRecord>,
    fusion: LayerRecord,
    decoder: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
struct StandardizationRecord {
    means: Vec<f64>,
    stds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    format: String,
    schema_version: u32,
    scalar: String,
    config: ModelConfig,
    alpha: Option<f64>,
    feature_names: Vec<String>,
    standardization: Option<StandardizationRecord>,
    layers: Layers,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn from_f64<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

impl LayerRecord {
    fn from_layer<T: Scalar>(l: &DenseLayer<T>) -> Self {
        Self {
            fan_in: l.fan_in(),
            fan_out: l.fan_out(),
            activation: l.activation(),
            weight: to_f64(l.weight().as_slice()),
            bias: to_f64(l.bias()),
        }
    }

    fn into_layer<T: Scalar>(self) -> Result<DenseLayer<T>> {
        let weight = Matrix::from_vec(self.fan_in, self.fan_out, from_f64(&self.weight))
            .map_err(|e| Error::Checkpoint(format!("layer weight: {e}")))?;
        DenseLayer::new(weight, from_f64(&self.bias), self.activation)
    }
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_json(&self) -> Result<String> {
        let (ffp, head, encoder, fusion, decoder) = self.model.parts();
        let record = Record {
            format: CHECKPOINT_FORMAT.into(),
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            scalar: T::NAME.into(),
            config: self.model.config().clone(),
            alpha: self.model.alpha().map(|a| a.to_f64_lossy()),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.as_ref().map(|s| StandardizationRecord {
                means: to_f64(&s.means),
                stds: to_f64(&s.stds),
            }),
            layers: Layers {
                ffp: ffp.iter().map(LayerRecord::from_layer).collect(),
                head: LayerRecord::from_layer(head),
                encoder: encoder.iter().map(LayerRecord::from_layer).collect(),
                fusion: LayerRecord::from_layer(fusion),
                decoder: decoder.iter().map(LayerRecord::from_layer).collect(),
            },
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: Record = serde_json::from_str(text)?;
        if record.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", record.format)));
        }
        if record.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Checkpoint(format!(
                "schema version {} not supported (expected {CHECKPOINT_SCHEMA_VERSION})",
                record.schema_version
            )));
        }
        let layers = |v: Vec<LayerRecord>| v.into_iter().map(LayerRecord::into_layer).collect::<Result<Vec<_>>>();
        let Layers {
            ffp,
            head,
            encoder,
            fusion,
            decoder,
        } = record.layers;
        let model = AnoRandModel::from_parts(
            record.config,
            layers(ffp)?,
            head.into_layer()?,
            layers(encoder)?,
            fusion.into_layer()?,
            layers(decoder)?,
            record.alpha.map(T::lit),
        )?;
        if record.feature_names.len() != model.config().input_dim {
            return Err(Error::Checkpoint(format!(
                "{} feature names for input dimension {}",
                record.feature_names.len(),
                model.config().input_dim
            )));
        }
        let standardization = record
            .standardization
            .map(|s| {
                if s.means.len() != model.config().input_dim || s.stds.len() != model.config().input_dim {
                    return Err(Error::Checkpoint("standardization width does not match input dimension".into()));
                }
                Ok(Standardization {
                    means: from_f64(&s.means),
                    stds: from_f64(&s.stds),
                })
            })
            .transpose()?;
        Ok(Self {
            model,
            feature_names: record.feature_names,
            standardization,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Standardizes raw features with the stored statistics, then scores.
    pub fn score_raw(&self, raw: &Matrix<T>) -> Result<super::ScoreReport<T>> {
        match &self.standardization {
            Some(s) => self.model.score(&s.apply(raw)?),
            None => self.model.score(raw),
        }
    }
}
