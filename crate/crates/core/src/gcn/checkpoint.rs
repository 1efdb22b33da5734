use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::batch::{GraphBatch, PreparedGraph, Preprocessor};
use super::mlp::MlpModel;
use super::model::GcnModel;
use super::{classes_from_proba, predict_proba, Architecture, GraphClassifier};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{evaluate, EvalReport, SecurityClass};
use crate::nn::{Parameter, Trainable};
use crate::scenario::LabeledGraphSample;

pub const CHECKPOINT_FORMAT: &str = "gridsec-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Either model kind, dispatching at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Gcn(GcnModel<f64>),
    Mlp(MlpModel<f64>),
}

impl AnyModel {
    pub fn new(architecture: &Architecture, seed: u64) -> Result<Self> {
        Ok(match architecture {
            Architecture::Gcn(c) => Self::Gcn(GcnModel::new(*c, seed)?),
            Architecture::Mlp(c) => Self::Mlp(MlpModel::new(c.clone(), seed)?),
        })
    }
}

impl Trainable<f64> for AnyModel {
    fn parameters(&self) -> Vec<&Parameter<f64>> {
        match self {
            Self::Gcn(m) => m.parameters(),
            Self::Mlp(m) => m.parameters(),
        }
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
        match self {
            Self::Gcn(m) => m.parameters_mut(),
            Self::Mlp(m) => m.parameters_mut(),
        }
    }
}

impl GraphClassifier<f64> for AnyModel {
    fn logits(&self, batch: &GraphBatch<f64>) -> Result<Matrix<f64>> {
        match self {
            Self::Gcn(m) => m.logits(batch),
            Self::Mlp(m) => m.logits(batch),
        }
    }

    fn loss_and_backward(&mut self, batch: &GraphBatch<f64>, labels: &[usize]) -> Result<(f64, Matrix<f64>)> {
        match self {
            Self::Gcn(m) => m.loss_and_backward(batch, labels),
            Self::Mlp(m) => m.loss_and_backward(batch, labels),
        }
    }

    fn architecture(&self) -> Architecture {
        match self {
            Self::Gcn(m) => m.architecture(),
            Self::Mlp(m) => m.architecture(),
        }
    }
}

/// A model together with the feature transform it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub model: AnyModel,
    pub preprocessor: Preprocessor,
}

impl Classifier {
    pub fn new(model: AnyModel, preprocessor: Preprocessor) -> Result<Self> {
        let want = model.architecture().input_dim();
        if want != preprocessor.output_dim() {
            return Err(Error::Architecture(format!(
                "model takes {want} features per node, preprocessor yields {}",
                preprocessor.output_dim()
            )));
        }
        Ok(Self { model, preprocessor })
    }

    pub fn prepare(&self, samples: &[&LabeledGraphSample]) -> Result<Vec<PreparedGraph<f64>>> {
        self.preprocessor.prepare_all(samples.iter().copied())
    }

    pub fn predict_proba(&self, samples: &[&LabeledGraphSample]) -> Result<Vec<[f64; 2]>> {
        predict_proba(&self.model, &self.prepare(samples)?)
    }

    pub fn predict(&self, samples: &[&LabeledGraphSample]) -> Result<Vec<SecurityClass>> {
        Ok(classes_from_proba(&self.predict_proba(samples)?))
    }

    /// Metrics with secure as the positive class.
    pub fn evaluate(&self, samples: &[&LabeledGraphSample]) -> Result<EvalReport> {
        let labels: Vec<SecurityClass> = samples.iter().map(|s| s.label).collect();
        evaluate(&self.predict(samples)?, &labels, SecurityClass::Secure)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: self.model.architecture(),
            preprocessor: self.preprocessor.clone(),
            parameters: self.model.parameters().iter().map(|p| p.value.clone()).collect(),
        }
    }

    pub fn save(&self, sink: impl Write) -> Result<()> {
        serde_json::to_writer(sink, &self.to_checkpoint())?;
        Ok(())
    }

    /// Reads a checkpoint; with `expected` set, any other architecture is
    /// rejected.
    pub fn load(source: impl Read, expected: Option<&Architecture>) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_reader(source)?;
        cp.into_classifier(expected)
    }
}

/// Serialized classifier: architecture, feature transform and every
/// parameter matrix in model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    pub preprocessor: Preprocessor,
    pub parameters: Vec<Matrix<f64>>,
}

impl Checkpoint {
    pub fn into_classifier(self, expected: Option<&Architecture>) -> Result<Classifier> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "checkpoint {} v{}, expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}",
                self.format, self.version
            )));
        }
        if let Some(want) = expected {
            if *want != self.architecture {
                return Err(Error::Architecture(format!(
                    "checkpoint holds {:?}, expected {want:?}",
                    self.architecture
                )));
            }
        }
        let mut model = AnyModel::new(&self.architecture, 0)?;
        let mut slots = model.parameters_mut();
        if slots.len() != self.parameters.len() {
            return Err(Error::Architecture(format!(
                "{} parameter tensors for an architecture with {}",
                self.parameters.len(),
                slots.len()
            )));
        }
        for (k, (slot, value)) in slots.iter_mut().zip(self.parameters).enumerate() {
            if slot.value.shape() != value.shape() || value.data().len() != value.rows() * value.cols() {
                return Err(Error::Architecture(format!(
                    "parameter {k}: shape {:?}, expected {:?}",
                    value.shape(),
                    slot.value.shape()
                )));
            }
            slot.value = value;
        }
        Classifier::new(model, self.preprocessor)
    }
}
