//! Graph-level security classifiers: a graph convolutional network with mean
//! readout and a parameter-matched MLP baseline, plus batching, training,
//! inference and checkpoints.

mod adjacency;
mod batch;
mod checkpoint;
mod mlp;
mod model;
mod train;

pub use adjacency::{normalize_adjacency, NormalizedAdjacency};
pub use batch::{GraphBatch, PreparedGraph, Preprocessor};
pub use checkpoint::{AnyModel, Checkpoint, Classifier, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use mlp::{MlpConfig, MlpModel};
pub use model::{gcn_layer_forward, readout_mean, GcnConfig, GcnLayer, GcnModel};
pub use train::{train, EpochRecord, History, TrainConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::SecurityClass;
use crate::nn::{softmax_rows, Trainable};
use crate::scalar::Scalar;

/// Shape descriptor stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Gcn(GcnConfig),
    Mlp(MlpConfig),
}

impl Architecture {
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Gcn(c) => c.input_dim,
            Self::Mlp(c) => c.node_features,
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Self::Gcn(c) => c.parameter_count(),
            Self::Mlp(c) => c.parameter_count(),
        }
    }
}

/// A model mapping a batch of graphs to one row of class logits per graph.
pub trait GraphClassifier<T: Scalar>: Trainable<T> {
    fn logits(&self, batch: &GraphBatch<T>) -> Result<Matrix<T>>;

    /// Zeroes the gradients, then runs forward, softmax cross-entropy and
    /// backward. Returns the mean loss and the logits.
    fn loss_and_backward(&mut self, batch: &GraphBatch<T>, labels: &[usize]) -> Result<(T, Matrix<T>)>;

    fn architecture(&self) -> Architecture;
}

const INFERENCE_BATCH: usize = 256;

/// Class probabilities `[insecure, secure]` for each graph.
pub fn predict_proba<T: Scalar, M: GraphClassifier<T> + ?Sized>(
    model: &M,
    graphs: &[PreparedGraph<T>],
) -> Result<Vec<[T; 2]>> {
    let mut out = Vec::with_capacity(graphs.len());
    for chunk in graphs.chunks(INFERENCE_BATCH) {
        let refs: Vec<&PreparedGraph<T>> = chunk.iter().collect();
        let logits = model.logits(&GraphBatch::from_graphs(&refs)?)?;
        if logits.cols() != 2 {
            return Err(Error::shape("predict_proba", "model is not binary"));
        }
        if !logits.is_finite() {
            return Err(Error::Numeric("non-finite logits".into()));
        }
        let p = softmax_rows(&logits);
        out.extend(p.iter_rows().map(|r| [r[0], r[1]]));
    }
    Ok(out)
}

/// Arg-max class of each probability pair; ties go to secure.
pub fn classes_from_proba<T: Scalar>(proba: &[[T; 2]]) -> Vec<SecurityClass> {
    proba
        .iter()
        .map(|p| {
            if p[1] >= p[0] {
                SecurityClass::Secure
            } else {
                SecurityClass::Insecure
            }
        })
        .collect()
}

pub fn predict<T: Scalar, M: GraphClassifier<T> + ?Sized>(
    model: &M,
    graphs: &[PreparedGraph<T>],
) -> Result<Vec<SecurityClass>> {
    Ok(classes_from_proba(&predict_proba(model, graphs)?))
}

/// Finite-difference check of the batch loss gradient over `probes`
/// smooth coordinates.
pub fn gradcheck_classifier<T: Scalar, M: GraphClassifier<T>>(
    model: &mut M,
    batch: &GraphBatch<T>,
    labels: &[usize],
    probes: usize,
    seed: u64,
) -> Result<crate::nn::GradcheckReport<T>> {
    model.loss_and_backward(batch, labels)?;
    Ok(crate::nn::gradcheck(
        model,
        |m| {
            m.loss_and_backward(batch, labels)
                .expect("batch validated by the first pass")
                .0
        },
        probes,
        seed,
    ))
}
