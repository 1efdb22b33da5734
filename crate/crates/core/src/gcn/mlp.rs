use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::GraphBatch;
use super::{Architecture, GraphClassifier};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{relu, relu_backward, softmax_cross_entropy, Dense, Parameter, Trainable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub nodes: usize,
    pub node_features: usize,
    /// Widths of the hidden layers; the network has `widths.len() + 1` dense
    /// layers.
    pub widths: Vec<usize>,
    pub classes: usize,
}

impl MlpConfig {
    pub fn input_dim(&self) -> usize {
        self.nodes * self.node_features
    }

    fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(&self.widths);
        d.push(self.classes);
        d
    }

    pub fn parameter_count(&self) -> usize {
        self.dims().windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Four dense layers `in → h1 → h2 → h2 → classes` whose parameter count
    /// is as close as possible to `target`.
    pub fn matched(nodes: usize, node_features: usize, classes: usize, target: usize) -> Self {
        let mut best: Option<(usize, usize, Self)> = None;
        for h1 in 1..=256 {
            for h2 in 1..=256 {
                let c = Self {
                    nodes,
                    node_features,
                    widths: vec![h1, h2, h2],
                    classes,
                };
                let diff = c.parameter_count().abs_diff(target);
                let balance = h1.abs_diff(h2);
                let better = match &best {
                    None => true,
                    Some((d, b, _)) => diff < *d || (diff == *d && balance < *b),
                };
                if better {
                    best = Some((diff, balance, c));
                }
            }
        }
        best.unwrap().2
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 || self.widths.contains(&0) || self.classes < 2 {
            return Err(Error::InvalidArgument(format!("invalid MLP shape {self:?}")));
        }
        Ok(())
    }
}

/// Dense network over the row-major flattening of a fixed-size graph's
/// node features.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    config: MlpConfig,
    pub layers: Vec<Dense<T>>,
}

struct Cache<T> {
    inputs: Vec<Matrix<T>>,
    pre_activation: Vec<Matrix<T>>,
}

impl<T: Scalar> MlpModel<T> {
    pub fn new(config: MlpConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .dims()
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], &mut rng))
            .collect();
        log::debug!("MLP with {} parameters", config.parameter_count());
        Ok(Self { config, layers })
    }

    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let layers = config.dims().windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    fn flatten(&self, batch: &GraphBatch<T>) -> Result<Matrix<T>> {
        let (n, d) = (self.config.nodes, self.config.node_features);
        if batch.x.cols() != d {
            return Err(Error::shape(
                "mlp input",
                format!("{} feature columns, model expects {d}", batch.x.cols()),
            ));
        }
        if let Some(w) = batch.offsets.windows(2).find(|w| w[1] - w[0] != n) {
            return Err(Error::shape(
                "mlp input",
                format!("graph with {} nodes, model expects {n}", w[1] - w[0]),
            ));
        }
        if !batch.x.is_finite() {
            return Err(Error::Numeric("NaN or Inf in node features".into()));
        }
        Matrix::new(batch.graph_count(), n * d, batch.x.data().to_vec())
    }

    fn forward_cached(&self, batch: &GraphBatch<T>) -> Result<(Matrix<T>, Cache<T>)> {
        let mut h = self.flatten(batch)?;
        let mut cache = Cache {
            inputs: Vec::new(),
            pre_activation: Vec::new(),
        };
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h)?;
            cache.inputs.push(h);
            h = if l < last { relu(&z) } else { z.clone() };
            cache.pre_activation.push(z);
        }
        Ok((h, cache))
    }
}

impl<T: Scalar> Trainable<T> for MlpModel<T> {
    fn parameters(&self) -> Vec<&Parameter<T>> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }
}

impl<T: Scalar> GraphClassifier<T> for MlpModel<T> {
    fn logits(&self, batch: &GraphBatch<T>) -> Result<Matrix<T>> {
        Ok(self.forward_cached(batch)?.0)
    }

    fn loss_and_backward(&mut self, batch: &GraphBatch<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
        self.zero_grad();
        let (logits, cache) = self.forward_cached(batch)?;
        let (loss, mut d) = softmax_cross_entropy(&logits, labels)?;
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            if l < last {
                d = relu_backward(&cache.pre_activation[l], &d)?;
            }
            d = self.layers[l].backward(&cache.inputs[l], &d)?;
        }
        Ok((loss, logits))
    }

    fn architecture(&self) -> Architecture {
        Architecture::Mlp(self.config.clone())
    }
}
