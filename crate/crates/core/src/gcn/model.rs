use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adjacency::NormalizedAdjacency;
use super::batch::GraphBatch;
use super::{Architecture, GraphClassifier};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{glorot_uniform, relu, relu_backward, softmax_cross_entropy, Dense, Parameter, Trainable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub classes: usize,
    pub bias: bool,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self {
            input_dim: 7,
            hidden_dim: 32,
            layers: 6,
            classes: 2,
            bias: true,
        }
    }
}

impl GcnConfig {
    pub fn with_input_dim(self, input_dim: usize) -> Self {
        Self { input_dim, ..self }
    }

    pub fn parameter_count(&self) -> usize {
        let b = usize::from(self.bias);
        let first = (self.input_dim + b) * self.hidden_dim;
        let rest = (self.layers - 1) * (self.hidden_dim + b) * self.hidden_dim;
        first + rest + (self.hidden_dim + 1) * self.classes
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.layers == 0 || self.classes < 2 {
            return Err(Error::InvalidArgument(format!("invalid GCN shape {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer<T> {
    pub w: Parameter<T>,
    pub b: Option<Parameter<T>>,
}

/// `relu(Â h W + b)`.
pub fn gcn_layer_forward<T: Scalar>(
    a_hat: &NormalizedAdjacency<T>,
    h: &Matrix<T>,
    w: &Parameter<T>,
    b: Option<&Parameter<T>>,
) -> Result<Matrix<T>> {
    Ok(relu(&propagate(a_hat, h, w, b)?.1))
}

/// Returns `(Â h, Â h W + b)`.
fn propagate<T: Scalar>(
    a_hat: &NormalizedAdjacency<T>,
    h: &Matrix<T>,
    w: &Parameter<T>,
    b: Option<&Parameter<T>>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let ah = a_hat.apply(h)?;
    let mut z = ah.matmul(&w.value)?;
    if let Some(b) = b {
        z.add_row_broadcast(&b.value)?;
    }
    Ok((ah, z))
}

/// Mean of each graph's rows; one output row per graph.
pub fn readout_mean<T: Scalar>(h: &Matrix<T>, offsets: &[usize]) -> Result<Matrix<T>> {
    if offsets.len() < 2 || *offsets.last().unwrap() != h.rows() {
        return Err(Error::shape("readout_mean", "offsets do not cover the rows"));
    }
    let d = h.cols();
    let mut out = Matrix::zeros(offsets.len() - 1, d);
    for g in 0..offsets.len() - 1 {
        let (lo, hi) = (offsets[g], offsets[g + 1]);
        if hi <= lo {
            return Err(Error::InvalidArgument("graph without nodes".into()));
        }
        let row = out.row_mut(g);
        for i in lo..hi {
            for (o, &v) in row.iter_mut().zip(h.row(i)) {
                *o += v;
            }
        }
        let inv = T::one() / T::from_usize_lossy(hi - lo);
        row.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

fn readout_mean_backward<T: Scalar>(upstream: &Matrix<T>, offsets: &[usize]) -> Matrix<T> {
    let n = *offsets.last().unwrap();
    let mut out = Matrix::zeros(n, upstream.cols());
    for g in 0..offsets.len() - 1 {
        let (lo, hi) = (offsets[g], offsets[g + 1]);
        let inv = T::one() / T::from_usize_lossy(hi - lo);
        for i in lo..hi {
            for (o, &u) in out.row_mut(i).iter_mut().zip(upstream.row(g)) {
                *o = u * inv;
            }
        }
    }
    out
}

/// Stacked graph convolutions, mean readout and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel<T> {
    config: GcnConfig,
    pub layers: Vec<GcnLayer<T>>,
    pub head: Dense<T>,
}

struct Cache<T> {
    propagated: Vec<Matrix<T>>,
    pre_activation: Vec<Matrix<T>>,
    pooled: Matrix<T>,
}

impl<T: Scalar> GcnModel<T> {
    /// Glorot-uniform weights from `seed`, zero biases.
    pub fn new(config: GcnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let d_in = if l == 0 { config.input_dim } else { config.hidden_dim };
            layers.push(GcnLayer {
                w: Parameter::new(glorot_uniform(d_in, config.hidden_dim, &mut rng)),
                b: config.bias.then(|| Parameter::zeros(1, config.hidden_dim)),
            });
        }
        let head = Dense::glorot(config.hidden_dim, config.classes, &mut rng);
        log::debug!("GCN with {} parameters", config.parameter_count());
        Ok(Self { config, layers, head })
    }

    /// Every weight zero; predicts the uniform distribution.
    pub fn zeros(config: GcnConfig) -> Result<Self> {
        let mut m = Self::new(config, 0)?;
        for p in m.parameters_mut() {
            p.value.fill(T::zero());
        }
        Ok(m)
    }

    pub fn config(&self) -> &GcnConfig {
        &self.config
    }

    /// Node embeddings after all convolution layers.
    pub fn embed(&self, adj: &NormalizedAdjacency<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = gcn_layer_forward(adj, &h, &layer.w, layer.b.as_ref())?;
        }
        Ok(h)
    }

    fn forward_cached(&self, batch: &GraphBatch<T>) -> Result<(Matrix<T>, Cache<T>)> {
        self.check_input(batch)?;
        let mut propagated = Vec::with_capacity(self.layers.len());
        let mut pre_activation = Vec::with_capacity(self.layers.len());
        let mut h = batch.x.clone();
        for layer in &self.layers {
            let (ah, z) = propagate(&batch.adj, &h, &layer.w, layer.b.as_ref())?;
            h = relu(&z);
            propagated.push(ah);
            pre_activation.push(z);
        }
        let pooled = readout_mean(&h, &batch.offsets)?;
        let logits = self.head.forward(&pooled)?;
        Ok((
            logits,
            Cache {
                propagated,
                pre_activation,
                pooled,
            },
        ))
    }

    fn backward(&mut self, batch: &GraphBatch<T>, cache: Cache<T>, d_logits: &Matrix<T>) -> Result<()> {
        let d_pooled = self.head.backward(&cache.pooled, d_logits)?;
        let mut d_h = readout_mean_backward(&d_pooled, &batch.offsets);
        for (l, layer) in self.layers.iter_mut().enumerate().rev() {
            let d_z = relu_backward(&cache.pre_activation[l], &d_h)?;
            layer.w.grad.add_assign(&cache.propagated[l].matmul_tn(&d_z)?)?;
            if let Some(b) = layer.b.as_mut() {
                b.grad.add_assign(&d_z.column_sums())?;
            }
            if l > 0 {
                d_h = batch.adj.apply(&d_z.matmul_nt(&layer.w.value)?)?;
            }
        }
        Ok(())
    }

    fn check_input(&self, batch: &GraphBatch<T>) -> Result<()> {
        if batch.x.cols() != self.config.input_dim {
            return Err(Error::shape(
                "gcn input",
                format!(
                    "{} feature columns, model expects {}",
                    batch.x.cols(),
                    self.config.input_dim
                ),
            ));
        }
        if !batch.x.is_finite() {
            return Err(Error::Numeric("NaN or Inf in node features".into()));
        }
        Ok(())
    }
}

impl<T: Scalar> Trainable<T> for GcnModel<T> {
    fn parameters(&self) -> Vec<&Parameter<T>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.w);
            if let Some(b) = &l.b {
                out.push(b);
            }
        }
        out.push(&self.head.w);
        out.push(&self.head.b);
        out
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.w);
            if let Some(b) = &mut l.b {
                out.push(b);
            }
        }
        out.push(&mut self.head.w);
        out.push(&mut self.head.b);
        out
    }
}

impl<T: Scalar> GraphClassifier<T> for GcnModel<T> {
    fn logits(&self, batch: &GraphBatch<T>) -> Result<Matrix<T>> {
        Ok(self.forward_cached(batch)?.0)
    }

    fn loss_and_backward(&mut self, batch: &GraphBatch<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
        self.zero_grad();
        let (logits, cache) = self.forward_cached(batch)?;
        let (loss, d_logits) = softmax_cross_entropy(&logits, labels)?;
        self.backward(batch, cache, &d_logits)?;
        Ok((loss, logits))
    }

    fn architecture(&self) -> Architecture {
        Architecture::Gcn(self.config)
    }
}
