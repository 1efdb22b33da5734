use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::{GraphBatch, PreparedGraph};
use super::{classes_from_proba, GraphClassifier};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{evaluate, SecurityClass};
use crate::nn::{adam_step, softmax_cross_entropy, softmax_rows, AdamState, LrSchedule, Parameter};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub lr_floor: f64,
    pub lr_decay: f64,
    pub lr_patience: usize,
    /// Restore the parameters of the epoch with the lowest validation loss.
    pub restore_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 128,
            seed: 0,
            learning_rate: 1e-3,
            lr_floor: 1e-5,
            lr_decay: 0.5,
            lr_patience: 10,
            restore_best: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_f1: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters the model holds after training.
    pub selected_epoch: Option<usize>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,lr,train_loss,val_loss,train_f1,val_f1";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.epoch, r.lr, r.train_loss, r.val_loss, r.train_f1, r.val_f1
            );
        }
        s
    }
}

fn f1_of(pred: &[SecurityClass], labels: &[SecurityClass]) -> f64 {
    if labels.is_empty() {
        return f64::NAN;
    }
    evaluate(pred, labels, SecurityClass::Secure)
        .map(|r| r.f1)
        .unwrap_or(0.0)
}

/// Mean loss and predicted classes over `graphs`, without gradients.
fn assess<T: Scalar, M: GraphClassifier<T>>(
    model: &M,
    graphs: &[PreparedGraph<T>],
    batch: usize,
) -> Result<(f64, Vec<SecurityClass>)> {
    let mut loss = 0.0;
    let mut pred = Vec::with_capacity(graphs.len());
    for chunk in graphs.chunks(batch.max(1)) {
        let refs: Vec<&PreparedGraph<T>> = chunk.iter().collect();
        let logits = model.logits(&GraphBatch::from_graphs(&refs)?)?;
        let labels: Vec<usize> = chunk.iter().map(|g| g.label.index()).collect();
        let (l, _) = softmax_cross_entropy(&logits, &labels)?;
        loss += l.to_f64_lossy() * chunk.len() as f64;
        pred.extend(classes_of(&logits));
    }
    Ok((loss / graphs.len().max(1) as f64, pred))
}

fn classes_of<T: Scalar>(logits: &Matrix<T>) -> Vec<SecurityClass> {
    let p = softmax_rows(logits);
    let pairs: Vec<[T; 2]> = p.iter_rows().map(|r| [r[0], r[1]]).collect();
    classes_from_proba(&pairs)
}

fn snapshot<T: Scalar, M: GraphClassifier<T>>(model: &M) -> Vec<Matrix<T>> {
    model.parameters().iter().map(|p| p.value.clone()).collect()
}

fn restore<T: Scalar, M: GraphClassifier<T>>(model: &mut M, values: Vec<Matrix<T>>) {
    for (p, v) in model.parameters_mut().into_iter().zip(values) {
        p.value = v;
    }
}

/// Minimizes softmax cross-entropy over `train_set` with Adam in shuffled
/// mini-batches. The learning rate follows a reduce-on-plateau schedule on
/// the validation loss (on the training loss when `val_set` is empty).
pub fn train<T: Scalar, M: GraphClassifier<T>>(
    model: &mut M,
    train_set: &[PreparedGraph<T>],
    val_set: &[PreparedGraph<T>],
    config: &TrainConfig,
) -> Result<History> {
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let mut history = History::default();
    if config.epochs == 0 {
        return Ok(history);
    }
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(T::lit(config.learning_rate));
    let mut schedule = LrSchedule::new(
        T::lit(config.learning_rate),
        T::lit(config.lr_floor),
        T::lit(config.lr_decay),
        config.lr_patience,
    );
    let val_labels: Vec<SecurityClass> = val_set.iter().map(|g| g.label).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(f64, usize, Vec<Matrix<T>>)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let lr = adam.learning_rate.to_f64_lossy();
        let mut loss_sum = 0.0;
        let mut pred = Vec::with_capacity(order.len());
        let mut labels = Vec::with_capacity(order.len());
        for chunk in order.chunks(config.batch_size) {
            let graphs: Vec<&PreparedGraph<T>> = chunk.iter().map(|&i| &train_set[i]).collect();
            let y: Vec<usize> = graphs.iter().map(|g| g.label.index()).collect();
            let batch = GraphBatch::from_graphs(&graphs)?;
            let (loss, logits) = model.loss_and_backward(&batch, &y)?;
            let loss = loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "training diverged at epoch {epoch}: loss {loss}"
                )));
            }
            loss_sum += loss * chunk.len() as f64;
            pred.extend(classes_of(&logits));
            labels.extend(graphs.iter().map(|g| g.label));
            let mut params: Vec<&mut Parameter<T>> = model.parameters_mut();
            adam_step(&mut params, &mut adam)?;
        }
        let train_loss = loss_sum / order.len() as f64;
        let (val_loss, val_f1) = if val_set.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let (l, p) = assess(model, val_set, config.batch_size.max(128))?;
            if !l.is_finite() {
                return Err(Error::Numeric(format!("validation loss {l} at epoch {epoch}")));
            }
            (l, f1_of(&p, &val_labels))
        };
        history.records.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
            train_f1: f1_of(&pred, &labels),
            val_f1,
        });
        let monitored = if val_set.is_empty() { train_loss } else { val_loss };
        adam.learning_rate = schedule.observe(T::lit(monitored));
        if config.restore_best && best.as_ref().is_none_or(|(b, _, _)| monitored < *b) {
            best = Some((monitored, epoch, snapshot(model)));
        }
        log::debug!("epoch {epoch}: lr {lr:.2e} train {train_loss:.5} val {val_loss:.5} val_f1 {val_f1:.4}");
    }
    history.selected_epoch = Some(config.epochs);
    if let Some((_, epoch, values)) = best {
        restore(model, values);
        history.selected_epoch = Some(epoch);
    }
    Ok(history)
}
