use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Probability clamp used by the cross-entropy loss.
pub const PROB_CLAMP: f64 = 1e-12;

/// A trainable matrix and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(value: Matrix<T>) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Matrix::zeros(rows, cols))
    }

    pub fn len(&self) -> usize {
        self.value.data().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Glorot/Xavier uniform initialization, `U(−a, a)` with
/// `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar>(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| T::lit(rng.gen_range(-limit..=limit)))
}

/// `x W + b`, with `b` broadcast over rows.
pub fn dense_forward<T: Scalar>(x: &Matrix<T>, w: &Parameter<T>, b: &Parameter<T>) -> Result<Matrix<T>> {
    let mut out = x.matmul(&w.value)?;
    out.add_row_broadcast(&b.value)?;
    Ok(out)
}

/// Accumulates `dW = xᵀ g`, `db = Σ_rows g` and returns `dx = g Wᵀ`.
pub fn dense_backward<T: Scalar>(
    x: &Matrix<T>,
    w: &mut Parameter<T>,
    b: &mut Parameter<T>,
    upstream: &Matrix<T>,
) -> Result<Matrix<T>> {
    w.grad.add_assign(&x.matmul_tn(upstream)?)?;
    b.grad.add_assign(&upstream.column_sums())?;
    upstream.matmul_nt(&w.value)
}

pub fn relu<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| v.max(T::zero()))
}

/// Passes `upstream` where `x > 0`; the gradient at 0 is taken as 0.
pub fn relu_backward<T: Scalar>(x: &Matrix<T>, upstream: &Matrix<T>) -> Result<Matrix<T>> {
    x.zip_map(upstream, |v, g| if v > T::zero() { g } else { T::zero() })
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<T: Scalar>(z: &Matrix<T>) -> Matrix<T> {
    let mut out = z.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean binary cross-entropy `−(y ln ŷ + (1 − y) ln(1 − ŷ))` where `ŷ` is
/// the predicted probability of class 1, clamped to `[ε, 1 − ε]`.
pub fn bce_loss<T: Scalar>(y_true: &[usize], y_prob: &[T]) -> Result<T> {
    if y_true.len() != y_prob.len() || y_true.is_empty() {
        return Err(Error::shape(
            "bce_loss",
            format!("{} labels vs {} probabilities", y_true.len(), y_prob.len()),
        ));
    }
    let eps = T::lit(PROB_CLAMP);
    let total: T = y_true
        .iter()
        .zip(y_prob)
        .map(|(&y, &p)| {
            let p = p.max(eps).min(T::one() - eps);
            if y == 1 {
                -p.ln()
            } else {
                -(T::one() - p).ln()
            }
        })
        .sum();
    Ok(total / T::from_usize_lossy(y_true.len()))
}

/// Softmax + cross-entropy over two or more classes. Returns the mean loss
/// and its gradient with respect to the logits, `(p − onehot(y)) / n`.
/// With two classes the loss equals [`bce_loss`] on the class-1 probability.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
    let n = logits.rows();
    if labels.len() != n || n == 0 {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{n} rows vs {} labels", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= logits.cols()) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }
    let mut grad = softmax_rows(logits);
    let eps = T::lit(PROB_CLAMP);
    let inv_n = T::one() / T::from_usize_lossy(n);
    let mut loss = T::zero();
    for (i, &y) in labels.iter().enumerate() {
        let row = grad.row_mut(i);
        loss -= row[y].max(eps).min(T::one() - eps).ln();
        row[y] -= T::one();
        for v in row.iter_mut() {
            *v *= inv_n;
        }
    }
    Ok((loss * inv_n, grad))
}

/// Fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub w: Parameter<T>,
    pub b: Parameter<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn glorot(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: Parameter::new(glorot_uniform(d_in, d_out, rng)),
            b: Parameter::zeros(1, d_out),
        }
    }

    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            w: Parameter::zeros(d_in, d_out),
            b: Parameter::zeros(1, d_out),
        }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        dense_forward(x, &self.w, &self.b)
    }

    pub fn backward(&mut self, x: &Matrix<T>, upstream: &Matrix<T>) -> Result<Matrix<T>> {
        dense_backward(x, &mut self.w, &mut self.b, upstream)
    }

    pub fn d_in(&self) -> usize {
        self.w.value.rows()
    }

    pub fn d_out(&self) -> usize {
        self.w.value.cols()
    }
}
