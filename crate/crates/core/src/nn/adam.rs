use super::layers::Parameter;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Adam moments and hyperparameters. Moments are created on the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Vec<Matrix<T>>,
    pub second_moment: Vec<Matrix<T>>,
    pub step_count: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub learning_rate: T,
}

impl<T: Scalar> AdamState<T> {
    /// `β1 = 0.9`, `β2 = 0.999`, `ε = 1e−8`.
    pub fn new(learning_rate: T) -> Self {
        Self {
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            learning_rate,
        }
    }
}

/// One bias-corrected Adam update of every parameter from its gradient.
pub fn adam_step<T: Scalar>(params: &mut [&mut Parameter<T>], state: &mut AdamState<T>) -> Result<()> {
    if state.first_moment.is_empty() {
        state.first_moment = params
            .iter()
            .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
            .collect();
        state.second_moment = state.first_moment.clone();
    }
    if state.first_moment.len() != params.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} moments for {} parameters", state.first_moment.len(), params.len()),
        ));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for ((p, m), v) in params
        .iter_mut()
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        if m.shape() != p.value.shape() {
            return Err(Error::shape("adam_step", "moment shape differs from parameter"));
        }
        let grads = p.grad.data().to_vec();
        for (((w, &g), m), v) in p
            .value
            .data_mut()
            .iter_mut()
            .zip(&grads)
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
