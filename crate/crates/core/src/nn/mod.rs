//! Small neural-network numeric core: parameters, dense layers, activations
//! and losses with hand-written gradients, Adam, learning-rate schedule and
//! finite-difference gradient checks.

mod adam;
mod gradcheck;
mod layers;
mod schedule;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{gradcheck, GradcheckReport, GRADCHECK_PROBES, GRADCHECK_STEP, KINK_TOLERANCE};
pub use layers::{
    bce_loss, dense_backward, dense_forward, glorot_uniform, relu, relu_backward, softmax_cross_entropy, softmax_rows,
    Dense, Parameter, PROB_CLAMP,
};
pub use schedule::LrSchedule;

/// Anything that owns trainable parameters in a fixed order.
pub trait Trainable<T: crate::Scalar> {
    fn parameters(&self) -> Vec<&Parameter<T>>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>>;

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}
