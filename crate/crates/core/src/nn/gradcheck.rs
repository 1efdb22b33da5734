use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Trainable;
use crate::scalar::Scalar;

pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_PROBES: usize = 200;
/// Relative disagreement of the two one-sided slopes above which a coordinate
/// counts as sitting on a kink.
pub const KINK_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradcheckReport<T> {
    /// `max |a − n| / max(|a|, |n|, 1e−6)` over the probed coordinates.
    pub max_rel_error: T,
    pub probed: usize,
    /// Coordinates passed over because the loss is not smooth within ±h.
    pub skipped: usize,
}

/// Compares analytic gradients with central differences.
///
/// `loss_and_grad` must zero the gradients, evaluate the scalar loss and
/// backpropagate into the model's parameters. Coordinates are visited in a
/// seeded random order until `probes` smooth ones have been checked (or all
/// are exhausted).
pub fn gradcheck<T, M, F>(model: &mut M, mut loss_and_grad: F, probes: usize, seed: u64) -> GradcheckReport<T>
where
    T: Scalar,
    M: Trainable<T>,
    F: FnMut(&mut M) -> T,
{
    let center = loss_and_grad(model);
    let analytic: Vec<Vec<T>> = model.parameters().iter().map(|p| p.grad.data().to_vec()).collect();
    let mut coords: Vec<(usize, usize)> = analytic
        .iter()
        .enumerate()
        .flat_map(|(p, g)| (0..g.len()).map(move |k| (p, k)))
        .collect();
    coords.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let h = T::lit(GRADCHECK_STEP);
    let floor = T::lit(1e-6);
    let kink = T::lit(KINK_TOLERANCE);
    let mut report = GradcheckReport {
        max_rel_error: T::zero(),
        probed: 0,
        skipped: 0,
    };
    for (p, k) in coords {
        if report.probed == probes {
            break;
        }
        let original = model.parameters()[p].value.data()[k];
        model.parameters_mut()[p].value.data_mut()[k] = original + h;
        let plus = loss_and_grad(model);
        model.parameters_mut()[p].value.data_mut()[k] = original - h;
        let minus = loss_and_grad(model);
        model.parameters_mut()[p].value.data_mut()[k] = original;
        let (forward, backward) = ((plus - center) / h, (center - minus) / h);
        if (forward - backward).abs() > kink * forward.abs().max(backward.abs()).max(floor) {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (h + h);
        let a = analytic[p][k];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        report.max_rel_error = report.max_rel_error.max(err);
        report.probed += 1;
    }
    loss_and_grad(model);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nn::{relu, relu_backward, Dense, Parameter};

    struct Net(Dense<f64>);

    impl Trainable<f64> for Net {
        fn parameters(&self) -> Vec<&Parameter<f64>> {
            vec![&self.0.w, &self.0.b]
        }
        fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
            vec![&mut self.0.w, &mut self.0.b]
        }
    }

    fn input() -> Matrix<f64> {
        Matrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * 0.7 - j as f64 * 0.3)
    }

    #[test]
    fn linear_model_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Net(Dense::glorot(3, 2, &mut rng));
        let x = input();
        let r = gradcheck(
            &mut net,
            |n| {
                n.zero_grad();
                let y = n.0.forward(&x).unwrap();
                n.0.backward(&x, &Matrix::from_fn(4, 2, |_, _| 1.0)).unwrap();
                y.data().iter().sum()
            },
            GRADCHECK_PROBES,
            0,
        );
        assert_eq!((r.probed, r.skipped), (8, 0));
        assert!(r.max_rel_error < 1e-9, "{}", r.max_rel_error);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Net(Dense::glorot(3, 2, &mut rng));
        let x = input();
        let r = gradcheck(
            &mut net,
            |n| {
                n.zero_grad();
                let y = n.0.forward(&x).unwrap();
                n.0.backward(&x, &Matrix::from_fn(4, 2, |_, _| 2.0)).unwrap();
                y.data().iter().sum()
            },
            GRADCHECK_PROBES,
            0,
        );
        assert!(r.max_rel_error > 0.4);
    }

    #[test]
    fn kink_inside_step_is_skipped() {
        // relu(w·1 + b) with the pre-activation 1e−6 away from zero.
        let mut net = Net(Dense::zeros(1, 1));
        net.0.b.value = Matrix::new(1, 1, vec![1e-6]).unwrap();
        let x = Matrix::new(1, 1, vec![0.0]).unwrap();
        let r = gradcheck(
            &mut net,
            |n| {
                n.zero_grad();
                let z = n.0.forward(&x).unwrap();
                let up = relu_backward(&z, &Matrix::new(1, 1, vec![1.0]).unwrap()).unwrap();
                n.0.backward(&x, &up).unwrap();
                relu(&z).data()[0]
            },
            GRADCHECK_PROBES,
            0,
        );
        assert_eq!(r.skipped, 1, "bias probe straddles the kink");
        assert_eq!(r.probed, 1);
        assert!(r.max_rel_error < 1e-9);
    }
}
