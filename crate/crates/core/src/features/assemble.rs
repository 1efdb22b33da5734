use serde::{Deserialize, Serialize};

use super::centrality::CentralityVector;
use crate::error::{Error, Result};
use crate::grid::GridCase;
use crate::linalg::Matrix;
use crate::powerflow::PowerFlowSolution;

pub const FEATURE_COUNT: usize = 7;

/// Column order of every feature matrix.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["v_mag", "p", "q", "c_d", "c_c", "c_b", "c_k"];

/// `n × 7` node features: `[V_mag, P, Q, C_d, C_c, C_b, C_k]` with `P`, `Q` as
/// per-unit net injections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix<f64>", into = "Matrix<f64>")]
pub struct FeatureMatrix(Matrix<f64>);

impl FeatureMatrix {
    pub const V_MAG: usize = 0;
    pub const P: usize = 1;
    pub const Q: usize = 2;
    pub const C_D: usize = 3;
    pub const C_C: usize = 4;
    pub const C_B: usize = 5;
    pub const C_K: usize = 6;

    pub fn new(x: Matrix<f64>) -> Result<Self> {
        if x.cols() != FEATURE_COUNT {
            return Err(Error::shape(
                "FeatureMatrix",
                format!("{} columns, expected {FEATURE_COUNT}", x.cols()),
            ));
        }
        if !x.is_finite() {
            return Err(Error::Numeric("feature matrix contains NaN or Inf".into()));
        }
        Ok(Self(x))
    }

    pub fn node_count(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn get(&self, i: usize, col: usize) -> f64 {
        self.0[(i, col)]
    }

    /// Multiplies one entry; used to inject measurement perturbations.
    pub fn scale_entry(&mut self, i: usize, col: usize, factor: f64) {
        self.0[(i, col)] *= factor;
    }

    /// Rows reordered so new row `k` is old row `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self(Matrix::from_fn(order.len(), FEATURE_COUNT, |i, j| {
            self.0[(order[i], j)]
        }))
    }
}

impl TryFrom<Matrix<f64>> for FeatureMatrix {
    type Error = Error;

    fn try_from(m: Matrix<f64>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<FeatureMatrix> for Matrix<f64> {
    fn from(f: FeatureMatrix) -> Self {
        f.0
    }
}

/// Stacks electrical state and centralities into the feature matrix.
pub fn assemble_features(
    case: &GridCase,
    solution: &PowerFlowSolution,
    centralities: &CentralityVector,
) -> Result<FeatureMatrix> {
    let n = case.bus_count();
    if !solution.converged {
        return Err(Error::InvalidArgument("features need a converged solution".into()));
    }
    let lens = [
        solution.v_mag.len(),
        solution.p_injection.len(),
        solution.q_injection.len(),
        centralities.c_d.len(),
        centralities.c_c.len(),
        centralities.c_b.len(),
        centralities.c_k.len(),
    ];
    if lens.iter().any(|&l| l != n) {
        return Err(Error::shape(
            "assemble_features",
            format!("case has {n} buses, inputs have lengths {lens:?}"),
        ));
    }
    let base = case.base_mva();
    let x = Matrix::from_fn(n, FEATURE_COUNT, |i, j| match j {
        0 => solution.v_mag[i],
        1 => solution.p_injection[i] / base,
        2 => solution.q_injection[i] / base,
        3 => centralities.c_d[i],
        4 => centralities.c_c[i],
        5 => centralities.c_b[i],
        _ => centralities.c_k[i],
    });
    FeatureMatrix::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_centralities, Reduction};
    use crate::grid::fixtures::two_bus;
    use crate::powerflow::solve_newton_raphson;

    #[test]
    fn two_bus_no_load_rows() {
        let case = two_bus(0.0, 0.03, 0.04);
        let sol = solve_newton_raphson(&case, 1e-10, 10).unwrap();
        let c = compute_centralities(&case, Reduction::Ordered).unwrap();
        let f = assemble_features(&case, &sol, &c).unwrap();
        assert_eq!(f.matrix().cols(), 7);
        let w = 0.05;
        let row = f.row(0);
        assert_eq!(&row[..6], &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((row[6] - w).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let case = two_bus(0.0, 0.0, 0.1);
        let sol = solve_newton_raphson(&case, 1e-10, 10).unwrap();
        let mut c = compute_centralities(&case, Reduction::Ordered).unwrap();
        c.c_b.pop();
        assert!(matches!(assemble_features(&case, &sol, &c), Err(Error::Shape { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix::from_fn(1, 7, |_, j| if j == 2 { f64::NAN } else { 0.0 });
        assert!(FeatureMatrix::new(m).is_err());
        assert!(FeatureMatrix::new(Matrix::zeros(2, 6)).is_err());
    }
}
