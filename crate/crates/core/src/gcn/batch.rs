use serde::{Deserialize, Serialize};

use super::adjacency::{normalize_adjacency, NormalizedAdjacency};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FEATURE_COUNT};
use crate::linalg::Matrix;
use crate::metrics::SecurityClass;
use crate::scalar::Scalar;
use crate::scenario::LabeledGraphSample;

/// Column selection followed by per-column standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Preprocessor {
    /// Keeps the columns unchanged.
    pub fn identity(columns: Vec<usize>) -> Result<Self> {
        check_columns(&columns)?;
        let k = columns.len();
        Ok(Self {
            columns,
            mean: vec![0.0; k],
            scale: vec![1.0; k],
        })
    }

    /// Mean and standard deviation of each selected column over every node
    /// of `samples`. Constant columns keep unit scale.
    pub fn fit<'a>(columns: Vec<usize>, samples: impl IntoIterator<Item = &'a LabeledGraphSample>) -> Result<Self> {
        check_columns(&columns)?;
        let k = columns.len();
        let mut count = 0usize;
        let mut sum = vec![0.0; k];
        let mut sum_sq = vec![0.0; k];
        for s in samples {
            for row in s.features.matrix().iter_rows() {
                count += 1;
                for (c, &col) in columns.iter().enumerate() {
                    sum[c] += row[col];
                    sum_sq[c] += row[col] * row[col];
                }
            }
        }
        if count == 0 {
            return Err(Error::InvalidArgument("cannot fit a preprocessor on no samples".into()));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let scale = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let sd = (sq / n - m * m).max(0.0).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { columns, mean, scale })
    }

    pub fn output_dim(&self) -> usize {
        self.columns.len()
    }

    pub fn transform<T: Scalar>(&self, features: &FeatureMatrix) -> Result<Matrix<T>> {
        let x = features.matrix();
        let out = Matrix::from_fn(x.rows(), self.columns.len(), |i, c| {
            T::lit((x[(i, self.columns[c])] - self.mean[c]) / self.scale[c])
        });
        if !out.is_finite() {
            return Err(Error::Numeric("non-finite model input".into()));
        }
        Ok(out)
    }

    pub fn prepare<T: Scalar>(&self, sample: &LabeledGraphSample) -> Result<PreparedGraph<T>> {
        Ok(PreparedGraph {
            x: self.transform(&sample.features)?,
            adj: normalize_adjacency(&sample.topology()?),
            label: sample.label,
        })
    }

    pub fn prepare_all<'a, T: Scalar>(
        &self,
        samples: impl IntoIterator<Item = &'a LabeledGraphSample>,
    ) -> Result<Vec<PreparedGraph<T>>> {
        samples.into_iter().map(|s| self.prepare(s)).collect()
    }
}

fn check_columns(columns: &[usize]) -> Result<()> {
    if columns.is_empty() || columns.iter().any(|&c| c >= FEATURE_COUNT) {
        return Err(Error::InvalidArgument(format!("invalid feature columns {columns:?}")));
    }
    if columns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "feature columns must be strictly increasing, got {columns:?}"
        )));
    }
    Ok(())
}

/// Model-ready graph: transformed node features and normalized adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGraph<T> {
    pub x: Matrix<T>,
    pub adj: NormalizedAdjacency<T>,
    pub label: SecurityClass,
}

impl<T: Scalar> PreparedGraph<T> {
    pub fn new(x: Matrix<T>, adj: NormalizedAdjacency<T>, label: SecurityClass) -> Result<Self> {
        if x.rows() != adj.node_count() {
            return Err(Error::shape(
                "PreparedGraph",
                format!("{} feature rows, {} nodes", x.rows(), adj.node_count()),
            ));
        }
        Ok(Self { x, adj, label })
    }

    pub fn node_count(&self) -> usize {
        self.x.rows()
    }
}

/// Disjoint union of graphs; `offsets[g]..offsets[g + 1]` are graph `g`'s
/// rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch<T> {
    pub adj: NormalizedAdjacency<T>,
    pub x: Matrix<T>,
    pub offsets: Vec<usize>,
}

impl<T: Scalar> GraphBatch<T> {
    pub fn from_graphs(graphs: &[&PreparedGraph<T>]) -> Result<Self> {
        let Some(first) = graphs.first() else {
            return Err(Error::InvalidArgument("empty batch".into()));
        };
        let d = first.x.cols();
        if let Some(g) = graphs.iter().find(|g| g.x.cols() != d) {
            return Err(Error::shape("batch", format!("feature widths {d} and {}", g.x.cols())));
        }
        let mut offsets = Vec::with_capacity(graphs.len() + 1);
        offsets.push(0);
        let mut data = Vec::new();
        for g in graphs {
            if !g.x.is_finite() {
                return Err(Error::Numeric("NaN or Inf in node features".into()));
            }
            data.extend_from_slice(g.x.data());
            offsets.push(offsets.last().unwrap() + g.node_count());
        }
        let adjs: Vec<&NormalizedAdjacency<T>> = graphs.iter().map(|g| &g.adj).collect();
        Ok(Self {
            adj: NormalizedAdjacency::block_diagonal(&adjs),
            x: Matrix::new(*offsets.last().unwrap(), d, data)?,
            offsets,
        })
    }

    pub fn single(graph: &PreparedGraph<T>) -> Result<Self> {
        Self::from_graphs(&[graph])
    }

    pub fn graph_count(&self) -> usize {
        self.offsets.len() - 1
    }
}
