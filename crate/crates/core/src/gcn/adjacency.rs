use crate::error::{Error, Result};
use crate::grid::GraphTopology;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// `D̃^(−1/2) (A + I) D̃^(−1/2)` in compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

/// Adds self-loops and normalizes symmetrically by the augmented degree.
pub fn normalize_adjacency<T: Scalar>(topology: &GraphTopology) -> NormalizedAdjacency<T> {
    let n = topology.node_count();
    let deg: Vec<usize> = (0..n).map(|i| topology.degree(i) + 1).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let mut row: Vec<usize> = topology.neighbors(i).to_vec();
        row.push(i);
        row.sort_unstable();
        for j in row {
            cols.push(j);
            vals.push(T::lit(1.0 / ((deg[i] * deg[j]) as f64).sqrt()));
        }
        row_ptr.push(cols.len());
    }
    NormalizedAdjacency { n, row_ptr, cols, vals }
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => T::zero(),
        }
    }

    /// Non-zero `(column, value)` pairs of row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row_entries(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `Â · h`.
    pub fn apply(&self, h: &Matrix<T>) -> Result<Matrix<T>> {
        if h.rows() != self.n {
            return Err(Error::shape(
                "adjacency apply",
                format!("{} nodes vs {} feature rows", self.n, h.rows()),
            ));
        }
        let d = h.cols();
        let mut out = Matrix::zeros(self.n, d);
        for i in 0..self.n {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            let out_row = out.row_mut(i);
            for k in range {
                let v = self.vals[k];
                for (o, &x) in out_row.iter_mut().zip(h.row(self.cols[k])) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    /// Disjoint union: the parts on the diagonal of one larger operator.
    pub fn block_diagonal(parts: &[&Self]) -> Self {
        let n = parts.iter().map(|p| p.n).sum();
        let nnz = parts.iter().map(|p| p.nnz()).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        let mut offset = 0;
        for p in parts {
            for i in 0..p.n {
                for (j, v) in p.row_entries(i) {
                    cols.push(j + offset);
                    vals.push(v);
                }
                row_ptr.push(cols.len());
            }
            offset += p.n;
        }
        Self { n, row_ptr, cols, vals }
    }
}
