use std::collections::VecDeque;

use super::GridCase;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Undirected simple graph of a case: 0/1 adjacency `A`, degree `D` and
/// Laplacian `L = D − A`. Parallel branches collapse to one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTopology {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl GraphTopology {
    /// Builds a topology from node pairs; duplicates collapse, self-loops are
    /// rejected.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at node {a}")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Self { n, edges, neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Distinct edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn adjacency(&self) -> Matrix<f64> {
        let mut a = Matrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    pub fn degree_matrix(&self) -> Matrix<f64> {
        Matrix::from_fn(self.n, self.n, |i, j| if i == j { self.degree(i) as f64 } else { 0.0 })
    }

    pub fn laplacian(&self) -> Matrix<f64> {
        let a = self.adjacency();
        let d = self.degree_matrix();
        d.zip_map(&a, |x, y| x - y).expect("same shape")
    }

    /// Connected components as a label per node, labels in discovery order.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            label[start] = next;
            while let Some(v) = queue.pop_front() {
                for &w in &self.neighbors[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Relabels nodes: new node `k` is old node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut inverse = vec![usize::MAX; self.n];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        Self::from_edges(self.n, self.edges.iter().map(|&(a, b)| (inverse[a], inverse[b])))
    }
}

/// Graph of the in-service branches of `case`; node `k` is the k-th bus.
pub fn build_topology(case: &GridCase) -> GraphTopology {
    let pairs = case
        .branches()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.in_service)
        .map(|(k, _)| case.branch_ends(k));
    GraphTopology::from_edges(case.bus_count(), pairs).expect("validated case")
}

/// Copy of `case` with the listed branches taken out of service.
pub fn apply_contingency(case: &GridCase, out_branches: &[usize]) -> Result<GridCase> {
    let m = case.branches().len();
    if let Some(&bad) = out_branches.iter().find(|&&k| k >= m) {
        return Err(Error::InvalidArgument(format!(
            "branch index {bad} out of range ({m} branches)"
        )));
    }
    case.with_branches(|branches| {
        for &k in out_branches {
            branches[k].in_service = false;
        }
    })
}

/// One BFS from node 0 reaches every node.
pub fn is_connected(topology: &GraphTopology) -> bool {
    topology.n <= 1 || topology.components().iter().all(|&c| c == 0)
}
