use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_topology, GraphTopology, GridCase};
use crate::scalar::Scalar;

/// Undirected graph with positive edge weights (impedance magnitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    n: usize,
    edges: Vec<(usize, usize, T)>,
    adj: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn new(n: usize, edges: Vec<(usize, usize, T)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for &(a, b, w) in &edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b}) for n = {n}")));
            }
            if !(w > T::zero() && w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) weight {w} must be positive"
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) listed twice")));
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Ok(Self { n, edges, adj })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    /// Same edges, unit weights.
    pub fn topology(&self) -> GraphTopology {
        GraphTopology::from_edges(self.n, self.edges.iter().map(|&(a, b, _)| (a, b))).expect("validated edges")
    }

    pub fn scaled(&self, alpha: T) -> Result<Self> {
        Self::new(self.n, self.edges.iter().map(|&(a, b, w)| (a, b, w * alpha)).collect())
    }

    /// Relabels nodes: new node `k` is old node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut inverse = vec![0; self.n];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        Self::new(
            self.n,
            self.edges
                .iter()
                .map(|&(a, b, w)| (inverse[a], inverse[b], w))
                .collect(),
        )
    }
}

impl WeightedGraph<f64> {
    /// In-service branches of `case`, weighted by impedance magnitude.
    /// Parallel branches merge into one edge carrying the magnitude of their
    /// parallel equivalent impedance.
    pub fn from_case(case: &GridCase) -> Self {
        let mut admittance: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (k, br) in case.branches().iter().enumerate() {
            if !br.in_service {
                continue;
            }
            let (a, b) = case.branch_ends(k);
            *admittance.entry((a.min(b), a.max(b))).or_default() +=
                Complex64::new(br.resistance_r, br.reactance_x).inv();
        }
        let edges = admittance
            .into_iter()
            .map(|((a, b), y)| (a, b, y.inv().norm()))
            .collect();
        Self::new(case.bus_count(), edges).expect("validated case")
    }
}

/// `deg(v) / (n − 1)`, i.e. the Laplacian diagonal scaled by `1 / (n − 1)`.
pub fn degree_centrality<T: Scalar>(topology: &GraphTopology) -> Result<Vec<T>> {
    let n = topology.node_count();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "degree centrality needs n >= 2, got {n}"
        )));
    }
    let denom = T::from_usize_lossy(n - 1);
    Ok((0..n)
        .map(|v| T::from_usize_lossy(topology.degree(v)) / denom)
        .collect())
}

/// `2 e_i / (k_i (k_i − 1))`; nodes with fewer than two neighbours get 0.
pub fn clustering_coefficient<T: Scalar>(topology: &GraphTopology) -> Vec<T> {
    (0..topology.node_count())
        .map(|v| {
            let nb = topology.neighbors(v);
            let k = nb.len();
            if k < 2 {
                return T::zero();
            }
            let mut links = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if topology.has_edge(a, b) {
                        links += 1;
                    }
                }
            }
            T::from_usize_lossy(2 * links) / T::from_usize_lossy(k * (k - 1))
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Queued<T> {
    dist: T,
    node: usize,
}

impl<T: PartialOrd> PartialEq for Queued<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: PartialOrd> Eq for Queued<T> {}

impl<T: PartialOrd> PartialOrd for Queued<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Queued<T> {
    // min-heap on distance, then node index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn tie_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(4.0))
}

fn close<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= tie_tolerance::<T>() * a.abs().max(b.abs())
}

/// Single-source shortest-path DAG with path counts.
struct PathDag<T> {
    dist: Vec<T>,
    sigma: Vec<T>,
    preds: Vec<Vec<usize>>,
    /// Settled nodes in non-decreasing distance.
    order: Vec<usize>,
}

fn dijkstra<T: Scalar>(g: &WeightedGraph<T>, s: usize) -> PathDag<T> {
    let n = g.n;
    let mut dist = vec![T::infinity(); n];
    let mut sigma = vec![T::zero(); n];
    let mut preds = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[s] = T::zero();
    sigma[s] = T::one();
    heap.push(Queued {
        dist: T::zero(),
        node: s,
    });
    while let Some(Queued { node: v, .. }) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, wt) in &g.adj[v] {
            if settled[w] {
                continue;
            }
            let alt = dist[v] + wt;
            if dist[w].is_infinite() || (alt < dist[w] && !close(alt, dist[w])) {
                dist[w] = alt;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Queued { dist: alt, node: w });
            } else if close(alt, dist[w]) {
                let sv = sigma[v];
                sigma[w] += sv;
                preds[w].push(v);
            }
        }
    }
    PathDag {
        dist,
        sigma,
        preds,
        order,
    }
}

/// Minimum summed edge weight from `s` to every node (`+∞` if unreachable).
pub fn shortest_distances<T: Scalar>(graph: &WeightedGraph<T>, s: usize) -> Result<Vec<T>> {
    if s >= graph.n {
        return Err(Error::InvalidArgument(format!("node {s} out of range")));
    }
    Ok(dijkstra(graph, s).dist)
}

/// Electrical distance: the minimum-impedance path length between `s` and
/// `t`; `+∞` when no path exists.
pub fn electrical_distance<T: Scalar>(graph: &WeightedGraph<T>, s: usize, t: usize) -> Result<T> {
    if t >= graph.n {
        return Err(Error::InvalidArgument(format!("node {t} out of range")));
    }
    Ok(shortest_distances(graph, s)?[t])
}

/// How per-source betweenness contributions are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Sum in source order; bitwise reproducible.
    Ordered,
    /// Parallel tree reduction; order depends on scheduling.
    Parallel,
}

fn source_dependencies<T: Scalar>(g: &WeightedGraph<T>, s: usize) -> Vec<T> {
    let dag = dijkstra(g, s);
    let mut delta = vec![T::zero(); g.n];
    for &w in dag.order.iter().rev() {
        let coeff = (T::one() + delta[w]) / dag.sigma[w];
        for &v in &dag.preds[w] {
            delta[v] += dag.sigma[v] * coeff;
        }
    }
    delta[s] = T::zero();
    delta
}

/// Betweenness with ordered reduction, see [`betweenness_centrality_with`].
pub fn betweenness_centrality<T: Scalar>(graph: &WeightedGraph<T>) -> Vec<T> {
    betweenness_centrality_with(graph, Reduction::Ordered)
}

/// Brandes accumulation over weighted shortest paths, counting every tied
/// shortest path, normalized by `(n − 1)(n − 2) / 2` unordered pairs.
/// Graphs with fewer than three nodes get all zeros; unreachable pairs
/// contribute nothing.
pub fn betweenness_centrality_with<T: Scalar>(graph: &WeightedGraph<T>, reduction: Reduction) -> Vec<T> {
    let n = graph.n;
    if n < 3 {
        return vec![T::zero(); n];
    }
    let add = |mut a: Vec<T>, b: Vec<T>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };
    let raw = match reduction {
        Reduction::Ordered => {
            let parts: Vec<Vec<T>> = (0..n).into_par_iter().map(|s| source_dependencies(graph, s)).collect();
            parts.into_iter().fold(vec![T::zero(); n], add)
        }
        Reduction::Parallel => (0..n)
            .into_par_iter()
            .map(|s| source_dependencies(graph, s))
            .reduce(|| vec![T::zero(); n], add),
    };
    // each unordered pair is visited from both endpoints
    let denom = T::from_usize_lossy((n - 1) * (n - 2));
    raw.into_iter().map(|x| x / denom).collect()
}

/// Mean electrical distance from each node to all others (the farness form,
/// not its reciprocal).
pub fn closeness_centrality<T: Scalar>(graph: &WeightedGraph<T>) -> Result<Vec<T>> {
    let n = graph.n;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("closeness needs n >= 2, got {n}")));
    }
    let denom = T::from_usize_lossy(n - 1);
    (0..n)
        .map(|v| {
            let d = dijkstra(graph, v).dist;
            if d.iter().any(|x| x.is_infinite()) {
                return Err(Error::Disconnected("closeness"));
            }
            Ok(d.into_iter().sum::<T>() / denom)
        })
        .collect()
}

/// The four per-node centralities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub c_d: Vec<f64>,
    pub c_c: Vec<f64>,
    pub c_b: Vec<f64>,
    pub c_k: Vec<f64>,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.c_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_d.is_empty()
    }
}

/// Centralities of the in-service network of `case`.
pub fn compute_centralities(case: &GridCase, reduction: Reduction) -> Result<CentralityVector> {
    let topology = build_topology(case);
    let weighted = WeightedGraph::from_case(case);
    Ok(CentralityVector {
        c_d: degree_centrality(&topology)?,
        c_c: clustering_coefficient(&topology),
        c_b: betweenness_centrality_with(&weighted, reduction),
        c_k: closeness_centrality(&weighted)?,
    })
}
