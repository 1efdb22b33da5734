//! Test-only reference implementations, written independently of the crate
//! internals.
#![allow(dead_code)]

use gridsec::gcn::{normalize_adjacency, PreparedGraph};
use gridsec::grid::{BusKind, GraphTopology, GridCase};
use gridsec::linalg::Matrix;
use gridsec::metrics::SecurityClass;
use gridsec::powerflow::PowerFlowSolution;
use num_complex::Complex64;
use rand::Rng;

pub type Edges = Vec<(usize, usize, f64)>;

/// Random connected simple graph: a random spanning tree plus extra edges.
/// Weights are drawn from {1, 2, 3} when `integer_weights` (many ties),
/// otherwise uniformly from (0.1, 2).
pub fn random_connected(rng: &mut impl Rng, n: usize, integer_weights: bool) -> Edges {
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.gen_range(0..v), v));
    }
    let density: f64 = rng.gen_range(0.0..0.6);
    for a in 0..n {
        for b in a + 1..n {
            if !pairs.contains(&(a, b)) && rng.gen_bool(density) {
                pairs.push((a, b));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(a, b)| {
            let w = if integer_weights {
                rng.gen_range(1..=3) as f64
            } else {
                rng.gen_range(0.1..2.0)
            };
            (a, b, w)
        })
        .collect()
}

pub fn topology_of(n: usize, edges: &Edges) -> GraphTopology {
    GraphTopology::from_edges(n, edges.iter().map(|&(a, b, _)| (a, b))).unwrap()
}

fn weight_matrix(n: usize, edges: &Edges) -> Vec<Vec<Option<f64>>> {
    let mut w = vec![vec![None; n]; n];
    for &(a, b, x) in edges {
        w[a][b] = Some(x);
        w[b][a] = Some(x);
    }
    w
}

/// Every simple path from `s` to `t` as (length, interior nodes).
fn simple_paths(w: &[Vec<Option<f64>>], s: usize, t: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        w: &[Vec<Option<f64>>],
        at: usize,
        t: usize,
        len: f64,
        path: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if at == t {
            out.push((len, path[1..path.len() - 1].to_vec()));
            return;
        }
        for next in 0..w.len() {
            if let Some(x) = w[at][next] {
                if !path.contains(&next) {
                    path.push(next);
                    walk(w, next, t, len + x, path, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(w, s, t, 0.0, &mut vec![s], &mut out);
    out
}

/// Betweenness by enumerating all simple paths: for each unordered pair the
/// share of minimum-length paths through `v`, averaged over the
/// `(n − 1)(n − 2) / 2` pairs not containing `v`.
pub fn brute_betweenness(n: usize, edges: &Edges) -> Vec<f64> {
    let w = weight_matrix(n, edges);
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = simple_paths(&w, s, t);
            let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let shortest: Vec<_> = paths.iter().filter(|p| (p.0 - best).abs() <= 1e-12 * best).collect();
            for (v, sv) in score.iter_mut().enumerate() {
                let through = shortest.iter().filter(|p| p.1.contains(&v)).count();
                *sv += through as f64 / shortest.len() as f64;
            }
        }
    }
    if n < 3 {
        return vec![0.0; n];
    }
    let pairs = ((n - 1) * (n - 2) / 2) as f64;
    score.into_iter().map(|x| x / pairs).collect()
}

/// Mean shortest-path length from each node, by path enumeration.
pub fn brute_closeness(n: usize, edges: &Edges) -> Vec<f64> {
    let w = weight_matrix(n, edges);
    (0..n)
        .map(|s| {
            let total: f64 = (0..n)
                .filter(|&t| t != s)
                .map(|t| simple_paths(&w, s, t).iter().map(|p| p.0).fold(f64::INFINITY, f64::min))
                .sum();
            total / (n - 1) as f64
        })
        .collect()
}

pub fn floyd_warshall(n: usize, edges: &Edges) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, x) in edges {
        d[a][b] = d[a][b].min(x);
        d[b][a] = d[b][a].min(x);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Receiving-end voltage of a slack–PQ pair joined by one series impedance,
/// by Gauss–Seidel iteration. `load` is in per-unit.
pub fn gauss_seidel_two_bus(load: Complex64, z: Complex64) -> Complex64 {
    let y = z.inv();
    let v1 = Complex64::new(1.0, 0.0);
    let s2 = -load;
    let mut v2 = Complex64::new(1.0, 0.0);
    for _ in 0..100_000 {
        let next = ((s2 / v2).conj() + y * v1) / y;
        if (next - v2).norm() < 1e-15 {
            return next;
        }
        v2 = next;
    }
    v2
}

/// Per-branch π-model flows summed at each bus, plus bus shunts: the net
/// complex injection implied by a voltage state, per-unit.
pub fn injections_from_flows(case: &GridCase, v: &[Complex64]) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); case.bus_count()];
    for br in case.branches().iter().filter(|b| b.in_service) {
        let f = case.bus_index(br.from_bus).unwrap();
        let t = case.bus_index(br.to_bus).unwrap();
        let ys = Complex64::new(br.resistance_r, br.reactance_x).inv();
        let half = Complex64::new(0.0, br.charging_b / 2.0);
        let vf = v[f] / br.tap_ratio;
        let i_f = (vf - v[t]) * ys + vf * half;
        let i_t = (v[t] - vf) * ys + v[t] * half;
        s[f] += vf * i_f.conj();
        s[t] += v[t] * i_t.conj();
    }
    for (i, b) in case.buses().iter().enumerate() {
        s[i] += v[i] * (v[i] * Complex64::new(b.shunt_g, b.shunt_b)).conj();
    }
    s
}

/// Largest scheduled-vs-computed mismatch (P at PV and PQ buses, Q at PQ
/// buses), per-unit.
pub fn recomputed_mismatch(case: &GridCase, sol: &PowerFlowSolution) -> f64 {
    let v = sol.voltages();
    let s = injections_from_flows(case, &v);
    let base = case.base_mva();
    let mut worst: f64 = 0.0;
    for (i, b) in case.buses().iter().enumerate() {
        let dp = s[i].re - (b.gen_p - b.load_p) / base;
        let dq = s[i].im - (b.gen_q - b.load_q) / base;
        match b.kind {
            BusKind::Slack => {}
            BusKind::PV => worst = worst.max(dp.abs()),
            BusKind::PQ => worst = worst.max(dp.abs()).max(dq.abs()),
        }
    }
    worst
}

/// Series-resistance losses of all in-service branches plus shunt
/// conductance consumption, MW.
pub fn active_losses(case: &GridCase, sol: &PowerFlowSolution) -> f64 {
    let v = sol.voltages();
    let mut loss = 0.0;
    for br in case.branches().iter().filter(|b| b.in_service) {
        let f = case.bus_index(br.from_bus).unwrap();
        let t = case.bus_index(br.to_bus).unwrap();
        let i = (v[f] / br.tap_ratio - v[t]) / Complex64::new(br.resistance_r, br.reactance_x);
        loss += i.norm_sqr() * br.resistance_r;
    }
    for (i, b) in case.buses().iter().enumerate() {
        loss += v[i].norm_sqr() * b.shunt_g;
    }
    loss * case.base_mva()
}

/// One propagation step written node by node:
/// `h'_i = relu(Σ_{j ∈ N(i) ∪ {i}} h_j W / sqrt(d̃_i d̃_j) + b)`.
pub fn gcn_layer_per_node(topo: &GraphTopology, h: &Matrix<f64>, w: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    let n = topo.node_count();
    let deg: Vec<f64> = (0..n).map(|i| topo.degree(i) as f64 + 1.0).collect();
    let mut out = Matrix::zeros(n, w.cols());
    for i in 0..n {
        let mut agg = vec![0.0; h.cols()];
        for j in std::iter::once(i).chain(topo.neighbors(i).iter().copied()) {
            let c = 1.0 / (deg[i] * deg[j]).sqrt();
            for (a, x) in agg.iter_mut().zip(h.row(j)) {
                *a += c * x;
            }
        }
        for k in 0..w.cols() {
            let mut z = b[(0, k)];
            for (m, a) in agg.iter().enumerate() {
                z += a * w[(m, k)];
            }
            out[(i, k)] = z.max(0.0);
        }
    }
    out
}

/// Random connected graph with uniform node features in (−1, 1).
pub fn random_prepared(rng: &mut impl Rng, n: usize, features: usize) -> (GraphTopology, PreparedGraph<f64>) {
    let topo = topology_of(n, &random_connected(rng, n, true));
    let x = Matrix::from_fn(n, features, |_, _| rng.gen_range(-1.0..1.0));
    let label = if rng.gen_bool(0.5) {
        SecurityClass::Secure
    } else {
        SecurityClass::Insecure
    };
    let g = PreparedGraph::new(x, normalize_adjacency(&topo), label).unwrap();
    (topo, g)
}

/// Dense symmetric eigenvalues via nalgebra.
pub fn symmetric_eigenvalues(m: &Matrix<f64>) -> Vec<f64> {
    let n = m.rows();
    let dm = nalgebra::DMatrix::from_row_slice(n, n, m.data());
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(dm).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
