use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ceil_count;
use super::profile::SecurityCriterion;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::grid::GraphTopology;
use crate::metrics::SecurityClass;
use crate::runtime::mix_seed;

pub const DATASET_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub scenario: usize,
    /// Load-profile hour; absent for unscaled operating points.
    pub hour: Option<usize>,
    /// Branch indices out of service.
    pub contingency: Vec<usize>,
    pub transfer_mw: f64,
}

/// One post-contingency operating point as a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledGraphSample {
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "x")]
    pub features: FeatureMatrix,
    #[serde(rename = "y")]
    pub label: SecurityClass,
    pub meta: SampleMeta,
}

impl LabeledGraphSample {
    pub fn node_count(&self) -> usize {
        self.features.node_count()
    }

    pub fn topology(&self) -> Result<GraphTopology> {
        GraphTopology::from_edges(self.node_count(), self.edges.iter().copied())
    }

    /// Same graph with nodes relabeled: new node `k` is old node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if order.len() != n {
            return Err(Error::shape(
                "permuted",
                format!("{} indices for {n} nodes", order.len()),
            ));
        }
        let mut position = vec![usize::MAX; n];
        for (k, &old) in order.iter().enumerate() {
            if old >= n || position[old] != usize::MAX {
                return Err(Error::InvalidArgument("order is not a permutation".into()));
            }
            position[old] = k;
        }
        Ok(Self {
            edges: self.edges.iter().map(|&(a, b)| (position[a], position[b])).collect(),
            features: self.features.permuted(order),
            label: self.label,
            meta: self.meta.clone(),
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.node_count();
        if let Some(e) = self.edges.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
            return Err(Error::Schema(format!("edge {e:?} invalid for {n} nodes")));
        }
        Ok(())
    }
}

/// Index sets of the three splits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    pub fn is_empty(&self) -> bool {
        self.train.is_empty() && self.validation.is_empty() && self.test.is_empty()
    }

    /// Every index in `0..n` appears in exactly one split.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.validation).chain(&self.test) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub case: String,
    pub seed: u64,
    pub criterion: SecurityCriterion,
    pub samples: Vec<LabeledGraphSample>,
    pub split: DatasetSplit,
}

impl GraphDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn secure_count(&self) -> usize {
        self.samples.iter().filter(|s| s.label == SecurityClass::Secure).count()
    }

    pub fn secure_fraction(&self) -> f64 {
        self.secure_count() as f64 / self.len().max(1) as f64
    }

    pub fn labels(&self) -> Vec<SecurityClass> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Vec<&LabeledGraphSample> {
        indices.iter().map(|&i| &self.samples[i]).collect()
    }

    /// Dataset holding only the given samples, all placed in the test split.
    pub fn select_as_test(&self, indices: &[usize]) -> Self {
        Self {
            case: self.case.clone(),
            seed: self.seed,
            criterion: self.criterion,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            split: DatasetSplit {
                test: (0..indices.len()).collect(),
                ..Default::default()
            },
        }
    }
}

/// Largest-remainder split sizes: floors first, leftover items go to the
/// largest fractional parts (earlier splits win ties).
pub(crate) fn split_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let total: f64 = ratios.iter().sum();
    let exact: Vec<f64> = ratios.iter().map(|r| r / total * n as f64).collect();
    let mut sizes = [0usize; 3];
    for k in 0..3 {
        sizes[k] = (exact[k] + 1e-9).floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut left = n - sizes.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    sizes
}

/// Seeded random permutation cut into train / validation / test.
pub fn split_dataset(mut dataset: GraphDataset, ratios: (f64, f64, f64), seed: u64) -> Result<GraphDataset> {
    let n = dataset.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 samples to split, got {n}"
        )));
    }
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || r.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument(format!("invalid split ratios {ratios:?}")));
    }
    let sizes = split_sizes(n, r);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5B17, 0)));
    let (train, rest) = perm.split_at(sizes[0]);
    let (validation, test) = rest.split_at(sizes[1]);
    dataset.split = DatasetSplit {
        train: train.to_vec(),
        validation: validation.to_vec(),
        test: test.to_vec(),
    };
    Ok(dataset)
}

/// Multiplies the voltage feature of a random `⌈bus_fraction · n⌉` nodes of
/// every sample by `1 + magnitude_fraction`. Labels and splits are kept.
pub fn perturb_voltages(
    mut dataset: GraphDataset,
    bus_fraction: f64,
    magnitude_fraction: f64,
    seed: u64,
) -> Result<GraphDataset> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot perturb an empty dataset".into()));
    }
    if !(0.0..=1.0).contains(&bus_fraction) || !magnitude_fraction.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "invalid perturbation ({bus_fraction}, {magnitude_fraction})"
        )));
    }
    let factor = 1.0 + magnitude_fraction;
    for (k, s) in dataset.samples.iter_mut().enumerate() {
        let n = s.node_count();
        let count = ceil_count(bus_fraction, n);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x9E27, k as u64));
        for i in sample(&mut rng, n, count) {
            s.features.scale_entry(i, FeatureMatrix::V_MAG, factor);
        }
    }
    Ok(dataset)
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: u32,
    case: String,
    seed: u64,
    criterion: SecurityCriterion,
    samples: usize,
    split: DatasetSplit,
}

/// Writes a header line followed by one JSON record per sample.
pub fn save_dataset(dataset: &GraphDataset, mut sink: impl Write) -> Result<()> {
    let header = Header {
        schema: DATASET_SCHEMA,
        case: dataset.case.clone(),
        seed: dataset.seed,
        criterion: dataset.criterion,
        samples: dataset.len(),
        split: dataset.split.clone(),
    };
    serde_json::to_writer(&mut sink, &header)?;
    sink.write_all(b"\n")?;
    for s in &dataset.samples {
        serde_json::to_writer(&mut sink, s)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn load_dataset(source: impl Read) -> Result<GraphDataset> {
    let mut lines = BufReader::new(source).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Schema("empty dataset file".into()))??;
    let probe: serde_json::Value = serde_json::from_str(&first)?;
    match probe.get("schema").and_then(|v| v.as_u64()) {
        Some(v) if v == DATASET_SCHEMA as u64 => {}
        other => {
            return Err(Error::Schema(format!(
                "dataset schema {other:?}, this build reads {DATASET_SCHEMA}"
            )))
        }
    }
    let header: Header = serde_json::from_value(probe)?;
    let mut samples = Vec::with_capacity(header.samples);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: LabeledGraphSample = serde_json::from_str(&line)?;
        s.check()?;
        samples.push(s);
    }
    if samples.len() != header.samples {
        return Err(Error::Schema(format!(
            "header announces {} samples, found {}",
            header.samples,
            samples.len()
        )));
    }
    if !header.split.is_empty() && !header.split.is_partition_of(samples.len()) {
        return Err(Error::Schema("split indices do not partition the samples".into()));
    }
    Ok(GraphDataset {
        case: header.case,
        seed: header.seed,
        criterion: header.criterion,
        samples,
        split: header.split,
    })
}

/// Tiny dataset for tests elsewhere in the crate.
#[cfg(test)]
pub(crate) fn toy_dataset(n: usize) -> GraphDataset {
    use crate::linalg::Matrix;
    let samples = (0..n)
        .map(|k| LabeledGraphSample {
            edges: vec![(0, 1), (1, 2)],
            features: FeatureMatrix::new(Matrix::from_fn(3, 7, |i, j| (k * 21 + i * 7 + j) as f64 / 7.0)).unwrap(),
            label: if k % 3 == 0 {
                SecurityClass::Insecure
            } else {
                SecurityClass::Secure
            },
            meta: SampleMeta {
                scenario: k,
                hour: Some(k % 24),
                contingency: vec![k % 2],
                transfer_mw: 10.0 * k as f64,
            },
        })
        .collect();
    GraphDataset {
        case: "toy".into(),
        seed: 1,
        criterion: SecurityCriterion::default(),
        samples,
        split: DatasetSplit::default(),
    }
}
