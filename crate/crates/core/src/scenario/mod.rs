//! Labeled post-contingency datasets: load-profile scaling, contingency
//! enumeration, transfer sweeps, voltage-security labels, splits and
//! JSON-lines storage.

mod dataset;
mod generate;
mod profile;

pub use dataset::{
    load_dataset, perturb_voltages, save_dataset, split_dataset, DatasetSplit, GraphDataset, LabeledGraphSample,
    SampleMeta, DATASET_SCHEMA,
};
pub use generate::{all_line_pairs, generate_dataset, generate_n11_dataset, n1_contingencies, GenerationSummary};
pub use profile::{label_solution, scale_loads, LoadProfile, SecurityCriterion, DUCK_CURVE};

/// `⌈fraction · n⌉`, tolerant to representation error in the product.
pub(crate) fn ceil_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
    .min(n)
}
