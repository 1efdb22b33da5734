use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::grid::{load_case, GridCase};
use crate::runtime::mix_seed;
use crate::scenario::{
    generate_dataset, generate_n11_dataset, load_dataset, n1_contingencies, perturb_voltages, save_dataset,
    split_dataset, GenerationSummary, GraphDataset,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// N-1 outages over the profile hours with transfer sweeps, split.
    Base,
    /// N-1 outages at one unseen operating point.
    Case1,
    /// Double-line outages.
    Case2,
    /// Base test split with perturbed voltage measurements.
    Sensitivity,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Base, Suite::Case1, Suite::Case2, Suite::Sensitivity];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Base => "base.jsonl",
            Self::Case1 => "case1.jsonl",
            Self::Case2 => "case2.jsonl",
            Self::Sensitivity => "sensitivity.jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub suite: Suite,
    pub file: String,
    pub samples: usize,
    pub secure: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<GenerationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub case: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// Where each suite's file lives inside a directory.
#[derive(Debug, Clone)]
pub struct DatasetPaths(pub PathBuf);

impl DatasetPaths {
    pub fn file(&self, suite: Suite) -> PathBuf {
        self.0.join(suite.file_name())
    }

    pub fn manifest(&self) -> PathBuf {
        self.0.join("manifest.json")
    }

    pub fn load(&self, suite: Suite) -> Result<GraphDataset> {
        load_dataset(File::open(self.file(suite))?)
    }
}

impl ExperimentConfig {
    pub fn load_case(&self) -> Result<GridCase> {
        load_case(&self.case)
    }

    /// Split N-1 dataset over the configured hours.
    pub fn generate_base(&self, case: &GridCase) -> Result<(GraphDataset, GenerationSummary)> {
        let g = &self.generation;
        let (d, summary) = generate_dataset(
            case,
            &g.profile()?,
            &n1_contingencies(case),
            &g.sweep,
            &g.criterion,
            self.seed,
        )?;
        Ok((split_dataset(d, g.split, self.seed)?, summary))
    }

    pub fn case1_hour(&self) -> usize {
        self.generation
            .case1_hour
            .unwrap_or((mix_seed(self.seed, 0xCA5E_0001, 0) % 24) as usize)
    }

    /// N-1 outages at one operating point with a freshly drawn load subset.
    pub fn generate_case1(&self, case: &GridCase) -> Result<(GraphDataset, GenerationSummary)> {
        let g = &self.generation;
        let profile = g.profile()?.with_hours(vec![self.case1_hour()])?;
        let seed = mix_seed(self.seed, 0xCA5E_0001, 1);
        let (d, summary) = generate_dataset(case, &profile, &n1_contingencies(case), &g.sweep, &g.criterion, seed)?;
        Ok((all_test(d), summary))
    }

    pub fn generate_case2(&self, case: &GridCase) -> Result<(GraphDataset, GenerationSummary)> {
        let g = &self.generation;
        let (d, summary) = generate_n11_dataset(case, &g.sweep, &g.criterion, self.seed, g.n11_swept_pairs)?;
        Ok((all_test(d), summary))
    }

    /// The base test split with perturbed voltages.
    pub fn sensitivity_set(&self, base: &GraphDataset, magnitude_fraction: f64) -> Result<GraphDataset> {
        perturb_voltages(
            base.select_as_test(&base.split.test),
            self.sensitivity.bus_fraction,
            magnitude_fraction,
            mix_seed(self.seed, 0x5E45, 0),
        )
    }
}

fn all_test(mut d: GraphDataset) -> GraphDataset {
    d.split.test = (0..d.len()).collect();
    d
}

fn write(dataset: &GraphDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    save_dataset(dataset, &mut w)?;
    Ok(())
}

/// Generates the requested suites into `out_dir` and writes a manifest.
pub fn gen_data(config: &ExperimentConfig, suites: &[Suite], out_dir: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    if suites.is_empty() {
        return Err(Error::InvalidArgument("no suite requested".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let paths = DatasetPaths(out_dir.to_path_buf());
    let case = config.load_case()?;
    let mut entries = Vec::new();
    let mut record = |suite: Suite, d: &GraphDataset, summary: Option<GenerationSummary>| -> Result<()> {
        write(d, &paths.file(suite))?;
        log::info!("{suite:?}: {} samples, {} secure", d.len(), d.secure_count());
        entries.push(ManifestEntry {
            suite,
            file: suite.file_name().into(),
            samples: d.len(),
            secure: d.secure_count(),
            summary,
        });
        Ok(())
    };
    let mut base = None;
    if suites.contains(&Suite::Base) || suites.contains(&Suite::Sensitivity) {
        let (d, s) = config.generate_base(&case)?;
        if suites.contains(&Suite::Base) {
            record(Suite::Base, &d, Some(s))?;
        }
        base = Some(d);
    }
    if suites.contains(&Suite::Case1) {
        let (d, s) = config.generate_case1(&case)?;
        record(Suite::Case1, &d, Some(s))?;
    }
    if suites.contains(&Suite::Case2) {
        let (d, s) = config.generate_case2(&case)?;
        record(Suite::Case2, &d, Some(s))?;
    }
    if suites.contains(&Suite::Sensitivity) {
        let d = config.sensitivity_set(
            base.as_ref().expect("generated above"),
            config.sensitivity.magnitude_fraction,
        )?;
        record(Suite::Sensitivity, &d, None)?;
    }
    let manifest = DatasetManifest {
        case: case.name().to_string(),
        seed: config.seed,
        entries,
    };
    std::fs::write(paths.manifest(), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
