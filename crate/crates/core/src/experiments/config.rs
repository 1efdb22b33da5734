use serde::{Deserialize, Serialize};

use super::{FeatureGroup, ModelKind};
use crate::error::{Error, Result};
use crate::gcn::TrainConfig;
use crate::powerflow::TransferSweepParams;
use crate::scenario::{LoadProfile, SecurityCriterion, DUCK_CURVE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    /// Hours of the load profile used for the base dataset; all when absent.
    #[serde(default)]
    pub hours: Option<Vec<usize>>,
    #[serde(default = "default_factors")]
    pub hourly_factors: Vec<f64>,
    #[serde(default = "default_fraction")]
    pub load_bus_fraction: f64,
    pub sweep: TransferSweepParams,
    #[serde(default)]
    pub criterion: SecurityCriterion,
    /// Train / validation / test ratios.
    #[serde(default = "default_ratios")]
    pub split: (f64, f64, f64),
    /// Hour of the unseen operating point; drawn from the seed when absent.
    #[serde(default)]
    pub case1_hour: Option<usize>,
    /// Double-line pairs that get full transfer sweeps.
    #[serde(default)]
    pub n11_swept_pairs: usize,
}

fn default_factors() -> Vec<f64> {
    DUCK_CURVE.to_vec()
}

fn default_fraction() -> f64 {
    0.7
}

fn default_ratios() -> (f64, f64, f64) {
    (0.6, 0.2, 0.2)
}

impl GenerationConfig {
    pub fn profile(&self) -> Result<LoadProfile> {
        let p = LoadProfile::new(self.hourly_factors.clone(), self.load_bus_fraction)?;
        match &self.hours {
            Some(h) => p.with_hours(h.clone()),
            None => Ok(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub bus_fraction: f64,
    pub magnitude_fraction: f64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            bus_fraction: 0.10,
            magnitude_fraction: 0.05,
        }
    }
}

/// Everything one experiment needs. The CLI layers partial config files over
/// [`ExperimentConfig::preset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin case name or path to a case file.
    pub case: String,
    pub seed: u64,
    pub runs: usize,
    pub output_dir: String,
    pub feature_groups: Vec<FeatureGroup>,
    pub models: Vec<ModelKind>,
    pub train: TrainConfig,
    pub generation: GenerationConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
}

impl ExperimentConfig {
    /// Desk-scale defaults for the bundled cases.
    ///
    /// `ieee30` and `ieee14` use a reduced sweep (0 to 200 MW in 20 MW steps)
    /// and a subset of hours so the whole suite runs in minutes; `ieee118`
    /// uses the full day and a 1000 MW sweep and takes hours.
    pub fn preset(case: &str) -> Result<Self> {
        let sweep = |src: &[u32], snk: &[u32], init: f64, inc: f64, max: f64| TransferSweepParams {
            initial_transfer: init,
            increment: inc,
            max_transfer: max,
            mismatch_tol: 0.5,
            source_buses: src.to_vec(),
            sink_buses: snk.to_vec(),
            max_iterations: 30,
        };
        let (hours, sweep, pairs, epochs) = match case {
            "ieee14" => (
                Some(vec![0, 4, 8, 12, 16, 20]),
                sweep(&[2, 3, 6], &[9, 10, 13, 14], 0.0, 20.0, 200.0),
                30,
                200,
            ),
            "ieee30" => (
                Some(vec![0, 4, 8, 12, 16, 20]),
                sweep(&[2, 5, 8], &[19, 24, 26, 29, 30], 0.0, 20.0, 200.0),
                50,
                200,
            ),
            "ieee118" => (
                None,
                sweep(&[65, 66, 69], &[20, 21, 22, 23, 115], 10.0, 10.0, 1000.0),
                500,
                200,
            ),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "no preset for `{other}`; write a config file"
                )))
            }
        };
        Ok(Self {
            case: case.to_string(),
            seed: 7,
            runs: if case == "ieee118" { 10 } else { 5 },
            output_dir: format!("runs/{case}"),
            feature_groups: FeatureGroup::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            train: TrainConfig {
                epochs,
                ..TrainConfig::default()
            },
            generation: GenerationConfig {
                hours,
                hourly_factors: default_factors(),
                load_bus_fraction: default_fraction(),
                sweep,
                criterion: SecurityCriterion::default(),
                split: default_ratios(),
                case1_hour: None,
                n11_swept_pairs: pairs,
            },
            sensitivity: SensitivityConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if self.feature_groups.is_empty() || self.models.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one feature group and model".into(),
            ));
        }
        if self.train.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        self.generation.profile()?;
        Ok(())
    }

    /// Model seeds, one per run.
    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }
}
