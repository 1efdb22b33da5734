//! Experiment orchestration: dataset suites, training runs over feature
//! groups, model kinds and seeds, and tabular reports with SVG charts.

mod config;
mod report;
mod run;
mod suite;
pub mod svg;

pub use config::{ExperimentConfig, GenerationConfig, SensitivityConfig};
pub use report::{
    compare, robustness, sensitivity, CompareReport, CompareRow, RobustnessReport, RobustnessRow, SensitivityReport,
    SensitivityRow,
};
pub use run::{checkpoint_name, train_run, RunSpec, TrainedRun};
pub use suite::{gen_data, DatasetManifest, DatasetPaths, Suite};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which feature-matrix columns a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureGroup {
    Electrical,
    Topological,
    VoltagePlusTopological,
    Both,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Electrical,
        FeatureGroup::Topological,
        FeatureGroup::VoltagePlusTopological,
        FeatureGroup::Both,
    ];

    /// Column indices, always in feature-matrix order.
    pub fn columns(self) -> Vec<usize> {
        match self {
            Self::Electrical => vec![0, 1, 2],
            Self::Topological => vec![3, 4, 5, 6],
            Self::VoltagePlusTopological => vec![0, 3, 4, 5, 6],
            Self::Both => (0..7).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Electrical => "electrical",
            Self::Topological => "topological",
            Self::VoltagePlusTopological => "voltage-plus-topological",
            Self::Both => "both",
        }
    }

    pub fn uses_voltage(self) -> bool {
        self.columns().contains(&0)
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature group `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gcn,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Gcn, ModelKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gcn => "gcn",
            Self::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Self::Gcn),
            "mlp" => Ok(Self::Mlp),
            _ => Err(Error::InvalidArgument(format!("unknown model `{s}`"))),
        }
    }
}
