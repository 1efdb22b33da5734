use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{train_run, RunSpec, TrainedRun};
use super::svg::{bar_chart, Series};
use super::{FeatureGroup, ModelKind};
use crate::error::Result;
use crate::gcn::Classifier;
use crate::scenario::GraphDataset;

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut s = 0.0;
    for v in values {
        s += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Distinct (group, model) cells in first-seen order.
fn cells<R>(rows: &[R], key: impl Fn(&R) -> (FeatureGroup, ModelKind)) -> Vec<(FeatureGroup, ModelKind)> {
    let mut out: Vec<(FeatureGroup, ModelKind)> = Vec::new();
    for r in rows {
        let k = key(r);
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub group: FeatureGroup,
    pub model: ModelKind,
    pub seed: u64,
    pub train_f1: f64,
    pub train_g_mean: f64,
    pub val_f1: f64,
    pub val_g_mean: f64,
    pub test_f1: f64,
    pub test_g_mean: f64,
    pub runtime_secs: f64,
    pub parameters: usize,
}

const METRIC_COLUMNS: &str = "train_f1,train_g_mean,val_f1,val_g_mean,test_f1,test_g_mean";

impl CompareRow {
    fn metrics(&self) -> [f64; 6] {
        [
            self.train_f1,
            self.train_g_mean,
            self.val_f1,
            self.val_g_mean,
            self.test_f1,
            self.test_g_mean,
        ]
    }

    fn from_run(run: &TrainedRun) -> Self {
        let pair =
            |r: &Option<crate::metrics::EvalReport>| r.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.f1, r.g_mean));
        let (val_f1, val_g_mean) = pair(&run.validation);
        let (test_f1, test_g_mean) = pair(&run.test);
        Self {
            group: run.spec.group,
            model: run.spec.model,
            seed: run.spec.seed,
            train_f1: run.train.f1,
            train_g_mean: run.train.g_mean,
            val_f1,
            val_g_mean,
            test_f1,
            test_g_mean,
            runtime_secs: run.runtime_secs,
            parameters: run.parameter_count,
        }
    }
}

/// Per-run results of a feature-group × model × seed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn rows_for(&self, group: FeatureGroup, model: ModelKind) -> impl Iterator<Item = &CompareRow> {
        self.rows.iter().filter(move |r| r.group == group && r.model == model)
    }

    pub fn mean_test_f1(&self, group: FeatureGroup, model: ModelKind) -> f64 {
        mean(self.rows_for(group, model).map(|r| r.test_f1))
    }

    pub fn runs_csv(&self) -> String {
        let mut s = format!("group,model,seed,parameters,{METRIC_COLUMNS}\n");
        for r in &self.rows {
            let m = r.metrics().map(|v| v.to_string()).join(",");
            let _ = writeln!(s, "{},{},{},{},{m}", r.group, r.model, r.seed, r.parameters);
        }
        s
    }

    /// One row per (group, model): arithmetic means over runs.
    pub fn summary_csv(&self) -> String {
        let mut s = format!("group,model,runs,parameters,{METRIC_COLUMNS}\n");
        for (g, m) in cells(&self.rows, |r| (r.group, r.model)) {
            let rows: Vec<&CompareRow> = self.rows_for(g, m).collect();
            let means: Vec<String> = (0..6)
                .map(|k| mean(rows.iter().map(|r| r.metrics()[k])).to_string())
                .collect();
            let _ = writeln!(s, "{g},{m},{},{},{}", rows.len(), rows[0].parameters, means.join(","));
        }
        s
    }

    /// Wall-clock training time per run. Kept apart from the metric tables,
    /// which are byte-reproducible.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("group,model,seed,parameters,runtime_secs\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.group, r.model, r.seed, r.parameters, r.runtime_secs
            );
        }
        s
    }

    pub fn bar_chart_svg(&self) -> String {
        let groups: Vec<FeatureGroup> =
            cells(&self.rows, |r| (r.group, r.model))
                .into_iter()
                .map(|c| c.0)
                .fold(Vec::new(), |mut v, g| {
                    if !v.contains(&g) {
                        v.push(g);
                    }
                    v
                });
        let series = ModelKind::ALL
            .iter()
            .filter(|m| self.rows.iter().any(|r| r.model == **m))
            .map(|&m| Series {
                name: m.name().to_uppercase(),
                values: groups.iter().map(|&g| self.mean_test_f1(g, m)).collect(),
            })
            .collect::<Vec<_>>();
        let labels: Vec<String> = groups.iter().map(|g| g.to_string()).collect();
        bar_chart("Test F1 by feature group", &labels, &series)
    }
}

/// Trains every configured (group, model, seed) cell on `dataset`.
pub fn compare(dataset: &GraphDataset, config: &ExperimentConfig) -> Result<(CompareReport, Vec<TrainedRun>)> {
    config.validate()?;
    let mut specs = Vec::new();
    for &group in &config.feature_groups {
        for &model in &config.models {
            for seed in config.run_seeds() {
                specs.push(RunSpec { group, model, seed });
            }
        }
    }
    let runs: Vec<TrainedRun> = specs
        .par_iter()
        .map(|&spec| train_run(dataset, spec, &config.train))
        .collect::<Result<_>>()?;
    let rows = runs.iter().map(CompareRow::from_run).collect();
    Ok((CompareReport { rows }, runs))
}

fn test_f1(classifier: &Classifier, dataset: &GraphDataset) -> Result<f64> {
    Ok(classifier.evaluate(&dataset.subset(&dataset.split.test))?.f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub group: FeatureGroup,
    pub model: ModelKind,
    pub seed: u64,
    pub test_f1: f64,
    pub case1_f1: f64,
    pub case2_f1: f64,
}

impl RobustnessRow {
    pub fn worst_drop(&self) -> f64 {
        (self.test_f1 - self.case1_f1).max(self.test_f1 - self.case2_f1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("group,model,seed,test_f1,case1_f1,case2_f1\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.group, r.model, r.seed, r.test_f1, r.case1_f1, r.case2_f1
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("group,model,runs,test_f1,case1_f1,case2_f1\n");
        for (g, m) in cells(&self.rows, |r| (r.group, r.model)) {
            let rows: Vec<&RobustnessRow> = self.rows.iter().filter(|r| r.group == g && r.model == m).collect();
            let _ = writeln!(
                s,
                "{g},{m},{},{},{},{}",
                rows.len(),
                mean(rows.iter().map(|r| r.test_f1)),
                mean(rows.iter().map(|r| r.case1_f1)),
                mean(rows.iter().map(|r| r.case2_f1))
            );
        }
        s
    }

    pub fn bar_chart_svg(&self) -> String {
        let keys = cells(&self.rows, |r| (r.group, r.model));
        let labels: Vec<String> = keys.iter().map(|(g, m)| format!("{g} {m}")).collect();
        let series = [("Case 1", 0), ("Case 2", 1)]
            .iter()
            .map(|&(name, k)| Series {
                name: name.into(),
                values: keys
                    .iter()
                    .map(|&(g, m)| {
                        mean(self.rows.iter().filter(|r| r.group == g && r.model == m).map(|r| {
                            if k == 0 {
                                r.case1_f1
                            } else {
                                r.case2_f1
                            }
                        }))
                    })
                    .collect(),
            })
            .collect::<Vec<_>>();
        bar_chart("F1 on unseen operating conditions", &labels, &series)
    }
}

/// Evaluates trained classifiers on the base test split and on two unseen
/// datasets (their test splits).
pub fn robustness(
    models: &[(RunSpec, &Classifier)],
    base: &GraphDataset,
    case1: &GraphDataset,
    case2: &GraphDataset,
) -> Result<RobustnessReport> {
    let rows = models
        .par_iter()
        .map(|&(spec, c)| {
            Ok(RobustnessRow {
                group: spec.group,
                model: spec.model,
                seed: spec.seed,
                test_f1: test_f1(c, base)?,
                case1_f1: test_f1(c, case1)?,
                case2_f1: test_f1(c, case2)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RobustnessReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub group: FeatureGroup,
    pub model: ModelKind,
    pub seed: u64,
    pub test_f1: f64,
    pub perturbed_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("group,model,seed,test_f1,perturbed_f1\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.group, r.model, r.seed, r.test_f1, r.perturbed_f1);
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("group,model,runs,test_f1,perturbed_f1\n");
        for (g, m) in cells(&self.rows, |r| (r.group, r.model)) {
            let rows: Vec<&SensitivityRow> = self.rows.iter().filter(|r| r.group == g && r.model == m).collect();
            let _ = writeln!(
                s,
                "{g},{m},{},{},{}",
                rows.len(),
                mean(rows.iter().map(|r| r.test_f1)),
                mean(rows.iter().map(|r| r.perturbed_f1))
            );
        }
        s
    }
}

/// Test-split F1 before and after measurement perturbation. Models that
/// never see voltage are skipped.
pub fn sensitivity(
    models: &[(RunSpec, &Classifier)],
    base: &GraphDataset,
    perturbed: &GraphDataset,
) -> Result<SensitivityReport> {
    let rows = models
        .par_iter()
        .filter(|(spec, _)| spec.group.uses_voltage())
        .map(|&(spec, c)| {
            Ok(SensitivityRow {
                group: spec.group,
                model: spec.model,
                seed: spec.seed,
                test_f1: test_f1(c, base)?,
                perturbed_f1: test_f1(c, perturbed)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SensitivityReport { rows })
}
