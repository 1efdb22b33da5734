use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{FeatureGroup, ModelKind};
use crate::error::{Error, Result};
use crate::gcn::{
    predict, AnyModel, Architecture, Classifier, GcnConfig, History, MlpConfig, PreparedGraph, Preprocessor,
    TrainConfig,
};
use crate::metrics::{evaluate, EvalReport, SecurityClass};
use crate::scenario::GraphDataset;

/// One cell of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunSpec {
    pub group: FeatureGroup,
    pub model: ModelKind,
    pub seed: u64,
}

pub fn checkpoint_name(spec: &RunSpec) -> String {
    format!("{}-{}-seed{}.json", spec.model, spec.group, spec.seed)
}

pub struct TrainedRun {
    pub spec: RunSpec,
    pub classifier: Classifier,
    pub history: History,
    pub train: EvalReport,
    pub validation: Option<EvalReport>,
    pub test: Option<EvalReport>,
    pub runtime_secs: f64,
    pub parameter_count: usize,
}

/// Architecture for `kind` on `nodes`-bus graphs with `features` columns.
/// The MLP is sized to the GCN's parameter count.
pub fn architecture_for(kind: ModelKind, nodes: usize, features: usize) -> Architecture {
    let gcn = GcnConfig::default().with_input_dim(features);
    match kind {
        ModelKind::Gcn => Architecture::Gcn(gcn),
        ModelKind::Mlp => Architecture::Mlp(MlpConfig::matched(nodes, features, 2, gcn.parameter_count())),
    }
}

fn report(model: &AnyModel, graphs: &[PreparedGraph<f64>]) -> Result<Option<EvalReport>> {
    if graphs.is_empty() {
        return Ok(None);
    }
    let labels: Vec<SecurityClass> = graphs.iter().map(|g| g.label).collect();
    evaluate(&predict(model, graphs)?, &labels, SecurityClass::Secure).map(Some)
}

/// Fits the feature transform on the training split, trains one model and
/// evaluates it on all three splits.
pub fn train_run(dataset: &GraphDataset, spec: RunSpec, config: &TrainConfig) -> Result<TrainedRun> {
    let split = &dataset.split;
    if split.train.is_empty() {
        return Err(Error::InvalidArgument("dataset has no training split".into()));
    }
    let nodes = dataset.samples[split.train[0]].node_count();
    if spec.model == ModelKind::Mlp && dataset.samples.iter().any(|s| s.node_count() != nodes) {
        return Err(Error::InvalidArgument("MLP needs graphs of one size".into()));
    }
    let pre = Preprocessor::fit(spec.group.columns(), dataset.subset(&split.train))?;
    let prepare = |idx: &[usize]| pre.prepare_all::<f64>(dataset.subset(idx));
    let (tr, va, te) = (
        prepare(&split.train)?,
        prepare(&split.validation)?,
        prepare(&split.test)?,
    );
    let arch = architecture_for(spec.model, nodes, pre.output_dim());
    let mut model = AnyModel::new(&arch, spec.seed)?;
    let cfg = TrainConfig {
        seed: spec.seed,
        ..config.clone()
    };
    let start = Instant::now();
    let history = crate::gcn::train(&mut model, &tr, &va, &cfg)?;
    let runtime_secs = start.elapsed().as_secs_f64();
    log::info!(
        "trained {} on {} (seed {}) in {runtime_secs:.1}s",
        spec.model,
        spec.group,
        spec.seed
    );
    Ok(TrainedRun {
        spec,
        train: report(&model, &tr)?.expect("non-empty"),
        validation: report(&model, &va)?,
        test: report(&model, &te)?,
        parameter_count: arch.parameter_count(),
        classifier: Classifier::new(model, pre)?,
        history,
        runtime_secs,
    })
}
