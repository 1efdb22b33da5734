//! `gridsec` command-line entry point.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};

use gridsec::experiments::{
    checkpoint_name, compare, gen_data, robustness, sensitivity, svg, train_run, DatasetPaths, ExperimentConfig,
    FeatureGroup, ModelKind, RunSpec, Suite,
};
use gridsec::features::{assemble_features, compute_centralities, FEATURE_NAMES};
use gridsec::gcn::{
    gradcheck_classifier, normalize_adjacency, Classifier, GcnConfig, GcnModel, GraphBatch, MlpConfig, MlpModel,
    PreparedGraph,
};
use gridsec::grid::{apply_contingency, build_topology, is_connected, load_case, GraphTopology};
use gridsec::linalg::Matrix;
use gridsec::metrics::SecurityClass;
use gridsec::nn::{GradcheckReport, GRADCHECK_PROBES};
use gridsec::powerflow::solve_newton_raphson;
use gridsec::runtime;
use gridsec::scenario::load_dataset;

mod exit;

#[derive(Parser)]
#[command(version, about = "Voltage security assessment experiments on power-grid graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin case preset used when no config file is given.
    #[arg(long, default_value = "ieee30")]
    case: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory (config key `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                layered_config(&text, &self.case)?
            }
            None => ExperimentConfig::preset(&self.case)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a TOML file and fills every key it omits from the preset of its
/// `case` (or `default_case`).
fn layered_config(text: &str, default_case: &str) -> Result<ExperimentConfig> {
    let file: toml::Table = toml::from_str(text).map_err(exit::usage)?;
    let case = match file.get("case") {
        Some(toml::Value::String(c)) => c.clone(),
        Some(other) => return Err(exit::usage(format!("`case` must be a string, got {other}"))),
        None => default_case.to_string(),
    };
    let preset = match ExperimentConfig::preset(&case) {
        Ok(p) => p,
        // a case file path without a preset of its own borrows the ieee30 defaults
        Err(_) => ExperimentConfig {
            case: case.clone(),
            ..ExperimentConfig::preset("ieee30")?
        },
    };
    let mut merged = toml::Table::try_from(&preset)?;
    merge(&mut merged, file);
    toml::Value::Table(merged).try_into().map_err(exit::usage)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Base,
    Case1,
    Case2,
    Sensitivity,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Electrical,
    Topological,
    VoltagePlusTopological,
    Both,
}

impl From<GroupArg> for FeatureGroup {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Electrical => FeatureGroup::Electrical,
            GroupArg::Topological => FeatureGroup::Topological,
            GroupArg::VoltagePlusTopological => FeatureGroup::VoltagePlusTopological,
            GroupArg::Both => FeatureGroup::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gcn,
    Mlp,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gcn => ModelKind::Gcn,
            ModelArg::Mlp => ModelKind::Mlp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate labeled datasets (base N-1, unseen operating point, N-1-1,
    /// perturbed test set) into `<out>/data`.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "base")]
        suite: SuiteArg,
    },
    /// Train one model and write its checkpoint, history and summary.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset file; defaults to `<out>/data/base.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        group: GroupArg,
        #[arg(long, value_enum, default_value = "gcn")]
        model: ModelArg,
    },
    /// Train every feature group, model and seed; write tables and a chart.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Evaluate saved checkpoints on the unseen datasets.
    Robustness {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate saved checkpoints on the perturbed test set.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Override the voltage perturbation magnitude (fraction).
        #[arg(long)]
        magnitude: Option<f64>,
    },
    /// Print the feature matrix of a case after removing branches.
    Features {
        #[arg(long, default_value = "ieee14")]
        case: String,
        /// Comma-separated branch indices to take out of service.
        #[arg(long, value_delimiter = ',')]
        outage: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Finite-difference check of GCN and MLP gradients on small graphs.
    Gradcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(&cfg.output_dir)
}

fn data_paths(cfg: &ExperimentConfig) -> DatasetPaths {
    DatasetPaths(out_dir(cfg).join("data"))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn open_dataset(path: &Path) -> Result<gridsec::scenario::GraphDataset> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(load_dataset(std::io::BufReader::new(file))?)
}

fn run() -> Result<()> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            e.print()?;
            return Ok(());
        }
        Err(e) => {
            return Err(exit::usage(
                e.render().to_string().trim_end().trim_start_matches("error: "),
            ))
        }
    };
    match cli.command {
        Command::GenData { common, suite } => {
            let cfg = common.resolve()?;
            let suites = match suite {
                SuiteArg::Base => vec![Suite::Base],
                SuiteArg::Case1 => vec![Suite::Case1],
                SuiteArg::Case2 => vec![Suite::Case2],
                SuiteArg::Sensitivity => vec![Suite::Sensitivity],
                SuiteArg::All => Suite::ALL.to_vec(),
            };
            let dir = data_paths(&cfg).0;
            let manifest = gen_data(&cfg, &suites, &dir)?;
            for e in &manifest.entries {
                println!(
                    "{:<12} {:>7} samples {:>7} secure  {}",
                    format!("{:?}", e.suite),
                    e.samples,
                    e.secure,
                    dir.join(&e.file).display()
                );
            }
        }
        Command::Train {
            common,
            dataset,
            group,
            model,
        } => {
            let cfg = common.resolve()?;
            let path = dataset.unwrap_or_else(|| data_paths(&cfg).file(Suite::Base));
            let data = open_dataset(&path)?;
            let spec = RunSpec {
                group: group.into(),
                model: model.into(),
                seed: cfg.seed,
            };
            let run = train_run(&data, spec, &cfg.train)?;
            let dir = out_dir(&cfg).join("train");
            let stem = checkpoint_name(&spec);
            let stem = stem.trim_end_matches(".json");
            let mut ckpt = Vec::new();
            run.classifier.save(&mut ckpt)?;
            write(&dir.join(format!("{stem}.json")), std::str::from_utf8(&ckpt)?)?;
            write(&dir.join(format!("{stem}-history.csv")), &run.history.to_csv())?;
            let curves = |f: fn(&gridsec::gcn::EpochRecord) -> f64| run.history.records.iter().map(f).collect();
            write(
                &dir.join(format!("{stem}-history.svg")),
                &svg::line_chart(
                    "Loss and F1 per epoch",
                    &[
                        svg::Series {
                            name: "train loss".into(),
                            values: curves(|r| r.train_loss),
                        },
                        svg::Series {
                            name: "val loss".into(),
                            values: curves(|r| r.val_loss),
                        },
                        svg::Series {
                            name: "train F1".into(),
                            values: curves(|r| r.train_f1),
                        },
                        svg::Series {
                            name: "val F1".into(),
                            values: curves(|r| r.val_f1),
                        },
                    ],
                ),
            )?;
            let summary = serde_json::json!({
                "spec": spec,
                "parameters": run.parameter_count,
                "runtime_secs": run.runtime_secs,
                "selected_epoch": run.history.selected_epoch,
                "train": run.train,
                "validation": run.validation,
                "test": run.test,
            });
            write(
                &dir.join(format!("{stem}-summary.json")),
                &serde_json::to_string_pretty(&summary)?,
            )?;
            if let Some(t) = &run.test {
                println!("test F1 {:.4}  G-mean {:.4}", t.f1, t.g_mean);
            }
        }
        Command::Compare { common, dataset } => {
            let cfg = common.resolve()?;
            let path = dataset.unwrap_or_else(|| data_paths(&cfg).file(Suite::Base));
            let data = open_dataset(&path)?;
            let (report, runs) = compare(&data, &cfg)?;
            let dir = out_dir(&cfg);
            for run in &runs {
                let mut buf = Vec::new();
                run.classifier.save(&mut buf)?;
                write(
                    &dir.join("checkpoints").join(checkpoint_name(&run.spec)),
                    std::str::from_utf8(&buf)?,
                )?;
            }
            write(&dir.join("compare_runs.csv"), &report.runs_csv())?;
            write(&dir.join("compare.csv"), &report.summary_csv())?;
            write(&dir.join("compare_timing.csv"), &report.timing_csv())?;
            write(&dir.join("compare.svg"), &report.bar_chart_svg())?;
            print!("{}", report.summary_csv());
        }
        Command::Robustness { common } => {
            let cfg = common.resolve()?;
            let paths = data_paths(&cfg);
            let base = paths.load(Suite::Base)?;
            let case1 = paths.load(Suite::Case1)?;
            let case2 = paths.load(Suite::Case2)?;
            let models = load_checkpoints(&cfg)?;
            let refs: Vec<(RunSpec, &Classifier)> = models.iter().map(|(s, c)| (*s, c)).collect();
            let report = robustness(&refs, &base, &case1, &case2)?;
            let dir = out_dir(&cfg);
            write(&dir.join("robustness_runs.csv"), &report.csv())?;
            write(&dir.join("robustness.csv"), &report.summary_csv())?;
            write(&dir.join("robustness.svg"), &report.bar_chart_svg())?;
            print!("{}", report.summary_csv());
        }
        Command::Sensitivity { common, magnitude } => {
            let cfg = common.resolve()?;
            let paths = data_paths(&cfg);
            let base = paths.load(Suite::Base)?;
            let perturbed = match magnitude {
                Some(m) => cfg.sensitivity_set(&base, m)?,
                None => paths.load(Suite::Sensitivity)?,
            };
            let models = load_checkpoints(&cfg)?;
            let refs: Vec<(RunSpec, &Classifier)> = models.iter().map(|(s, c)| (*s, c)).collect();
            let report = sensitivity(&refs, &base, &perturbed)?;
            let dir = out_dir(&cfg);
            write(&dir.join("sensitivity_runs.csv"), &report.csv())?;
            write(&dir.join("sensitivity.csv"), &report.summary_csv())?;
            print!("{}", report.summary_csv());
        }
        Command::Features { case, outage, json } => {
            let case = apply_contingency(&load_case(&case)?, &outage)?;
            if !is_connected(&build_topology(&case)) {
                bail!(exit::usage(anyhow::anyhow!("outage {outage:?} islands the network")));
            }
            let sol = solve_newton_raphson(&case, 1e-8, 30)?;
            if !sol.converged {
                return Err(gridsec::Error::Numeric(
                    sol.diagnostic.unwrap_or_else(|| "power flow did not converge".into()),
                )
                .into());
            }
            let feats = assemble_features(&case, &sol, &compute_centralities(&case, runtime::reduction())?)?;
            if json {
                println!("{}", serde_json::to_string(&feats)?);
            } else {
                println!("bus,{}", FEATURE_NAMES.join(","));
                for (i, bus) in case.buses().iter().enumerate() {
                    let row: Vec<String> = feats.row(i).iter().map(|v| v.to_string()).collect();
                    println!("{},{}", bus.id, row.join(","));
                }
            }
        }
        Command::Gradcheck { seed, tolerance } => {
            let worst = gradcheck_models(seed)?;
            for (name, r) in &worst {
                println!(
                    "{name}: max relative error {:.3e} over {} coordinates ({} on kinks skipped)",
                    r.max_rel_error, r.probed, r.skipped
                );
            }
            if worst
                .iter()
                .any(|(_, r)| r.max_rel_error.is_nan() || r.max_rel_error >= tolerance)
            {
                return Err(gridsec::Error::Numeric(format!("gradient check above {tolerance}")).into());
            }
        }
    }
    Ok(())
}

fn load_checkpoints(cfg: &ExperimentConfig) -> Result<Vec<(RunSpec, Classifier)>> {
    let dir = out_dir(cfg).join("checkpoints");
    let mut out = Vec::new();
    for &group in &cfg.feature_groups {
        for &model in &cfg.models {
            for seed in cfg.run_seeds() {
                let spec = RunSpec { group, model, seed };
                let path = dir.join(checkpoint_name(&spec));
                let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                let c = Classifier::load(std::io::BufReader::new(file), None)?;
                if c.preprocessor.columns != group.columns() {
                    return Err(gridsec::Error::Architecture(format!(
                        "{} was trained on columns {:?}, not the {group} group",
                        path.display(),
                        c.preprocessor.columns
                    ))
                    .into());
                }
                out.push((spec, c));
            }
        }
    }
    Ok(out)
}

/// Random connected graphs of 4 to 6 nodes with random features.
fn random_graphs(rng: &mut impl Rng, count: usize, nodes: Option<usize>) -> Result<Vec<PreparedGraph<f64>>> {
    let mut out = Vec::new();
    while out.len() < count {
        let n = nodes.unwrap_or_else(|| rng.gen_range(4..=6));
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.3) {
                    edges.push((a, b));
                }
            }
        }
        let topo = GraphTopology::from_edges(n, edges)?;
        let x = Matrix::from_fn(n, 7, |_, _| rng.gen_range(-1.0..1.0));
        let label = if rng.gen_bool(0.5) {
            SecurityClass::Secure
        } else {
            SecurityClass::Insecure
        };
        out.push(PreparedGraph::new(x, normalize_adjacency(&topo), label)?);
    }
    Ok(out)
}

fn gradcheck_models(seed: u64) -> Result<Vec<(&'static str, GradcheckReport<f64>)>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let graphs = random_graphs(&mut rng, 4, None)?;
    let refs: Vec<&PreparedGraph<f64>> = graphs.iter().collect();
    let labels: Vec<usize> = graphs.iter().map(|g| g.label.index()).collect();
    let batch = GraphBatch::from_graphs(&refs)?;
    let mut gcn = GcnModel::<f64>::new(GcnConfig::default(), seed)?;
    let g = gradcheck_classifier(&mut gcn, &batch, &labels, GRADCHECK_PROBES, seed)?;
    let fixed = random_graphs(&mut rng, 4, Some(5))?;
    let refs: Vec<&PreparedGraph<f64>> = fixed.iter().collect();
    let labels: Vec<usize> = fixed.iter().map(|g| g.label.index()).collect();
    let batch = GraphBatch::from_graphs(&refs)?;
    let mut mlp = MlpModel::<f64>::new(
        MlpConfig::matched(5, 7, 2, GcnConfig::default().parameter_count()),
        seed,
    )?;
    let m = gradcheck_classifier(&mut mlp, &batch, &labels, GRADCHECK_PROBES, seed)?;
    Ok(vec![("gcn", g), ("mlp", m)])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    runtime::init_worker_pool();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_preset_values() {
        let cfg = layered_config("case = \"ieee14\"\n[train]\nepochs = 9\n", "ieee30").unwrap();
        let preset = ExperimentConfig::preset("ieee14").unwrap();
        assert_eq!(cfg.train.epochs, 9);
        assert_eq!(cfg.train.learning_rate, preset.train.learning_rate);
        assert_eq!(cfg.generation, preset.generation);
    }

    #[test]
    fn missing_case_falls_back_to_flag() {
        let cfg = layered_config("seed = 3\n", "ieee14").unwrap();
        assert_eq!((cfg.case.as_str(), cfg.seed), ("ieee14", 3));
    }

    #[test]
    fn nested_tables_merge_keywise() {
        let cfg = layered_config("[generation.sweep]\nincrement = 5.0\n", "ieee30").unwrap();
        let preset = ExperimentConfig::preset("ieee30").unwrap();
        assert_eq!(cfg.generation.sweep.increment, 5.0);
        assert_eq!(cfg.generation.sweep.source_buses, preset.generation.sweep.source_buses);
    }

    #[test]
    fn shipped_configs_parse() {
        let desk = layered_config(include_str!("../../../configs/ieee30-desk.toml"), "ieee14").unwrap();
        assert_eq!(desk, ExperimentConfig::preset("ieee30").unwrap());
        let quick = layered_config(include_str!("../../../configs/ieee14-quick.toml"), "ieee30").unwrap();
        quick.validate().unwrap();
        assert_eq!(quick.generation.hours, Some(vec![8, 18]));
    }
}
