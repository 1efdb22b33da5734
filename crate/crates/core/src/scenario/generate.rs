use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetSplit, GraphDataset, LabeledGraphSample, SampleMeta};
use super::profile::{label_solution, scale_loads, LoadProfile, SecurityCriterion};
use crate::error::{Error, Result, ScenarioDiagnostic};
use crate::features::{assemble_features, compute_centralities, CentralityVector};
use crate::grid::{apply_contingency, build_topology, is_connected, GridCase};
use crate::powerflow::{pv_transfer_sweep, solve_newton_raphson, PowerFlowSolution, TransferSweepParams};
use crate::runtime::{mix_seed, reduction};

/// Counts from one generation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub scenarios: usize,
    pub samples: usize,
    pub secure: usize,
    pub islanded: usize,
    pub without_solution: usize,
    pub diagnostics: Vec<ScenarioDiagnostic>,
}

/// One single-branch outage per transmission line (transformers, i.e.
/// branches with an off-nominal tap, are excluded).
pub fn n1_contingencies(case: &GridCase) -> Vec<Vec<usize>> {
    line_indices(case).into_iter().map(|k| vec![k]).collect()
}

/// Every unordered pair of transmission lines.
pub fn all_line_pairs(case: &GridCase) -> Vec<Vec<usize>> {
    let lines = line_indices(case);
    let mut pairs = Vec::new();
    for (a, &i) in lines.iter().enumerate() {
        for &j in &lines[a + 1..] {
            pairs.push(vec![i, j]);
        }
    }
    pairs
}

fn line_indices(case: &GridCase) -> Vec<usize> {
    case.branches()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.in_service && b.tap_ratio == 1.0)
        .map(|(k, _)| k)
        .collect()
}

struct Scenario {
    index: usize,
    hour: Option<usize>,
    contingency: usize,
    sweep: bool,
}

struct Context<'a> {
    case: &'a GridCase,
    profile: Option<&'a LoadProfile>,
    contingencies: &'a [Vec<usize>],
    centralities: Vec<Option<CentralityVector>>,
    sweep: &'a TransferSweepParams,
    criterion: &'a SecurityCriterion,
    seed: u64,
}

enum Outcome {
    Samples(Vec<LabeledGraphSample>),
    Islanded(ScenarioDiagnostic),
    NoSolution(ScenarioDiagnostic),
}

impl Context<'_> {
    fn diagnostic(&self, sc: &Scenario, reason: String) -> ScenarioDiagnostic {
        ScenarioDiagnostic {
            scenario: sc.index,
            hour: sc.hour,
            contingency: self.contingencies[sc.contingency].clone(),
            reason,
        }
    }

    fn run(&self, sc: &Scenario) -> Result<Outcome> {
        let outage = &self.contingencies[sc.contingency];
        let Some(centralities) = &self.centralities[sc.contingency] else {
            return Ok(Outcome::Islanded(self.diagnostic(sc, "islanded".into())));
        };
        let loaded = match (sc.hour, self.profile) {
            (Some(h), Some(p)) => scale_loads(self.case, p, h, self.seed)?,
            _ => self.case.clone(),
        };
        let post = apply_contingency(&loaded, outage)?;
        let points: Vec<(f64, PowerFlowSolution)> = if sc.sweep {
            let criterion = self.criterion;
            let result = pv_transfer_sweep(&post, self.sweep, |s| criterion.violated_by(&s.v_mag))?;
            if result.points.is_empty() {
                let reason = result.diagnostic.unwrap_or_else(|| "no converged point".into());
                return Ok(Outcome::NoSolution(self.diagnostic(sc, reason)));
            }
            result.points.into_iter().map(|p| (p.transfer_mw, p.solution)).collect()
        } else {
            let tol = self.sweep.mismatch_tol / post.base_mva();
            let sol = solve_newton_raphson(&post, tol, self.sweep.max_iterations)?;
            if !sol.converged {
                let reason = sol.diagnostic.clone().unwrap_or_else(|| "not converged".into());
                return Ok(Outcome::NoSolution(self.diagnostic(sc, reason)));
            }
            vec![(0.0, sol)]
        };
        let edges = build_topology(&post).edges().to_vec();
        let mut samples = Vec::with_capacity(points.len());
        for (transfer_mw, solution) in points {
            samples.push(LabeledGraphSample {
                edges: edges.clone(),
                features: assemble_features(&post, &solution, centralities)?,
                label: label_solution(&solution, self.criterion)?,
                meta: SampleMeta {
                    scenario: sc.index,
                    hour: sc.hour,
                    contingency: outage.clone(),
                    transfer_mw,
                },
            });
        }
        Ok(Outcome::Samples(samples))
    }
}

fn centrality_table(case: &GridCase, contingencies: &[Vec<usize>]) -> Result<Vec<Option<CentralityVector>>> {
    let red = reduction();
    contingencies
        .par_iter()
        .map(|outage| {
            let post = apply_contingency(case, outage)?;
            if !is_connected(&build_topology(&post)) {
                return Ok(None);
            }
            compute_centralities(&post, red).map(Some)
        })
        .collect()
}

fn run_all(ctx: &Context<'_>, scenarios: &[Scenario]) -> Result<(Vec<LabeledGraphSample>, GenerationSummary)> {
    let outcomes: Vec<Outcome> = scenarios.par_iter().map(|sc| ctx.run(sc)).collect::<Result<_>>()?;
    let mut summary = GenerationSummary {
        scenarios: scenarios.len(),
        ..Default::default()
    };
    let mut samples = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Samples(s) => samples.extend(s),
            Outcome::Islanded(d) => {
                log::info!("skipped {d}");
                summary.islanded += 1;
                summary.diagnostics.push(d);
            }
            Outcome::NoSolution(d) => {
                log::info!("skipped {d}");
                summary.without_solution += 1;
                summary.diagnostics.push(d);
            }
        }
    }
    summary.samples = samples.len();
    summary.secure = samples
        .iter()
        .filter(|s| s.label == crate::metrics::SecurityClass::Secure)
        .count();
    if samples.is_empty() {
        return Err(Error::NoSamples(summary.diagnostics));
    }
    Ok((samples, summary))
}

fn dataset(
    case: &GridCase,
    criterion: &SecurityCriterion,
    seed: u64,
    samples: Vec<LabeledGraphSample>,
) -> GraphDataset {
    GraphDataset {
        case: case.name().to_string(),
        seed,
        criterion: *criterion,
        samples,
        split: DatasetSplit::default(),
    }
}

/// Labeled operating points for every (hour, contingency) pair.
///
/// Each hour scales the loads, each contingency removes its branches;
/// islanded scenarios are skipped. Every converged point of the transfer
/// sweep becomes a sample, and the sweep ends at the first voltage
/// violation (kept) or the first failed solve (dropped). An empty
/// contingency list yields one unswept base point per hour. The result is
/// unsplit; see [`super::split_dataset`].
pub fn generate_dataset(
    case: &GridCase,
    profile: &LoadProfile,
    contingencies: &[Vec<usize>],
    sweep: &TransferSweepParams,
    criterion: &SecurityCriterion,
    seed: u64,
) -> Result<(GraphDataset, GenerationSummary)> {
    profile.validate()?;
    sweep.validate(case)?;
    let base_only = contingencies.is_empty();
    let none = [Vec::new()];
    let contingencies = if base_only { &none[..] } else { contingencies };
    let ctx = Context {
        case,
        profile: Some(profile),
        contingencies,
        centralities: centrality_table(case, contingencies)?,
        sweep,
        criterion,
        seed,
    };
    let mut scenarios = Vec::new();
    for h in profile.active_hours() {
        for c in 0..contingencies.len() {
            scenarios.push(Scenario {
                index: scenarios.len(),
                hour: Some(h),
                contingency: c,
                sweep: !base_only,
            });
        }
    }
    let (samples, summary) = run_all(&ctx, &scenarios)?;
    Ok((dataset(case, criterion, seed, samples), summary))
}

/// Double-line outages at the unscaled operating point: every pair gives
/// one unswept point, except `pair_sample_count` seeded random pairs that
/// get full transfer sweeps instead.
pub fn generate_n11_dataset(
    case: &GridCase,
    sweep: &TransferSweepParams,
    criterion: &SecurityCriterion,
    seed: u64,
    pair_sample_count: usize,
) -> Result<(GraphDataset, GenerationSummary)> {
    sweep.validate(case)?;
    let pairs = all_line_pairs(case);
    if pair_sample_count > pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "{pair_sample_count} swept pairs requested, only {} exist",
            pairs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x0011, 0));
    let mut swept = vec![false; pairs.len()];
    for k in sample(&mut rng, pairs.len(), pair_sample_count) {
        swept[k] = true;
    }
    let ctx = Context {
        case,
        profile: None,
        contingencies: &pairs,
        centralities: centrality_table(case, &pairs)?,
        sweep,
        criterion,
        seed,
    };
    let scenarios: Vec<Scenario> = (0..pairs.len())
        .map(|c| Scenario {
            index: c,
            hour: None,
            contingency: c,
            sweep: swept[c],
        })
        .collect();
    let (samples, summary) = run_all(&ctx, &scenarios)?;
    Ok((dataset(case, criterion, seed, samples), summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::*;

    fn sweep(max: f64) -> TransferSweepParams {
        TransferSweepParams {
            initial_transfer: 0.0,
            increment: 10.0,
            max_transfer: max,
            mismatch_tol: 1e-3,
            source_buses: vec![1],
            sink_buses: vec![2],
            max_iterations: 20,
        }
    }

    fn loaded_triangle() -> GridCase {
        triangle()
            .with_buses(|b| {
                b[1].load_p = 30.0;
                b[2].load_p = 50.0;
                b[2].load_q = 10.0;
            })
            .unwrap()
    }

    #[test]
    fn base_points_one_per_hour() {
        let case = loaded_triangle();
        let profile = LoadProfile::default().with_hours(vec![0, 5, 18]).unwrap();
        let (d, summary) =
            generate_dataset(&case, &profile, &[], &sweep(0.0), &SecurityCriterion::default(), 3).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(summary.scenarios, 3);
        assert!(d
            .samples
            .iter()
            .all(|s| s.meta.contingency.is_empty() && s.edges.len() == 3));
    }

    #[test]
    fn islanded_two_bus_gives_no_samples() {
        let case = two_bus(20.0, 0.01, 0.1);
        let profile = LoadProfile::default().with_hours(vec![0]).unwrap();
        let err = generate_dataset(
            &case,
            &profile,
            &[vec![0]],
            &sweep(20.0),
            &SecurityCriterion::default(),
            1,
        )
        .unwrap_err();
        match err {
            Error::NoSamples(d) => assert_eq!(d[0].reason, "islanded"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn triangle_pairs_all_island() {
        let case = triangle();
        assert_eq!(all_line_pairs(&case).len(), 3);
        let err = generate_n11_dataset(&case, &sweep(0.0), &SecurityCriterion::default(), 1, 0).unwrap_err();
        assert!(matches!(err, Error::NoSamples(ref d) if d.len() == 3));
        assert!(generate_n11_dataset(&case, &sweep(0.0), &SecurityCriterion::default(), 1, 4).is_err());
    }

    #[test]
    fn sweep_stops_at_first_violation() {
        let profile = LoadProfile::new(vec![1.0; 24], 1.0)
            .unwrap()
            .with_hours(vec![0])
            .unwrap();
        let case3 = loaded_triangle();
        let params = TransferSweepParams {
            sink_buses: vec![3],
            ..sweep(400.0)
        };
        let (d, _) = generate_dataset(&case3, &profile, &[vec![0]], &params, &SecurityCriterion::default(), 2).unwrap();
        let insecure = d.len() - d.secure_count();
        assert!(insecure <= 1);
        if insecure == 1 {
            assert_eq!(d.samples.last().unwrap().label, crate::metrics::SecurityClass::Insecure);
        }
        for w in d.samples.windows(2) {
            assert!(w[1].meta.transfer_mw > w[0].meta.transfer_mw);
        }
    }
}
