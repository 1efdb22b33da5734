use serde::{Deserialize, Serialize};

use super::newton::{solve_newton_raphson, PowerFlowSolution, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::grid::GridCase;

/// Source-to-sink transfer schedule. Powers in MW; bus lists hold external
/// bus numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSweepParams {
    pub initial_transfer: f64,
    pub increment: f64,
    pub max_transfer: f64,
    /// Power mismatch tolerance for each solve, MW.
    pub mismatch_tol: f64,
    pub source_buses: Vec<u32>,
    pub sink_buses: Vec<u32>,
    #[serde(default = "default_max_iter")]
    pub max_iterations: usize,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl TransferSweepParams {
    pub fn validate(&self, case: &GridCase) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.increment > 0.0) {
            return bad(format!("increment must be positive, got {}", self.increment));
        }
        if !(self.max_transfer >= self.initial_transfer) || self.initial_transfer < 0.0 {
            return bad(format!(
                "need 0 <= initial ({}) <= max ({})",
                self.initial_transfer, self.max_transfer
            ));
        }
        if !(self.mismatch_tol > 0.0) {
            return bad("mismatch tolerance must be positive".into());
        }
        if self.source_buses.is_empty() || self.sink_buses.is_empty() {
            return bad("source and sink sets must be non-empty".into());
        }
        if let Some(b) = self.source_buses.iter().find(|b| self.sink_buses.contains(b)) {
            return bad(format!("bus {b} is both source and sink"));
        }
        for b in self.source_buses.iter().chain(&self.sink_buses) {
            if case.bus_index(*b).is_none() {
                return bad(format!("sweep bus {b} not in case"));
            }
        }
        Ok(())
    }

    /// Transfer levels visited: `initial, initial + increment, …` up to `max`.
    pub fn levels(&self) -> Vec<f64> {
        let steps = ((self.max_transfer - self.initial_transfer) / self.increment + 1e-9).floor();
        (0..=steps as usize)
            .map(|k| self.initial_transfer + k as f64 * self.increment)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub transfer_mw: f64,
    pub solution: PowerFlowSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepStop {
    MaxTransfer,
    /// The solve at this transfer did not converge; it is not in the list.
    NonConvergence {
        transfer_mw: f64,
    },
    /// The stop predicate fired on the last listed point.
    Criterion {
        transfer_mw: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub stop: SweepStop,
    pub diagnostic: Option<String>,
}

/// Splits `amount` over `buses` proportionally to `weights`, equally when the
/// weights sum to zero.
fn apportion(amount: f64, weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 && weights.iter().all(|&w| w >= 0.0) {
        weights.iter().map(|w| amount * w / total).collect()
    } else {
        vec![amount / weights.len() as f64; weights.len()]
    }
}

/// Case with `transfer_mw` moved from the sources to the sinks. Sink loads
/// keep their power factor.
pub(crate) fn stressed_case(case: &GridCase, params: &TransferSweepParams, transfer_mw: f64) -> Result<GridCase> {
    let src: Vec<usize> = params
        .source_buses
        .iter()
        .map(|&b| case.bus_index(b).expect("validated"))
        .collect();
    let snk: Vec<usize> = params
        .sink_buses
        .iter()
        .map(|&b| case.bus_index(b).expect("validated"))
        .collect();
    let buses = case.buses();
    let src_share = apportion(transfer_mw, &src.iter().map(|&i| buses[i].gen_p).collect::<Vec<_>>());
    let snk_share = apportion(transfer_mw, &snk.iter().map(|&i| buses[i].load_p).collect::<Vec<_>>());
    case.with_buses(|b| {
        for (&i, d) in src.iter().zip(&src_share) {
            b[i].gen_p += d;
        }
        for (&i, d) in snk.iter().zip(&snk_share) {
            let p0 = b[i].load_p;
            if p0 != 0.0 {
                b[i].load_q *= (p0 + d) / p0;
            }
            b[i].load_p += d;
        }
    })
}

/// Runs flat-start power flows at increasing transfer levels.
///
/// Stops at the maximum transfer, at the first non-convergent solve, or right
/// after a converged point for which `stop_when` returns true (that point is
/// kept).
pub fn pv_transfer_sweep(
    case: &GridCase,
    params: &TransferSweepParams,
    stop_when: impl Fn(&PowerFlowSolution) -> bool,
) -> Result<SweepResult> {
    params.validate(case)?;
    let tol = params.mismatch_tol / case.base_mva();
    let mut points = Vec::new();
    for transfer in params.levels() {
        let stressed = stressed_case(case, params, transfer)?;
        let solution = solve_newton_raphson(&stressed, tol, params.max_iterations)?;
        if !solution.converged {
            let diagnostic = format!(
                "no solution at {transfer} MW transfer{}: {}",
                if points.is_empty() { " (first step)" } else { "" },
                solution.diagnostic.as_deref().unwrap_or("not converged")
            );
            log::debug!("sweep case=`{}` {diagnostic}", case.name());
            return Ok(SweepResult {
                points,
                stop: SweepStop::NonConvergence { transfer_mw: transfer },
                diagnostic: Some(diagnostic),
            });
        }
        let stop = stop_when(&solution);
        points.push(SweepPoint {
            transfer_mw: transfer,
            solution,
        });
        if stop {
            return Ok(SweepResult {
                points,
                stop: SweepStop::Criterion { transfer_mw: transfer },
                diagnostic: None,
            });
        }
    }
    Ok(SweepResult {
        points,
        stop: SweepStop::MaxTransfer,
        diagnostic: None,
    })
}
