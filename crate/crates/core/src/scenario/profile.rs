use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ceil_count;
use crate::error::{Error, Result};
use crate::grid::{BusKind, GridCase};
use crate::metrics::SecurityClass;
use crate::powerflow::PowerFlowSolution;
use crate::runtime::mix_seed;

/// Default hourly multipliers, a duck-shaped daily net-load curve with a
/// midday trough and an evening ramp. These are toolkit defaults, not
/// measured data.
pub const DUCK_CURVE: [f64; 24] = [
    0.80, 0.77, 0.75, 0.74, 0.75, 0.78, 0.83, 0.82, 0.74, 0.68, 0.66, 0.65, 0.65, 0.66, 0.68, 0.73, 0.82, 0.93, 1.02,
    1.05, 1.03, 0.98, 0.92, 0.86,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub hourly_factors: Vec<f64>,
    #[serde(default = "default_fraction")]
    pub load_bus_fraction: f64,
    /// Hours that become operating points; all 24 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hours: Option<Vec<usize>>,
}

fn default_fraction() -> f64 {
    0.7
}

impl Default for LoadProfile {
    fn default() -> Self {
        Self {
            hourly_factors: DUCK_CURVE.to_vec(),
            load_bus_fraction: default_fraction(),
            hours: None,
        }
    }
}

impl LoadProfile {
    pub fn new(hourly_factors: Vec<f64>, load_bus_fraction: f64) -> Result<Self> {
        let p = Self {
            hourly_factors,
            load_bus_fraction,
            hours: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_hours(mut self, hours: Vec<usize>) -> Result<Self> {
        self.hours = Some(hours);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hourly_factors.len() != 24 {
            return Err(Error::InvalidArgument(format!(
                "need 24 hourly factors, got {}",
                self.hourly_factors.len()
            )));
        }
        if let Some(f) = self.hourly_factors.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument(format!("hourly factor {f} must be positive")));
        }
        if !(self.load_bus_fraction > 0.0 && self.load_bus_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "load bus fraction {} outside (0, 1]",
                self.load_bus_fraction
            )));
        }
        if let Some(h) = self.hours.iter().flatten().find(|&&h| h >= 24) {
            return Err(Error::InvalidArgument(format!("hour {h} outside 0..24")));
        }
        Ok(())
    }

    pub fn active_hours(&self) -> Vec<usize> {
        self.hours.clone().unwrap_or_else(|| (0..24).collect())
    }
}

/// Inclusive voltage band, per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityCriterion {
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for SecurityCriterion {
    fn default() -> Self {
        Self {
            v_min: 0.90,
            v_max: 1.10,
        }
    }
}

impl SecurityCriterion {
    pub fn new(v_min: f64, v_max: f64) -> Result<Self> {
        if !(v_min > 0.0 && v_min < v_max) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < v_min < v_max, got {v_min}, {v_max}"
            )));
        }
        Ok(Self { v_min, v_max })
    }

    pub fn violated_by(&self, v_mag: &[f64]) -> bool {
        v_mag.iter().any(|&v| v < self.v_min || v > self.v_max)
    }
}

/// Secure iff every bus voltage lies within the band.
pub fn label_solution(solution: &PowerFlowSolution, criterion: &SecurityCriterion) -> Result<SecurityClass> {
    if !solution.converged {
        return Err(Error::InvalidArgument("cannot label a non-converged solution".into()));
    }
    Ok(if criterion.violated_by(&solution.v_mag) {
        SecurityClass::Insecure
    } else {
        SecurityClass::Secure
    })
}

/// Scales a seeded random subset of load buses by the hour's factor and
/// spreads the resulting change in demand over the non-slack generators in
/// proportion to their output. With no such generator the slack absorbs it.
pub fn scale_loads(case: &GridCase, profile: &LoadProfile, hour: usize, rng_seed: u64) -> Result<GridCase> {
    profile.validate()?;
    if hour >= 24 {
        return Err(Error::InvalidArgument(format!("hour {hour} outside 0..24")));
    }
    let loads = case.load_buses();
    if loads.is_empty() {
        return Err(Error::InvalidArgument("case has no load buses".into()));
    }
    let factor = profile.hourly_factors[hour];
    let count = ceil_count(profile.load_bus_fraction, loads.len());
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rng_seed, 0x10AD, hour as u64));
    let mut chosen: Vec<usize> = sample(&mut rng, loads.len(), count)
        .into_iter()
        .map(|k| loads[k])
        .collect();
    chosen.sort_unstable();
    let gens: Vec<usize> = case
        .generator_buses()
        .into_iter()
        .filter(|&i| case.buses()[i].kind != BusKind::Slack)
        .collect();
    case.with_buses(|b| {
        let mut delta = 0.0;
        for &i in &chosen {
            delta += b[i].load_p * (factor - 1.0);
            b[i].load_p *= factor;
            b[i].load_q *= factor;
        }
        let total: f64 = gens.iter().map(|&i| b[i].gen_p).sum();
        if total > 0.0 {
            for &i in &gens {
                b[i].gen_p += delta * b[i].gen_p / total;
            }
        }
    })
}

/// Load buses whose demand differs between two cases.
#[cfg(test)]
pub(crate) fn changed_loads(a: &GridCase, b: &GridCase) -> usize {
    a.buses()
        .iter()
        .zip(b.buses())
        .filter(|(x, y)| x.load_p != y.load_p || x.load_q != y.load_q)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::two_bus;

    fn flat(f: f64) -> LoadProfile {
        LoadProfile::new(vec![f; 24], 0.7).unwrap()
    }

    #[test]
    fn identity_factor() {
        let case = GridCase::builtin("ieee14").unwrap();
        assert_eq!(scale_loads(&case, &flat(1.0), 5, 3).unwrap(), case);
    }

    #[test]
    fn single_load_halves() {
        let case = two_bus(40.0, 0.01, 0.1);
        let scaled = scale_loads(&case, &flat(0.5), 0, 1).unwrap();
        assert_eq!(scaled.buses()[1].load_p, 20.0);
    }

    #[test]
    fn subset_size_and_balance() {
        let case = GridCase::builtin("ieee118").unwrap();
        let n_loads = case.load_buses().len();
        let scaled = scale_loads(&case, &flat(0.8), 4, 11).unwrap();
        assert_eq!(changed_loads(&case, &scaled), ceil_count(0.7, n_loads));
        let net = |c: &GridCase| -> f64 {
            c.buses()
                .iter()
                .filter(|b| b.kind != BusKind::Slack)
                .map(|b| b.gen_p - b.load_p)
                .sum()
        };
        let slack = case.slack_index();
        let slack_load_change = case.buses()[slack].load_p - scaled.buses()[slack].load_p;
        assert!((net(&case) - net(&scaled) - slack_load_change).abs() < 1e-9);
        assert_eq!(scale_loads(&case, &flat(0.8), 4, 11).unwrap(), scaled);
    }

    #[test]
    fn labels() {
        let case = two_bus(0.0, 0.01, 0.1);
        let mut sol = crate::powerflow::solve_newton_raphson(&case, 1e-10, 10).unwrap();
        let c = SecurityCriterion::default();
        assert_eq!(label_solution(&sol, &c).unwrap(), SecurityClass::Secure);
        sol.v_mag[1] = 0.89;
        assert_eq!(label_solution(&sol, &c).unwrap(), SecurityClass::Insecure);
        sol.v_mag[1] = 0.90;
        assert_eq!(label_solution(&sol, &c).unwrap(), SecurityClass::Secure);
        sol.v_mag[1] = 1.10;
        assert_eq!(label_solution(&sol, &c).unwrap(), SecurityClass::Secure);
        sol.converged = false;
        assert!(label_solution(&sol, &c).is_err());
        assert!(SecurityCriterion::new(1.1, 0.9).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(LoadProfile::new(vec![1.0; 23], 0.7).is_err());
        assert!(LoadProfile::new(vec![1.0; 24], 0.0).is_err());
        assert!(LoadProfile::new(vec![0.0; 24], 0.5).is_err());
        assert!(LoadProfile::default().with_hours(vec![24]).is_err());
        assert_eq!(LoadProfile::default().active_hours().len(), 24);
    }
}
