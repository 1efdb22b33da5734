//! Electrical case data and its graph view.

mod cdf;
mod topology;

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cdf::parse_cdf;
pub use topology::{apply_contingency, build_topology, is_connected, GraphTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

/// A bus with its scheduled injections. Powers are in MW / MVAr; shunts are
/// per-unit admittance at 1.0 p.u. voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    pub kind: BusKind,
    #[serde(default)]
    pub voltage_setpoint: Option<f64>,
    #[serde(default)]
    pub load_p: f64,
    #[serde(default)]
    pub load_q: f64,
    #[serde(default)]
    pub gen_p: f64,
    #[serde(default)]
    pub gen_q: f64,
    #[serde(default)]
    pub base_kv: f64,
    #[serde(default)]
    pub shunt_g: f64,
    #[serde(default)]
    pub shunt_b: f64,
}

impl Bus {
    pub fn has_load(&self) -> bool {
        self.load_p != 0.0 || self.load_q != 0.0
    }
}

/// A line or transformer. Impedances are per-unit on the case base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: u32,
    pub to_bus: u32,
    pub resistance_r: f64,
    pub reactance_x: f64,
    #[serde(default)]
    pub charging_b: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
    /// Off-nominal turns ratio at the from side; 1.0 for lines.
    #[serde(default = "default_tap")]
    pub tap_ratio: f64,
}

fn default_true() -> bool {
    true
}

fn default_tap() -> f64 {
    1.0
}

impl Branch {
    /// `|Z| = sqrt(r² + x²)`.
    pub fn impedance_magnitude(&self) -> f64 {
        self.resistance_r.hypot(self.reactance_x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Cdf,
    CaseJson,
}

#[derive(Serialize, Deserialize)]
struct RawCase {
    #[serde(default)]
    name: String,
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
}

/// A validated power network. Immutable; modifications produce new cases.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawCase", into = "RawCase")]
pub struct GridCase {
    name: String,
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    index: HashMap<u32, usize>,
}

impl PartialEq for GridCase {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.base_mva == other.base_mva
            && self.buses == other.buses
            && self.branches == other.branches
    }
}

impl TryFrom<RawCase> for GridCase {
    type Error = Error;

    fn try_from(raw: RawCase) -> Result<Self> {
        GridCase::new(raw.name, raw.base_mva, raw.buses, raw.branches)
    }
}

impl From<GridCase> for RawCase {
    fn from(c: GridCase) -> Self {
        RawCase {
            name: c.name,
            base_mva: c.base_mva,
            buses: c.buses,
            branches: c.branches,
        }
    }
}

impl GridCase {
    pub fn new(name: impl Into<String>, base_mva: f64, buses: Vec<Bus>, branches: Vec<Branch>) -> Result<Self> {
        let invalid = |m: String| Err(Error::Validation(m));
        if !(base_mva.is_finite() && base_mva > 0.0) {
            return invalid(format!("base_mva must be positive, got {base_mva}"));
        }
        if buses.is_empty() {
            return invalid("case has no buses".into());
        }
        let mut index = HashMap::with_capacity(buses.len());
        let mut slack = 0;
        for (k, b) in buses.iter().enumerate() {
            if index.insert(b.id, k).is_some() {
                return invalid(format!("duplicate bus id {}", b.id));
            }
            let finite = [b.load_p, b.load_q, b.gen_p, b.gen_q, b.shunt_g, b.shunt_b]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return invalid(format!("bus {} has non-finite quantities", b.id));
            }
            match b.kind {
                BusKind::Slack | BusKind::PV => match b.voltage_setpoint {
                    Some(v) if v.is_finite() && v > 0.0 => {}
                    other => {
                        return invalid(format!(
                            "bus {} ({:?}) needs a positive voltage setpoint, got {other:?}",
                            b.id, b.kind
                        ))
                    }
                },
                BusKind::PQ => {
                    if let Some(v) = b.voltage_setpoint {
                        if !(v > 0.0) {
                            return invalid(format!("bus {} setpoint {v} not positive", b.id));
                        }
                    }
                }
            }
            if b.kind == BusKind::Slack {
                slack += 1;
            }
        }
        if slack != 1 {
            return invalid(format!("expected exactly one slack bus, found {slack}"));
        }
        for (k, br) in branches.iter().enumerate() {
            for end in [br.from_bus, br.to_bus] {
                if !index.contains_key(&end) {
                    return invalid(format!("branch {k} references unknown bus {end}"));
                }
            }
            if br.from_bus == br.to_bus {
                return invalid(format!("branch {k} is a self-loop at bus {}", br.from_bus));
            }
            if br.resistance_r == 0.0 && br.reactance_x == 0.0 {
                return invalid(format!("branch {k} has zero impedance"));
            }
            if !(br.resistance_r >= 0.0) || !br.reactance_x.is_finite() {
                return invalid(format!("branch {k} has invalid impedance"));
            }
            if !(br.tap_ratio.is_finite() && br.tap_ratio > 0.0) || !br.charging_b.is_finite() {
                return invalid(format!("branch {k} has invalid tap or charging"));
            }
        }
        Ok(Self {
            name: name.into(),
            base_mva,
            buses,
            branches,
            index,
        })
    }

    /// Loads one of the bundled IEEE test cases: `ieee14`, `ieee30`, `ieee118`.
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "ieee14" => include_str!("../../data/ieee14.cdf"),
            "ieee30" => include_str!("../../data/ieee30.cdf"),
            "ieee118" => include_str!("../../data/ieee118.cdf"),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown built-in case `{other}` (expected ieee14, ieee30 or ieee118)"
                )))
            }
        };
        let mut case = parse_cdf(text)?;
        case.name = name.to_string();
        Ok(case)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Position of the bus with external number `id`.
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Buses carrying a nonzero load.
    pub fn load_buses(&self) -> Vec<usize> {
        (0..self.buses.len()).filter(|&i| self.buses[i].has_load()).collect()
    }

    /// Buses with positive scheduled real generation.
    pub fn generator_buses(&self) -> Vec<usize> {
        (0..self.buses.len()).filter(|&i| self.buses[i].gen_p > 0.0).collect()
    }

    pub fn transformer_count(&self) -> usize {
        self.branches.iter().filter(|b| b.tap_ratio != 1.0).count()
    }

    /// Internal endpoints of branch `k`.
    pub fn branch_ends(&self, k: usize) -> (usize, usize) {
        let b = &self.branches[k];
        (self.index[&b.from_bus], self.index[&b.to_bus])
    }

    /// Returns a copy with the buses edited by `f`, revalidated.
    pub fn with_buses(&self, f: impl FnOnce(&mut [Bus])) -> Result<Self> {
        let mut buses = self.buses.clone();
        f(&mut buses);
        Self::new(self.name.clone(), self.base_mva, buses, self.branches.clone())
    }

    /// Returns a copy with the branches edited by `f`, revalidated.
    pub fn with_branches(&self, f: impl FnOnce(&mut Vec<Branch>)) -> Result<Self> {
        let mut branches = self.branches.clone();
        f(&mut branches);
        Self::new(self.name.clone(), self.base_mva, self.buses.clone(), branches)
    }

    /// Same network with buses reordered so that new position `k` holds old
    /// bus `order[k]`.
    pub fn permute_buses(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.buses.len() {
            return Err(Error::InvalidArgument("permutation length".into()));
        }
        let buses = order.iter().map(|&i| self.buses[i].clone()).collect();
        Self::new(self.name.clone(), self.base_mva, buses, self.branches.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads a case in either supported format.
pub fn parse_case(mut source: impl Read, format: CaseFormat) -> Result<GridCase> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    match format {
        CaseFormat::Cdf => parse_cdf(&text),
        CaseFormat::CaseJson => Ok(serde_json::from_str(&text)?),
    }
}

/// Resolves a case argument: a built-in name or a path ending in `.json`
/// (toolkit JSON) or anything else (CDF).
pub fn load_case(spec: &str) -> Result<GridCase> {
    if matches!(spec, "ieee14" | "ieee30" | "ieee118") {
        return GridCase::builtin(spec);
    }
    let file = std::fs::File::open(spec)
        .map_err(|e| std::io::Error::new(e.kind(), format!("case `{spec}` is not builtin and not readable: {e}")))?;
    let format = if spec.ends_with(".json") {
        CaseFormat::CaseJson
    } else {
        CaseFormat::Cdf
    };
    parse_case(std::io::BufReader::new(file), format)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn bus(id: u32, kind: BusKind) -> Bus {
        Bus {
            id,
            name: String::new(),
            kind,
            voltage_setpoint: (kind != BusKind::PQ).then_some(1.0),
            load_p: 0.0,
            load_q: 0.0,
            gen_p: 0.0,
            gen_q: 0.0,
            base_kv: 100.0,
            shunt_g: 0.0,
            shunt_b: 0.0,
        }
    }

    pub fn line(from: u32, to: u32, r: f64, x: f64) -> Branch {
        Branch {
            from_bus: from,
            to_bus: to,
            resistance_r: r,
            reactance_x: x,
            charging_b: 0.0,
            in_service: true,
            tap_ratio: 1.0,
        }
    }

    /// Slack at bus 1, PQ at bus 2, one branch.
    pub fn two_bus(load_mw: f64, r: f64, x: f64) -> GridCase {
        let mut b2 = bus(2, BusKind::PQ);
        b2.load_p = load_mw;
        GridCase::new(
            "two-bus",
            100.0,
            vec![bus(1, BusKind::Slack), b2],
            vec![line(1, 2, r, x)],
        )
        .unwrap()
    }

    pub fn triangle() -> GridCase {
        GridCase::new(
            "triangle",
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::PQ), bus(3, BusKind::PQ)],
            vec![line(1, 2, 0.01, 0.1), line(2, 3, 0.01, 0.1), line(1, 3, 0.01, 0.1)],
        )
        .unwrap()
    }
}
