use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::admittance::{build_admittance, AdmittanceMatrix};
use crate::error::Result;
use crate::grid::{BusKind, GridCase};

pub const DEFAULT_MAX_ITER: usize = 30;

/// Steady state of one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Per-unit magnitudes, case bus order.
    pub v_mag: Vec<f64>,
    /// Radians; the slack bus is the reference at 0.
    pub v_angle: Vec<f64>,
    /// Net injections (generation − load) in MW.
    pub p_injection: Vec<f64>,
    /// Net injections in MVAr.
    pub q_injection: Vec<f64>,
    pub converged: bool,
    /// Mismatch evaluations performed, counting the flat-start evaluation.
    pub iterations: usize,
    /// Largest |ΔP| or |ΔQ| at the returned state, per-unit.
    pub max_mismatch: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl PowerFlowSolution {
    pub fn voltages(&self) -> Vec<Complex64> {
        self.v_mag
            .iter()
            .zip(&self.v_angle)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    pub fn min_voltage(&self) -> f64 {
        self.v_mag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_voltage(&self) -> f64 {
        self.v_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Scheduled complex injections in per-unit.
fn scheduled(case: &GridCase) -> Vec<Complex64> {
    let base = case.base_mva();
    case.buses()
        .iter()
        .map(|b| Complex64::new(b.gen_p - b.load_p, b.gen_q - b.load_q) / base)
        .collect()
}

/// Net complex injections `V ∘ conj(Y V)` at the given state, per-unit.
pub fn bus_injections(case: &GridCase, v_mag: &[f64], v_angle: &[f64]) -> Result<Vec<Complex64>> {
    let y = build_admittance(case)?;
    let v: Vec<Complex64> = v_mag
        .iter()
        .zip(v_angle)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect();
    Ok(y.injections(&v))
}

struct Indexing {
    pvpq: Vec<usize>,
    pq: Vec<usize>,
}

impl Indexing {
    fn new(case: &GridCase) -> Self {
        let kinds: Vec<BusKind> = case.buses().iter().map(|b| b.kind).collect();
        let pvpq = (0..kinds.len()).filter(|&i| kinds[i] != BusKind::Slack).collect();
        let pq = (0..kinds.len()).filter(|&i| kinds[i] == BusKind::PQ).collect();
        Self { pvpq, pq }
    }
}

fn mismatch(idx: &Indexing, s_calc: &[Complex64], s_sched: &[Complex64]) -> (DVector<f64>, f64) {
    let np = idx.pvpq.len();
    let mut f = DVector::zeros(np + idx.pq.len());
    for (r, &i) in idx.pvpq.iter().enumerate() {
        f[r] = s_calc[i].re - s_sched[i].re;
    }
    for (r, &i) in idx.pq.iter().enumerate() {
        f[np + r] = s_calc[i].im - s_sched[i].im;
    }
    let norm = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    (f, norm)
}

/// Polar-form Jacobian of the mismatch vector.
fn jacobian(y: &AdmittanceMatrix, v: &[Complex64], idx: &Indexing) -> DMatrix<f64> {
    let n = v.len();
    let ibus = y.currents(v);
    let unit: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
    // dS/dθ = j diag(V) conj(diag(I) − Y diag(V))
    // dS/d|V| = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    let j = Complex64::new(0.0, 1.0);
    let ds_da = |r: usize, c: usize| {
        let mut inner = -y.get(r, c) * v[c];
        if r == c {
            inner += ibus[r];
        }
        j * v[r] * inner.conj()
    };
    let ds_dm = |r: usize, c: usize| {
        let mut out = v[r] * (y.get(r, c) * unit[c]).conj();
        if r == c {
            out += ibus[r].conj() * unit[r];
        }
        out
    };
    let np = idx.pvpq.len();
    let nq = idx.pq.len();
    let mut jac = DMatrix::zeros(np + nq, np + nq);
    debug_assert!(np < n);
    for (r, &bi) in idx.pvpq.iter().enumerate() {
        for (c, &bj) in idx.pvpq.iter().enumerate() {
            jac[(r, c)] = ds_da(bi, bj).re;
        }
        for (c, &bj) in idx.pq.iter().enumerate() {
            jac[(r, np + c)] = ds_dm(bi, bj).re;
        }
    }
    for (r, &bi) in idx.pq.iter().enumerate() {
        for (c, &bj) in idx.pvpq.iter().enumerate() {
            jac[(np + r, c)] = ds_da(bi, bj).im;
        }
        for (c, &bj) in idx.pq.iter().enumerate() {
            jac[(np + r, np + c)] = ds_dm(bi, bj).im;
        }
    }
    jac
}

/// Newton–Raphson from a flat start (1.0 p.u. / setpoint, 0 rad).
///
/// `tol` is the per-unit mismatch tolerance; `max_iter` bounds the number of
/// Newton updates. Reactive limits are not enforced. A singular Jacobian or a
/// non-finite state ends the solve with `converged = false` and a diagnostic.
pub fn solve_newton_raphson(case: &GridCase, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
    if !(tol > 0.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let y = build_admittance(case)?;
    let idx = Indexing::new(case);
    let s_sched = scheduled(case);
    let mut vm: Vec<f64> = case
        .buses()
        .iter()
        .map(|b| match b.kind {
            BusKind::PQ => 1.0,
            _ => b.voltage_setpoint.unwrap_or(1.0),
        })
        .collect();
    let mut va = vec![0.0; case.bus_count()];
    let np = idx.pvpq.len();

    let mut iterations = 0;
    let mut converged = false;
    let mut diagnostic = None;
    let mut s_calc;
    let mut norm;
    loop {
        let v: Vec<Complex64> = vm.iter().zip(&va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        s_calc = y.injections(&v);
        let (f, nf) = mismatch(&idx, &s_calc, &s_sched);
        norm = nf;
        iterations += 1;
        if !norm.is_finite() {
            diagnostic = Some("non-finite mismatch".to_string());
            break;
        }
        if norm <= tol {
            converged = true;
            break;
        }
        if iterations > max_iter {
            diagnostic = Some(format!("iteration limit {max_iter} reached, mismatch {norm:.3e} p.u."));
            break;
        }
        let jac = jacobian(&y, &v, &idx);
        let Some(dx) = jac.lu().solve(&(-f)) else {
            diagnostic = Some(format!("singular Jacobian at iteration {iterations}"));
            break;
        };
        for (r, &i) in idx.pvpq.iter().enumerate() {
            va[i] += dx[r];
        }
        for (r, &i) in idx.pq.iter().enumerate() {
            vm[i] += dx[np + r];
        }
    }
    if let Some(d) = &diagnostic {
        log::debug!("powerflow case=`{}` converged=false reason=\"{d}\"", case.name());
    }
    let base = case.base_mva();
    Ok(PowerFlowSolution {
        p_injection: s_calc.iter().map(|s| s.re * base).collect(),
        q_injection: s_calc.iter().map(|s| s.im * base).collect(),
        v_mag: vm,
        v_angle: va,
        converged,
        iterations,
        max_mismatch: norm,
        diagnostic,
    })
}
