use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridCase;

/// Dense complex bus admittance matrix in per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    y: Vec<Complex64>,
}

impl AdmittanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.y[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.y[i * self.n..(i + 1) * self.n]
    }

    /// `I = Y V`.
    pub fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(y, v)| y * v).sum())
            .collect()
    }

    /// Complex power injections `S = V ∘ conj(Y V)`.
    pub fn injections(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.currents(v).iter().zip(v).map(|(i, v)| v * i.conj()).collect()
    }

    /// Rows whose diagonal does not dominate the off-diagonal magnitudes.
    pub fn weakly_dominant_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| {
                let off: f64 = (0..self.n).filter(|&j| j != i).map(|j| self.get(i, j).norm()).sum();
                self.get(i, i).norm() < off
            })
            .collect()
    }
}

/// Standard π-model Y-bus of the in-service branches plus bus shunts.
/// Transformer taps are applied at the from side.
pub fn build_admittance(case: &GridCase) -> Result<AdmittanceMatrix> {
    let n = case.bus_count();
    let mut y = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, br) in case.branches().iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let z = Complex64::new(br.resistance_r, br.reactance_x);
        if z.norm() == 0.0 {
            return Err(Error::Validation(format!("branch {k} has zero impedance")));
        }
        let ys = z.inv();
        let charging = Complex64::new(0.0, br.charging_b / 2.0);
        let t = br.tap_ratio;
        let (f, to) = case.branch_ends(k);
        y[f * n + f] += (ys + charging) / (t * t);
        y[to * n + to] += ys + charging;
        y[f * n + to] -= ys / t;
        y[to * n + f] -= ys / t;
    }
    for (i, b) in case.buses().iter().enumerate() {
        y[i * n + i] += Complex64::new(b.shunt_g, b.shunt_b);
    }
    let ybus = AdmittanceMatrix { n, y };
    let weak = ybus.weakly_dominant_rows();
    if !weak.is_empty() {
        log::debug!(
            "ybus: {} rows of case `{}` are not diagonally dominant",
            weak.len(),
            case.name()
        );
    }
    Ok(ybus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::*;

    #[test]
    fn single_reactive_branch() {
        let y = build_admittance(&two_bus(0.0, 0.0, 0.1)).unwrap();
        let off = y.get(0, 1);
        assert!((off - Complex64::new(0.0, 10.0)).norm() < 1e-12);
        assert!((off.norm() - 10.0).abs() < 1e-12);
        assert!((y.get(0, 0) - Complex64::new(0.0, -10.0)).norm() < 1e-12);
    }

    #[test]
    fn parallel_branches_add() {
        let case = two_bus(0.0, 0.0, 0.2)
            .with_branches(|b| b.push(line(1, 2, 0.0, 0.2)))
            .unwrap();
        let y = build_admittance(&case).unwrap();
        assert!((y.get(0, 1).norm() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_service_branches_ignored() {
        let case = two_bus(0.0, 0.0, 0.1)
            .with_branches(|b| b[0].in_service = false)
            .unwrap();
        let y = build_admittance(&case).unwrap();
        assert_eq!(y.get(0, 1), Complex64::new(0.0, 0.0));
    }
}
