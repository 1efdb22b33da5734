//! AC power flow: admittance matrix, Newton–Raphson, and incremental-transfer
//! sweeps.

mod admittance;
mod newton;
mod sweep;

pub use admittance::{build_admittance, AdmittanceMatrix};
pub use newton::{bus_injections, solve_newton_raphson, PowerFlowSolution, DEFAULT_MAX_ITER};
pub use sweep::{pv_transfer_sweep, SweepPoint, SweepResult, SweepStop, TransferSweepParams};
