//! Process-wide switches read from the environment.
//!
//! `GRIDSEC_DETERMINISTIC` (default on; `0`, `false` or `off` disables it)
//! makes every reduction run in a fixed order so outputs are bitwise
//! reproducible. `GRIDSEC_WORKERS` sets the size of the worker pool.

use crate::features::Reduction;

pub const DETERMINISTIC_VAR: &str = "GRIDSEC_DETERMINISTIC";
pub const WORKERS_VAR: &str = "GRIDSEC_WORKERS";

pub fn deterministic() -> bool {
    match std::env::var(DETERMINISTIC_VAR) {
        Ok(v) => !matches!(v.trim().to_ascii_lowercase().as_str(), "0" | "false" | "off" | "no"),
        Err(_) => true,
    }
}

/// Betweenness reduction matching [`deterministic`].
pub fn reduction() -> Reduction {
    if deterministic() {
        Reduction::Ordered
    } else {
        Reduction::Parallel
    }
}

pub fn workers() -> Option<usize> {
    std::env::var(WORKERS_VAR)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w| w > 0)
}

/// Sizes the global rayon pool from `GRIDSEC_WORKERS`. Has no effect once
/// the pool exists.
pub fn init_worker_pool() {
    if let Some(w) = workers() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            log::debug!("worker pool already initialized: {e}");
        }
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn mix_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
