//! Numerical tolerances shared across the crate.
//!
//! Eigenvalue-based cutoffs are relative to `max(1, |λ_max|)`.

use serde::{Deserialize, Serialize};

/// Symmetry check, relative to `max(1, max |entry|)`.
pub const SYM_TOL: f64 = 1e-10;
/// Positive semidefiniteness cutoff on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues at or below this (relative) magnitude count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Jacobi stops when off-diagonal Frobenius mass falls below this times `‖a‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Witness/target agreement, relative to `max(1, max entry)`.
pub const WITNESS_TOL: f64 = 1e-8;
/// Mass a compression may discard per factor, relative to the factor norm.
pub const COMPRESS_RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub sym: f64,
    pub psd: f64,
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym: SYM_TOL,
            psd: PSD_TOL,
            rank: RANK_TOL,
        }
    }
}
