//! Numerical tolerances used across the crate.
//!
//! All structural checks (Hermitian symmetry, idempotence, completeness,
//! unitarity) share one scale, chosen so that matrices produced by chains of
//! dense products and eigendecompositions at dimension <= 64 pass cleanly
//! while genuinely wrong inputs fail by many orders of magnitude.

/// Frobenius tolerance for Hermitian symmetry checks.
pub const TAU_HERM: f64 = 1e-9;

/// Tolerance for spectral checks: idempotence, completeness, unitarity,
/// positivity of eigenvalues.
pub const TAU_EIG: f64 = 1e-9;

/// Eigenvalues and probabilities below this cutoff are treated as exact zeros
/// inside entropy sums.
pub const EPS_ENTROPY: f64 = 1e-12;

/// Validation tolerance for classical probability vectors.
pub const PROB_TOL: f64 = 1e-12;

/// Strict inequality margin for deciding that an entropy genuinely dropped.
pub const DEMONIC_MARGIN: f64 = 1e-10;
