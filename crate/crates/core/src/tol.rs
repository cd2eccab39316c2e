//! Numerical tolerances shared across modules.

/// Algebraic identities (unitarity, Hermiticity, completeness).
pub const ALGEBRAIC: f64 = 1e-12;

/// Allowed excess of a squared norm or trace over 1.
pub const NORM_SLACK: f64 = 1e-9;

/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_EIGENVALUE: f64 = -1e-10;

/// Norms below this count as zero.
pub const ZERO_NORM: f64 = 1e-300;

/// Probability mass below which a herald outcome is treated as absent.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;
