//! Numerical thresholds shared across the crate.
//!
//! Every comparison in reports and tests goes through one of these so the
//! acceptance gates are pinned in a single place.

/// Relative tolerance for the Hermitian symmetry check, scaled by `max(1, max|M|)`.
pub const HERMITIAN: f64 = 1e-12;

/// Default relative tolerance for positive-semidefinite verdicts.
pub const PSD: f64 = 1e-9;

/// Eigen-decomposition reconstruction residual, scaled by `max(1, max|M|)`.
pub const EIGEN_RECONSTRUCTION: f64 = 1e-9;

/// Defining relation `S J Sᵀ = J` for generated symplectic matrices.
pub const SYMPLECTIC: f64 = 1e-9;

/// Skew-symmetry of assembled commutator matrices.
pub const SKEW: f64 = 1e-12;

/// Closed-form quantities that are exact up to rounding.
pub const EXACT: f64 = 1e-12;

/// A PSD matrix whose smallest eigenvalue is within this (relative) of zero is saturated.
pub const SATURATION: f64 = 1e-9;

/// Agreement between grid moments and the bilinear-form moments (relative).
pub const ORACLE_RELATIVE: f64 = 1e-6;

/// Grid-evaluated commutator expectation versus `i·gamma`.
pub const GRID_COMMUTATOR: f64 = 1e-6;

/// Normalization of grid states.
pub const GRID_NORM: f64 = 1e-10;

/// Boundary amplitude allowed relative to the peak.
pub const GRID_BOUNDARY: f64 = 1e-12;

/// Residual below which an annihilation search counts as a saturating state.
pub const NEAR_ZERO_RESIDUAL: f64 = 1e-3;

/// Lower bound the real-coefficient annihilation slice is expected to respect.
pub const REAL_SLICE_FLOOR: f64 = 0.1;

/// Allowed relative change of the smallest singular value under grid halving.
pub const REFINEMENT_RELATIVE: f64 = 0.1;

/// Absolute scale for scalar inequality verdicts, scaled by `max(1, rhs)`.
pub const SCALAR_RELATION: f64 = 1e-9;
