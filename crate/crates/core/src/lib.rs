//! Noise and disturbance bounds for linear quantum measurement models.
//!
//! The crate assembles the noise–disturbance covariance `K`, the
//! state–apparatus correlation matrix `Γ` and the commutator form `𝒢` for a
//! linear measuring interaction, checks `K + (i/2)(Γ + 𝒢) ⪰ 0` alongside the
//! scalar Ozawa and Heisenberg relations, and cross-checks everything against
//! a wavefunction-on-a-grid oracle.

pub mod error;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod measurement;
pub mod scenarios;
pub mod symplectic;
pub mod tolerances;

pub use error::{Error, Result};
