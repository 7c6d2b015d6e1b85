//! Linear measuring interactions, Ozawa noise/disturbance operators as
//! coefficient vectors, and the matrix and scalar noise–disturbance
//! relations built from them.

mod assessment;
mod interaction;
pub mod models;
mod space;

pub use assessment::{
    assemble_cal_g, assemble_gamma, assemble_k, assess, determinant_corollary, matrix_heisenberg_check,
    matrix_oup_check, rotate_nd, scalar_oup_check, CorollaryLink, MatrixVerdict, NdAssessment, Provenance,
    ScalarVerdict, Verdicts,
};
pub use interaction::{build_interaction, noise_disturbance_vectors, validate, LinearInteraction};
pub use space::{CoefficientVector, JointPhaseSpace, JointState};
