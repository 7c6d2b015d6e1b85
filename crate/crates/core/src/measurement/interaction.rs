use serde::{Deserialize, Serialize};

use super::space::{CoefficientVector, JointPhaseSpace};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

/// Linear Heisenberg-picture measuring interaction `Z_out = T·Z_in`.
///
/// `probe_observables[i]` is the meter observable `M_i` read out after the
/// interaction, written over the input coordinates (a rescaled readout such
/// as `X_b / G` is just a scaled row). `measured[i]` and `disturbed[i]` index
/// the object observables `A_i` and `B_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearInteraction {
    pub space: JointPhaseSpace,
    #[serde(with = "crate::linalg::serde_rows")]
    pub t: RealMatrix,
    pub probe_observables: Vec<CoefficientVector>,
    pub measured: Vec<usize>,
    pub disturbed: Vec<usize>,
}

impl LinearInteraction {
    /// Builds without the physical validation of [`build_interaction`];
    /// only shapes are checked. Used for degenerate reference models.
    pub fn unchecked(
        t: RealMatrix,
        space: JointPhaseSpace,
        probe_observables: Vec<CoefficientVector>,
        measured: Vec<usize>,
        disturbed: Vec<usize>,
    ) -> Result<Self> {
        let d = space.dim();
        if t.nrows() != d || t.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: t.nrows().max(t.ncols()) });
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = measured.len();
        if disturbed.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: disturbed.len() });
        }
        if probe_observables.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: probe_observables.len() });
        }
        for m in &probe_observables {
            if m.coeffs.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.coeffs.len() });
            }
            if !m.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        if let Some(&bad) = measured.iter().chain(&disturbed).find(|&&i| i >= d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad });
        }
        Ok(Self { space, t, probe_observables, measured, disturbed })
    }

    /// Number of measured/disturbed pairs.
    pub fn n(&self) -> usize {
        self.measured.len()
    }

    /// `M_out,i` over the input coordinates.
    pub fn meter_output(&self, i: usize) -> CoefficientVector {
        self.probe_observables[i].through(&self.t)
    }

    /// `B_out,j` over the input coordinates.
    pub fn disturbed_output(&self, j: usize) -> CoefficientVector {
        self.space.unit(self.disturbed[j]).through(&self.t)
    }

    /// The 2n selected input observables `(A₁..Aₙ, B₁..Bₙ)`.
    pub fn selected(&self) -> Vec<CoefficientVector> {
        self.measured.iter().chain(&self.disturbed).map(|&i| self.space.unit(i)).collect()
    }

    /// The 2n output observables `(M_out,1.., B_out,1..)`.
    pub fn outputs(&self) -> Vec<CoefficientVector> {
        (0..self.n()).map(|i| self.meter_output(i)).chain((0..self.n()).map(|j| self.disturbed_output(j))).collect()
    }

    fn output_label(&self, k: usize) -> String {
        let n = self.n();
        if k < n {
            format!("M_out[{k}]")
        } else {
            format!("{}_out", self.space.labels[self.disturbed[k - n]])
        }
    }
}

/// Validates commutator preservation `T·Ω·Tᵀ = Ω` and mutual commutativity
/// of the readout and disturbed outputs, then returns the interaction.
pub fn build_interaction(
    t: RealMatrix,
    space: JointPhaseSpace,
    probe_observables: Vec<CoefficientVector>,
    measured: Vec<usize>,
    disturbed: Vec<usize>,
) -> Result<LinearInteraction> {
    let ix = LinearInteraction::unchecked(t, space, probe_observables, measured, disturbed)?;
    validate(&ix)?;
    Ok(ix)
}

pub fn validate(ix: &LinearInteraction) -> Result<()> {
    let omega = ix.space.omega();
    let scale = ix.t.amax().powi(2).max(1.0) * ix.space.gamma.abs().max(1.0);
    let tol = 1e-9 * scale;
    let moved = &ix.t * &omega * ix.t.transpose();
    let d = ix.space.dim();
    for row in 0..d {
        for col in 0..d {
            let deviation = (moved[(row, col)] - omega[(row, col)]).abs();
            if deviation > tol {
                return Err(Error::CommutatorNotPreserved { row, col, deviation });
            }
        }
    }
    let outputs = ix.outputs();
    let out_scale = outputs.iter().fold(1.0_f64, |m, v| m.max(v.max_abs()));
    let out_tol = 1e-9 * out_scale * out_scale * ix.space.gamma.abs().max(1.0);
    for a in 0..outputs.len() {
        for b in (a + 1)..outputs.len() {
            let value = ix.space.commutator(&outputs[a], &outputs[b]);
            if value.abs() > out_tol {
                return Err(Error::OutputsDoNotCommute {
                    first: ix.output_label(a),
                    second: ix.output_label(b),
                    value,
                });
            }
        }
    }
    Ok(())
}

/// `K = (N₁..Nₙ, D₁..Dₙ)` with `N_i = M_out,i − A_i` and `D_j = B_out,j − B_j`.
pub fn noise_disturbance_vectors(ix: &LinearInteraction) -> Vec<CoefficientVector> {
    let n = ix.n();
    let noise = (0..n).map(|i| ix.meter_output(i).sub(&ix.space.unit(ix.measured[i])));
    let disturbance = (0..n).map(|j| ix.disturbed_output(j).sub(&ix.space.unit(ix.disturbed[j])));
    noise.chain(disturbance).collect()
}
