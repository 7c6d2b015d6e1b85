//! Concrete measuring interactions on one object mode and one probe mode,
//! ordering `(X_a, Y_a, X_b, Y_b)` with `[X, Y] = i/2`.

use rand::Rng;

use super::interaction::{build_interaction, LinearInteraction};
use super::space::{CoefficientVector, JointPhaseSpace, JointState};
use crate::error::{Error, Result};
use crate::gaussian::{random_valid_covariance_with, CovarianceState};
use crate::linalg::RealMatrix;
use crate::symplectic::random_symplectic_with;

const XA: usize = 0;
const YA: usize = 1;
const XB: usize = 2;

/// Backaction-evading amplifier with gain `G`, read out as `M = X_b / G`:
/// `X_a → X_a`, `X_b → X_b + G·X_a`, `Y_a → Y_a − G·Y_b`, `Y_b → Y_b`.
pub fn backaction_evading_amplifier(gain: f64) -> Result<LinearInteraction> {
    if gain == 0.0 || !gain.is_finite() {
        return Err(Error::Config(format!("gain must be finite and nonzero, got {gain}")));
    }
    let space = JointPhaseSpace::quadrature_pair();
    #[rustfmt::skip]
    let t = RealMatrix::from_row_slice(4, 4, &[
        1.0,  0.0, 0.0, 0.0,
        0.0,  1.0, 0.0, -gain,
        gain, 0.0, 1.0, 0.0,
        0.0,  0.0, 0.0, 1.0,
    ]);
    let meter = space.unit(XB).scaled(1.0 / gain);
    build_interaction(t, space, vec![meter], vec![XA], vec![YA])
}

/// Noiseless quadrature transducer read out as `M = X_b`:
/// `X_a → X_a − X_b`, `X_b → X_a`, `Y_a → −Y_b`, `Y_b → Y_b + Y_a`.
pub fn noiseless_transducer() -> Result<LinearInteraction> {
    let space = JointPhaseSpace::quadrature_pair();
    #[rustfmt::skip]
    let t = RealMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, -1.0, 0.0,
        0.0, 0.0, 0.0, -1.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 1.0,
    ]);
    build_interaction(t, space, vec![space_unit(XB)], vec![XA], vec![YA])
}

fn space_unit(idx: usize) -> CoefficientVector {
    JointPhaseSpace::quadrature_pair().unit(idx)
}

/// No interaction, reading the measured observable itself. Not a valid
/// joint measurement (the readout does not commute with `Y_a`), so it is
/// built unchecked and serves only as a degenerate reference.
pub fn trivial_reference() -> LinearInteraction {
    let space = JointPhaseSpace::quadrature_pair();
    LinearInteraction::unchecked(RealMatrix::identity(4, 4), space, vec![space_unit(XA)], vec![XA], vec![YA])
        .expect("shapes are consistent")
}

/// A random valid model with its physical product state.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub interaction: LinearInteraction,
    pub object: CovarianceState,
    pub probe: CovarianceState,
    pub joint: JointState,
    pub attempts: usize,
}

const MAX_ATTEMPTS: usize = 16;

/// Random symplectic `T` on the two-mode joint space, a random probe
/// quadrature as meter, `(A, B) = (X_a, Y_a)`, and random physical object and
/// probe states with small random means. Draws are retried until the
/// interaction validates.
pub fn random_model<R: Rng>(rng: &mut R) -> Result<RandomModel> {
    let space = JointPhaseSpace::quadrature_pair();
    let p = space.to_standard();
    let mut last_err = None;
    for attempts in 1..=MAX_ATTEMPTS {
        let s = random_symplectic_with(2, rng);
        let t = p.transpose() * s * &p;
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let scale = rng.random_range(0.5..2.0);
        let mut meter = CoefficientVector::zeros(4);
        meter.coeffs[2] = scale * angle.cos();
        meter.coeffs[3] = scale * angle.sin();
        match build_interaction(t, space.clone(), vec![meter], vec![XA], vec![YA]) {
            Ok(interaction) => {
                let mut object = random_valid_covariance_with(1, 0.5, rng);
                let mut probe = random_valid_covariance_with(1, 0.5, rng);
                object.mean = vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
                probe.mean = vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
                let joint = JointState::product(&space, &object, &probe)?;
                return Ok(RandomModel { interaction, object, probe, joint, attempts });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}
