//! Second-moment description of states over canonical or quadrature
//! operators, with the Robertson–Schrödinger and Robertson checks.
//!
//! The covariance is symmetrized with `{A, B} = (AB + BA)/2`, so
//! `sigma[α][β] = ⟨{ΔZ_α, ΔZ_β}⟩` without an extra factor of two.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, PsdVerdict, RealMatrix};
use crate::symplectic::{self, SymplecticForm};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub mean: Vec<f64>,
    pub sigma: RealMatrix,
    pub form: SymplecticForm,
}

impl CovarianceState {
    pub fn new(mean: Vec<f64>, sigma: RealMatrix, form: SymplecticForm) -> Result<Self> {
        let d = form.dim();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sigma.nrows() });
        }
        if mean.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mean.len() });
        }
        if sigma.iter().chain(mean.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = linalg::max_abs_real(&sigma).max(1.0);
        if (&sigma - sigma.transpose()).amax() > tolerances::HERMITIAN * scale {
            return Err(Error::NonHermitianInput {
                asymmetry: (&sigma - sigma.transpose()).amax(),
                allowed: tolerances::HERMITIAN * scale,
            });
        }
        Ok(Self { mean, sigma, form })
    }

    /// Zero-mean state with the given covariance.
    pub fn centered(sigma: RealMatrix, gamma: f64) -> Result<Self> {
        let n = sigma.nrows() / 2;
        Self::new(vec![0.0; 2 * n], sigma, SymplecticForm::new(n, gamma))
    }

    /// `(gamma/2)·I`, the minimum-uncertainty isotropic state.
    pub fn vacuum(n: usize, gamma: f64) -> Self {
        Self {
            mean: vec![0.0; 2 * n],
            sigma: RealMatrix::identity(2 * n, 2 * n) * (gamma / 2.0),
            form: SymplecticForm::new(n, gamma),
        }
    }

    pub fn n(&self) -> usize {
        self.form.n
    }

    pub fn gamma(&self) -> f64 {
        self.form.gamma
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CovarianceDoc = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CovarianceDoc::from(self)).expect("covariance serializes")
    }
}

/// JSON document `{n, gamma, mean, sigma}` with `sigma` as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDoc {
    pub n: usize,
    pub gamma: f64,
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
}

impl From<&CovarianceState> for CovarianceDoc {
    fn from(s: &CovarianceState) -> Self {
        Self { n: s.n(), gamma: s.gamma(), mean: Some(s.mean.clone()), sigma: linalg::to_rows(&s.sigma) }
    }
}

impl TryFrom<CovarianceDoc> for CovarianceState {
    type Error = Error;

    fn try_from(doc: CovarianceDoc) -> Result<Self> {
        let sigma = linalg::from_rows(&doc.sigma)?;
        let mean = doc.mean.unwrap_or_else(|| vec![0.0; 2 * doc.n]);
        Self::new(mean, sigma, SymplecticForm::new(doc.n, doc.gamma))
    }
}

impl Serialize for CovarianceState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CovarianceDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CovarianceState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CovarianceDoc::deserialize(d)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}

/// `sigma + (i/2)·gamma·J ⪰ 0`.
pub fn rsup_check(state: &CovarianceState, tol: f64) -> Result<PsdVerdict> {
    linalg::psd_with_form(&state.sigma, 0.5, &state.form.matrix(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobertsonVerdict {
    pub product: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `σ(A_i)·σ(B_i) ≥ gamma/2` for every conjugate pair.
pub fn robertson_check(state: &CovarianceState) -> Vec<RobertsonVerdict> {
    let n = state.n();
    let bound = state.gamma().abs() / 2.0;
    let slack = tolerances::SCALAR_RELATION * bound.max(1.0);
    (0..n)
        .map(|i| {
            let product = (state.sigma[(i, i)].max(0.0) * state.sigma[(n + i, n + i)].max(0.0)).sqrt();
            RobertsonVerdict { product, bound, holds: product >= bound - slack }
        })
        .collect()
}

/// `(gamma/2)·S·Sᵀ + P` with `S` random symplectic and `P` a random PSD
/// perturbation (zero for roughly one draw in four, giving pure states).
pub fn random_valid_covariance(n: usize, gamma: f64, seed: u64) -> CovarianceState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_valid_covariance_with(n, gamma, &mut rng)
}

pub fn random_valid_covariance_with<R: Rng>(n: usize, gamma: f64, rng: &mut R) -> CovarianceState {
    assert!(n >= 1 && gamma > 0.0);
    let d = 2 * n;
    let s = symplectic::random_symplectic_with(n, rng);
    let mut sigma = &s * s.transpose() * (gamma / 2.0);
    if rng.random_range(0..4) != 0 {
        let b = RealMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        sigma += &b * b.transpose() * (gamma * rng.random_range(0.0..1.0));
    }
    // exact symmetry
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    CovarianceState { mean: vec![0.0; d], sigma, form: SymplecticForm::new(n, gamma) }
}

/// `sigma′ = S·sigma·Sᵀ`, `mean′ = S·mean`.
pub fn transform_covariance(state: &CovarianceState, s: &RealMatrix) -> Result<CovarianceState> {
    symplectic::ensure_symplectic(s, &state.form, tolerances::SYMPLECTIC)?;
    let sigma = s * &state.sigma * s.transpose();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let mean = s * nalgebra::DVector::from_column_slice(&state.mean);
    Ok(CovarianceState { mean: mean.iter().copied().collect(), sigma, form: state.form })
}
