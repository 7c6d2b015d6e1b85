use serde::{Deserialize, Serialize};

use super::interaction::{noise_disturbance_vectors, LinearInteraction};
use super::space::{CoefficientVector, JointPhaseSpace, JointState};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, RealMatrix};
use crate::symplectic::{self, SymplecticForm};
use crate::tolerances;

/// `K_αβ = ⟨{K_α, K_β}⟩` over the joint state (raw second moments).
pub fn assemble_k(vectors: &[CoefficientVector], joint: &JointState) -> Result<RealMatrix> {
    let d = joint.mean.len();
    if let Some(v) = vectors.iter().find(|v| v.coeffs.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.coeffs.len() });
    }
    let m = vectors.len();
    let mut k = RealMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = joint.second_moment(&vectors[a], &vectors[b]);
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    Ok(k)
}

/// `Γ_αβ = (1/i)⟨[Z_α, K_β] + [K_α, Z_β]⟩` over the selected observables.
pub fn assemble_gamma(ix: &LinearInteraction, vectors: &[CoefficientVector]) -> RealMatrix {
    let selected = ix.selected();
    let m = selected.len();
    let g = RealMatrix::from_fn(m, m, |a, b| {
        ix.space.commutator(&selected[a], &vectors[b]) + ix.space.commutator(&vectors[a], &selected[b])
    });
    debug_assert!((&g + g.transpose()).amax() <= tolerances::SKEW * g.amax().max(1.0));
    g
}

/// `𝒢_αβ = (1/i)⟨[Z_α, Z_β]⟩` restricted to `(A₁..Aₙ, B₁..Bₙ)`.
pub fn assemble_cal_g(space: &JointPhaseSpace, measured: &[usize], disturbed: &[usize]) -> RealMatrix {
    let idx: Vec<usize> = measured.iter().chain(disturbed).copied().collect();
    let w = space.omega();
    RealMatrix::from_fn(idx.len(), idx.len(), |a, b| w[(idx[a], idx[b])])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixVerdict {
    pub holds: bool,
    pub min_eigenvalue: f64,
    pub saturated: bool,
    /// Real part of the determinant; imaginary part is checked to vanish.
    pub determinant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `ε·η`, compared against the same `rhs`.
    pub heisenberg_product: f64,
    pub heisenberg_holds: bool,
    pub heisenberg_saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryLink {
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub matrix_oup: MatrixVerdict,
    /// Present when `Γ = 0` (independent intervention).
    pub matrix_heisenberg: Option<MatrixVerdict>,
    pub scalar_oup: Vec<ScalarVerdict>,
    /// One-pair models only.
    pub determinant_corollary: Option<Vec<CorollaryLink>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub gain: Option<f64>,
    pub probe: Option<String>,
}

/// Noise–disturbance assessment of one measuring interaction on one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdAssessment {
    pub n: usize,
    #[serde(with = "crate::linalg::serde_rows")]
    pub k: RealMatrix,
    #[serde(with = "crate::linalg::serde_rows")]
    pub gamma: RealMatrix,
    #[serde(with = "crate::linalg::serde_rows")]
    pub cal_g: RealMatrix,
    pub epsilon: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma_a: Vec<f64>,
    pub sigma_b: Vec<f64>,
    pub tol: f64,
    pub verdicts: Verdicts,
    #[serde(default)]
    pub provenance: Option<Provenance>,
}

impl NdAssessment {
    /// Assembles the assessment from its matrices and recomputes every verdict.
    pub fn from_parts(
        k: RealMatrix,
        gamma: RealMatrix,
        cal_g: RealMatrix,
        sigma_a: Vec<f64>,
        sigma_b: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        let m = k.nrows();
        if !m.is_multiple_of(2) || k.ncols() != m || gamma.shape() != (m, m) || cal_g.shape() != (m, m) {
            return Err(Error::DimensionMismatch { expected: m, got: gamma.nrows() });
        }
        let n = m / 2;
        if sigma_a.len() != n || sigma_b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma_a.len() });
        }
        let epsilon = (0..n).map(|i| k[(i, i)].max(0.0).sqrt()).collect();
        let eta = (0..n).map(|j| k[(n + j, n + j)].max(0.0).sqrt()).collect();
        let mut a = Self {
            n,
            k,
            gamma,
            cal_g,
            epsilon,
            eta,
            sigma_a,
            sigma_b,
            tol,
            verdicts: Verdicts {
                matrix_oup: MatrixVerdict { holds: false, min_eigenvalue: 0.0, saturated: false, determinant: 0.0 },
                matrix_heisenberg: None,
                scalar_oup: Vec::new(),
                determinant_corollary: None,
            },
            provenance: None,
        };
        a.verdicts = Verdicts {
            matrix_oup: matrix_oup_check(&a, tol)?,
            matrix_heisenberg: matrix_heisenberg_check(&a, tol)?,
            scalar_oup: scalar_oup_check(&a),
            determinant_corollary: (n == 1).then(|| determinant_corollary(&a)),
        };
        Ok(a)
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    /// `K + (i/2)(Γ + 𝒢)`.
    pub fn uncertainty_matrix(&self) -> Result<ComplexMatrix> {
        linalg::real_plus_imaginary(&self.k, 0.5, &(&self.gamma + &self.cal_g))
    }

    /// Whether `Γ` vanishes to rounding.
    pub fn independent_intervention(&self) -> bool {
        self.gamma.amax() <= tolerances::EXACT * self.cal_g.amax().max(1.0)
    }

    /// `|⟨[A_i, B_i]⟩| / 2`.
    pub fn commutator_bound(&self, i: usize) -> f64 {
        self.cal_g[(i, self.n + i)].abs() / 2.0
    }
}

fn matrix_verdict(k: &RealMatrix, w: &RealMatrix, tol: f64) -> Result<MatrixVerdict> {
    let mat = linalg::real_plus_imaginary(k, 0.5, w)?;
    mat.check_hermitian(tolerances::HERMITIAN)?;
    let v = linalg::is_positive_semidefinite(&mat, tol)?;
    let det = linalg::determinant(&mat);
    let scale = mat.max_abs().max(1.0);
    debug_assert!(det.im.abs() <= 1e-12 * scale.powi(k.nrows() as i32));
    Ok(MatrixVerdict {
        holds: v.psd,
        min_eigenvalue: v.min_eigenvalue,
        saturated: v.psd && v.min_eigenvalue.abs() <= tolerances::SATURATION * scale,
        determinant: det.re,
    })
}

/// `K + (i/2)(Γ + 𝒢) ⪰ 0`.
pub fn matrix_oup_check(a: &NdAssessment, tol: f64) -> Result<MatrixVerdict> {
    matrix_verdict(&a.k, &(&a.gamma + &a.cal_g), tol)
}

/// `K + (i/2)𝒢 ⪰ 0`, evaluated only for independent-intervention models.
pub fn matrix_heisenberg_check(a: &NdAssessment, tol: f64) -> Result<Option<MatrixVerdict>> {
    if !a.independent_intervention() {
        return Ok(None);
    }
    matrix_verdict(&a.k, &a.cal_g, tol).map(Some)
}

/// Per-pair `εη + εσ(B) + σ(A)η ≥ |⟨[A,B]⟩|/2`, plus the bare product `εη`.
pub fn scalar_oup_check(a: &NdAssessment) -> Vec<ScalarVerdict> {
    (0..a.n)
        .map(|i| {
            let (e, h) = (a.epsilon[i], a.eta[i]);
            let rhs = a.commutator_bound(i);
            let slack = tolerances::SCALAR_RELATION * rhs.max(1.0);
            let lhs = e * h + e * a.sigma_b[i] + a.sigma_a[i] * h;
            let product = e * h;
            ScalarVerdict {
                lhs,
                rhs,
                holds: lhs >= rhs - slack,
                heisenberg_product: product,
                heisenberg_holds: product >= rhs - slack,
                heisenberg_saturated: (product - rhs).abs() <= slack,
            }
        })
        .collect()
}

/// The chain from the 2×2 determinant down to the scalar relation, for one pair.
///
/// With `g = Γ₁₂ + 𝒢₁₂` the links are
/// `⟨N²⟩⟨D²⟩ ≥ ⟨{N,D}⟩² + g²/4 ≥ g²/4`, then `εη ≥ |g|/2`,
/// `|g|/2 ≥ ||Γ₁₂| − |𝒢₁₂||/2` and finally `εη ≥ |𝒢₁₂|/2 − |Γ₁₂|/2`.
pub fn determinant_corollary(a: &NdAssessment) -> Vec<CorollaryLink> {
    let k = &a.k;
    let g12 = a.gamma[(0, 1)];
    let c12 = a.cal_g[(0, 1)];
    let g = g12 + c12;
    let scale = k.amax().max(g.abs()).max(1.0);
    let slack = tolerances::SCALAR_RELATION * scale * scale;
    let eh = a.epsilon[0] * a.eta[0];
    let link = |relation: &str, lhs: f64, rhs: f64| CorollaryLink {
        relation: relation.to_string(),
        lhs,
        rhs,
        holds: lhs >= rhs - slack,
    };
    vec![
        link("<N^2><D^2> >= <{N,D}>^2 + |g|^2/4", k[(0, 0)] * k[(1, 1)], k[(0, 1)].powi(2) + g * g / 4.0),
        link("<{N,D}>^2 + |g|^2/4 >= |g|^2/4", k[(0, 1)].powi(2) + g * g / 4.0, g * g / 4.0),
        link("eps*eta >= |g|/2", eh, g.abs() / 2.0),
        link("eps*eta >= ||Gamma12| - |G12||/2", eh, (g12.abs() - c12.abs()).abs() / 2.0),
        link("eps*eta >= |G12|/2 - |Gamma12|/2", eh, c12.abs() / 2.0 - g12.abs() / 2.0),
    ]
}

/// Assembles `K`, `Γ`, `𝒢` and every verdict for an interaction on a joint state.
pub fn assess(ix: &LinearInteraction, joint: &JointState, tol: f64) -> Result<NdAssessment> {
    let vectors = noise_disturbance_vectors(ix);
    let k = assemble_k(&vectors, joint)?;
    let gamma = assemble_gamma(ix, &vectors);
    let cal_g = assemble_cal_g(&ix.space, &ix.measured, &ix.disturbed);
    let sigma_a = ix.measured.iter().map(|&i| joint.spread(i)).collect();
    let sigma_b = ix.disturbed.iter().map(|&i| joint.spread(i)).collect();
    NdAssessment::from_parts(k, gamma, cal_g, sigma_a, sigma_b, tol)
}

/// `K ↦ S·K·Sᵀ` (and `Γ`, `𝒢` likewise) for symplectic `S` on the 2n-vector `K`.
pub fn rotate_nd(a: &NdAssessment, s: &RealMatrix) -> Result<NdAssessment> {
    symplectic::ensure_symplectic(s, &SymplecticForm::new(a.n, 1.0), tolerances::SYMPLECTIC)?;
    let conj = |m: &RealMatrix| s * m * s.transpose();
    let k = conj(&a.k);
    let k = (&k + k.transpose()) * 0.5;
    let mut out =
        NdAssessment::from_parts(k, conj(&a.gamma), conj(&a.cal_g), a.sigma_a.clone(), a.sigma_b.clone(), a.tol)?;
    out.provenance = a.provenance.clone();
    Ok(out)
}
