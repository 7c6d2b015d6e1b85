use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceState;
use crate::linalg::RealMatrix;
use crate::symplectic::standard_j;

/// Joint object ⊗ probe phase space with c-number commutators.
///
/// Ordering is `(A₁..Aₙ, B₁..Bₙ, X₁..Xₘ, Y₁..Yₘ)`: the object block first in
/// its own `(x.., p..)` form, then the probe block likewise. The commutator
/// matrix is `Ω = gamma·diag(J_obj, J_probe)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPhaseSpace {
    pub n_obj: usize,
    pub n_probe: usize,
    pub gamma: f64,
    pub labels: Vec<String>,
}

impl JointPhaseSpace {
    pub fn new(n_obj: usize, n_probe: usize, gamma: f64) -> Self {
        let mut labels = Vec::new();
        let suffix = |k: usize, n: usize| if n == 1 { String::new() } else { (k + 1).to_string() };
        for k in 0..n_obj {
            labels.push(format!("X_a{}", suffix(k, n_obj)));
        }
        for k in 0..n_obj {
            labels.push(format!("Y_a{}", suffix(k, n_obj)));
        }
        for k in 0..n_probe {
            labels.push(format!("X_b{}", suffix(k, n_probe)));
        }
        for k in 0..n_probe {
            labels.push(format!("Y_b{}", suffix(k, n_probe)));
        }
        Self { n_obj, n_probe, gamma, labels }
    }

    /// One object mode and one probe mode, `[X, Y] = i/2`.
    pub fn quadrature_pair() -> Self {
        Self::new(1, 1, 0.5)
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_obj + self.n_probe)
    }

    pub fn obj_x(&self, k: usize) -> usize {
        k
    }

    pub fn obj_p(&self, k: usize) -> usize {
        self.n_obj + k
    }

    pub fn probe_x(&self, k: usize) -> usize {
        2 * self.n_obj + k
    }

    pub fn probe_p(&self, k: usize) -> usize {
        2 * self.n_obj + self.n_probe + k
    }

    pub fn is_probe(&self, idx: usize) -> bool {
        idx >= 2 * self.n_obj
    }

    /// `Ω` with `[Z_α, Z_β] = i·Ω_αβ`.
    pub fn omega(&self) -> RealMatrix {
        let d = self.dim();
        let o = 2 * self.n_obj;
        let mut w = RealMatrix::zeros(d, d);
        w.view_mut((0, 0), (o, o)).copy_from(&standard_j(self.n_obj));
        w.view_mut((o, o), (d - o, d - o)).copy_from(&standard_j(self.n_probe));
        w * self.gamma
    }

    /// Permutation `P` with `z_standard = P·z_joint`, where the standard
    /// ordering is `(x_obj.., x_probe.., p_obj.., p_probe..)`.
    pub fn to_standard(&self) -> RealMatrix {
        let d = self.dim();
        let n = self.n_obj + self.n_probe;
        let mut p = RealMatrix::zeros(d, d);
        for k in 0..self.n_obj {
            p[(k, self.obj_x(k))] = 1.0;
            p[(n + k, self.obj_p(k))] = 1.0;
        }
        for k in 0..self.n_probe {
            p[(self.n_obj + k, self.probe_x(k))] = 1.0;
            p[(n + self.n_obj + k, self.probe_p(k))] = 1.0;
        }
        p
    }

    pub fn unit(&self, idx: usize) -> CoefficientVector {
        let mut coeffs = vec![0.0; self.dim()];
        coeffs[idx] = 1.0;
        CoefficientVector::new(coeffs)
    }

    /// `(1/i)·⟨[u·Z, v·Z]⟩ = uᵀ·Ω·v`.
    pub fn commutator(&self, u: &CoefficientVector, v: &CoefficientVector) -> f64 {
        let w = self.omega();
        let u = DVector::from_column_slice(&u.coeffs);
        let v = DVector::from_column_slice(&v.coeffs);
        (u.transpose() * w * v)[(0, 0)]
    }

    /// Human-readable form of a coefficient vector, e.g. `0.5·X_b - 2·Y_b`.
    pub fn describe(&self, v: &CoefficientVector) -> String {
        let mut terms: Vec<String> = v
            .coeffs
            .iter()
            .zip(&self.labels)
            .filter(|(c, _)| c.abs() > 0.0)
            .map(|(c, l)| if (*c - 1.0).abs() == 0.0 { l.clone() } else { format!("{c}·{l}") })
            .collect();
        if v.offset != 0.0 {
            terms.push(v.offset.to_string());
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

/// The operator `coeffs·Z_in + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs, offset: 0.0 }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect(), offset: self.offset * c }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            offset: self.offset - other.offset,
        }
    }

    /// Row vector times `T`: the Heisenberg-picture output of this observable.
    pub fn through(&self, t: &RealMatrix) -> Self {
        let row = DVector::from_column_slice(&self.coeffs).transpose() * t;
        Self { coeffs: row.iter().copied().collect(), offset: self.offset }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(self.offset.abs(), |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.coeffs.iter().all(|x| x.is_finite())
    }
}

/// Second moments of the joint object ⊗ probe state in the joint ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub mean: Vec<f64>,
    pub sigma: RealMatrix,
}

impl JointState {
    pub fn new(space: &JointPhaseSpace, mean: Vec<f64>, sigma: RealMatrix) -> Result<Self> {
        let d = space.dim();
        if mean.len() != d || sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sigma.nrows() });
        }
        Ok(Self { mean, sigma })
    }

    /// Product state `ψ ⊗ ξ`: block-diagonal covariance.
    pub fn product(space: &JointPhaseSpace, object: &CovarianceState, probe: &CovarianceState) -> Result<Self> {
        if object.n() != space.n_obj {
            return Err(Error::DimensionMismatch { expected: space.n_obj, got: object.n() });
        }
        if probe.n() != space.n_probe {
            return Err(Error::DimensionMismatch { expected: space.n_probe, got: probe.n() });
        }
        let d = space.dim();
        let o = 2 * space.n_obj;
        let mut sigma = RealMatrix::zeros(d, d);
        sigma.view_mut((0, 0), (o, o)).copy_from(&object.sigma);
        sigma.view_mut((o, o), (d - o, d - o)).copy_from(&probe.sigma);
        let mean = object.mean.iter().chain(&probe.mean).copied().collect();
        Ok(Self { mean, sigma })
    }

    /// `⟨v·Z + offset⟩`.
    pub fn expectation(&self, v: &CoefficientVector) -> f64 {
        v.coeffs.iter().zip(&self.mean).map(|(c, m)| c * m).sum::<f64>() + v.offset
    }

    /// `⟨{u·Z, v·Z}⟩` including the mean-product term.
    pub fn second_moment(&self, u: &CoefficientVector, v: &CoefficientVector) -> f64 {
        let a = DVector::from_column_slice(&u.coeffs);
        let b = DVector::from_column_slice(&v.coeffs);
        (a.transpose() * &self.sigma * b)[(0, 0)] + self.expectation(u) * self.expectation(v)
    }

    /// Central standard deviation of a single coordinate.
    pub fn spread(&self, idx: usize) -> f64 {
        self.sigma[(idx, idx)].max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{self, SymplecticForm};
    use crate::tolerances;

    #[test]
    fn omega_layout() {
        let s = JointPhaseSpace::quadrature_pair();
        let w = s.omega();
        assert_eq!(w[(0, 1)], 0.5);
        assert_eq!(w[(1, 0)], -0.5);
        assert_eq!(w[(2, 3)], 0.5);
        assert_eq!(w[(0, 3)], 0.0);
        assert_eq!(s.labels, vec!["X_a", "Y_a", "X_b", "Y_b"]);
    }

    #[test]
    fn permutation_maps_omega_to_standard_form() {
        for (no, np) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let s = JointPhaseSpace::new(no, np, 1.0);
            let p = s.to_standard();
            let j = SymplecticForm::new(no + np, 1.0).matrix();
            assert_eq!(&p * s.omega() * p.transpose(), j);
            let t = p.transpose() * symplectic::random_symplectic(no + np, 3) * &p;
            let dev = (&t * s.omega() * t.transpose() - s.omega()).amax();
            assert!(dev < tolerances::SYMPLECTIC);
        }
    }

    #[test]
    fn second_moment_with_means() {
        let s = JointPhaseSpace::quadrature_pair();
        let obj =
            CovarianceState::new(vec![1.0, 0.0], RealMatrix::identity(2, 2) * 0.25, SymplecticForm::quadrature(1))
                .unwrap();
        let probe = CovarianceState::vacuum(1, 0.5);
        let joint = JointState::product(&s, &obj, &probe).unwrap();
        let xa = s.unit(0);
        assert!((joint.second_moment(&xa, &xa) - 1.25).abs() < 1e-15);
        assert_eq!(joint.spread(0), 0.5);
    }
}
