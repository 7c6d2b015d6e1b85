//! Symplectic forms and the real symplectic group.
//!
//! Phase-space vectors use the block ordering `(x₁..xₙ, p₁..pₙ)`, for which
//! the standard form is `J = [[0, I], [−I, 0]]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

/// Commutator form `[Z_α, Z_β] = i·gamma·J_αβ` on `n` modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplecticForm {
    pub n: usize,
    pub gamma: f64,
}

impl SymplecticForm {
    pub fn new(n: usize, gamma: f64) -> Self {
        Self { n, gamma }
    }

    /// Quadrature convention `[X, Y] = i/2`.
    pub fn quadrature(n: usize) -> Self {
        Self::new(n, 0.5)
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `gamma·J`.
    pub fn matrix(&self) -> RealMatrix {
        standard_j(self.n) * self.gamma
    }
}

/// Unscaled `J = [[0, I], [−I, 0]]` of size `2n`.
pub fn standard_j(n: usize) -> RealMatrix {
    let mut j = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `max|S·J·Sᵀ − J|` against the unscaled block form of `form`.
pub fn symplectic_deviation(s: &RealMatrix, form: &SymplecticForm) -> Result<f64> {
    let d = form.dim();
    if s.nrows() != d || s.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: s.nrows().max(s.ncols()) });
    }
    let j = standard_j(form.n);
    let diff = s * &j * s.transpose() - j;
    Ok(diff.iter().fold(0.0, |m, x| m.max(x.abs())))
}

pub fn is_symplectic(s: &RealMatrix, form: &SymplecticForm, tol: f64) -> Result<bool> {
    Ok(symplectic_deviation(s, form)? <= tol)
}

/// Fails with [`Error::NotSymplectic`] when the deviation exceeds `tol`.
pub fn ensure_symplectic(s: &RealMatrix, form: &SymplecticForm, tol: f64) -> Result<()> {
    let deviation = symplectic_deviation(s, form)?;
    if deviation > tol {
        return Err(Error::NotSymplectic { deviation });
    }
    Ok(())
}

/// Phase-space rotation of mode `k` by `angle`.
pub fn phase_rotation(n: usize, k: usize, angle: f64) -> RealMatrix {
    let (s, c) = angle.sin_cos();
    let mut m = RealMatrix::identity(2 * n, 2 * n);
    m[(k, k)] = c;
    m[(k, n + k)] = s;
    m[(n + k, k)] = -s;
    m[(n + k, n + k)] = c;
    m
}

/// `x_k ↦ r·x_k`, `p_k ↦ p_k / r`.
pub fn squeezer(n: usize, k: usize, r: f64) -> RealMatrix {
    let mut m = RealMatrix::identity(2 * n, 2 * n);
    m[(k, k)] = r;
    m[(n + k, n + k)] = 1.0 / r;
    m
}

/// `p_k ↦ p_k + t·x_k`.
pub fn shear(n: usize, k: usize, t: f64) -> RealMatrix {
    let mut m = RealMatrix::identity(2 * n, 2 * n);
    m[(n + k, k)] = t;
    m
}

/// Beam-splitter-type rotation mixing modes `a` and `b` (same rotation on x and p).
pub fn mode_mixer(n: usize, a: usize, b: usize, angle: f64) -> RealMatrix {
    let (s, c) = angle.sin_cos();
    let mut m = RealMatrix::identity(2 * n, 2 * n);
    for off in [0, n] {
        m[(off + a, off + a)] = c;
        m[(off + a, off + b)] = s;
        m[(off + b, off + a)] = -s;
        m[(off + b, off + b)] = c;
    }
    m
}

/// Deterministic random element of `Sp(2n, R)` built as a product of
/// rotations, shears, single-mode squeezers and (for `n ≥ 2`) mode mixers.
///
/// Squeezing is kept within `[e^{-0.7}, e^{0.7}]` so conditioning stays mild.
pub fn random_symplectic(n: usize, seed: u64) -> RealMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_symplectic_with(n, &mut rng)
}

pub fn random_symplectic_with<R: Rng>(n: usize, rng: &mut R) -> RealMatrix {
    assert!(n >= 1, "mode count must be positive");
    let tau = std::f64::consts::TAU;
    let mut s = RealMatrix::identity(2 * n, 2 * n);
    for _layer in 0..2 {
        for k in 0..n {
            s = phase_rotation(n, k, rng.random_range(0.0..tau)) * s;
            s = squeezer(n, k, rng.random_range(-0.7_f64..0.7).exp()) * s;
            s = shear(n, k, rng.random_range(-1.0..1.0)) * s;
        }
        for a in 0..n {
            for b in (a + 1)..n {
                s = mode_mixer(n, a, b, rng.random_range(0.0..tau)) * s;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances;

    #[test]
    fn form_properties() {
        for n in 1..4 {
            let form = SymplecticForm::new(n, 0.5);
            let w = form.matrix();
            assert_eq!(w.transpose(), -&w);
            let sq = &w * &w;
            let expect = RealMatrix::identity(2 * n, 2 * n) * (-0.25);
            assert!((sq - expect).amax() < 1e-15);
        }
    }

    #[test]
    fn examples() {
        let form = SymplecticForm::new(1, 1.0);
        assert!(is_symplectic(&RealMatrix::identity(2, 2), &form, 1e-12).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rot = RealMatrix::from_row_slice(2, 2, &[h, h, -h, h]);
        assert!(is_symplectic(&rot, &form, 1e-12).unwrap());
        let diag = RealMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!(!is_symplectic(&diag, &form, 1e-12).unwrap());
        // S J Sᵀ = 6J
        assert!((symplectic_deviation(&diag, &form).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let form = SymplecticForm::new(2, 1.0);
        assert!(matches!(
            is_symplectic(&RealMatrix::identity(2, 2), &form, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn generated_matrices_are_symplectic() {
        for n in 1..=3 {
            let form = SymplecticForm::new(n, 1.0);
            for seed in 0..50 {
                let s = random_symplectic(n, seed);
                assert!(is_symplectic(&s, &form, tolerances::SYMPLECTIC).unwrap(), "n={n} seed={seed}");
                assert!((s.determinant() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(random_symplectic(2, 42), random_symplectic(2, 42));
        assert_ne!(random_symplectic(2, 42), random_symplectic(2, 43));
    }
}
