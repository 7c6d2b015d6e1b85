use nalgebra::DMatrix;

use super::{ComplexMatrix, C64};
use crate::error::Result;
use crate::tolerances;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    /// `max|V·diag(values)·V† − M|`.
    pub fn reconstruction_residual(&self, m: &ComplexMatrix) -> f64 {
        let n = self.values.len();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(self.values[i], 0.0) } else { C64::new(0.0, 0.0) });
        let rebuilt = &self.vectors * d * self.vectors.adjoint();
        (rebuilt - m.as_inner()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

/// Cyclic complex Jacobi.
///
/// Each rotation first removes the phase of the pivot `A[p][q]` with a
/// diagonal unitary, then annihilates the now-real pivot with a plane
/// rotation. Eigenvalues are read from the real diagonal, so their
/// imaginary parts are zero by construction.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    m.check_hermitian(tolerances::HERMITIAN)?;
    let n = m.dim();
    // symmetrize so rounding-level asymmetry does not leak into the sweep
    let mut a = DMatrix::from_fn(n, n, |i, j| (m.get(i, j) + m.get(j, i).conj()) * 0.5);
    let mut v = DMatrix::<C64>::identity(n, n);

    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale * 1e-2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * g).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // U = diag(1, conj(phase)) · [[c, s], [−s, c]]
                let u00 = C64::new(c, 0.0);
                let u01 = C64::new(s, 0.0);
                let u10 = -phase.conj() * s;
                let u11 = phase.conj() * c;
                rotate(&mut a, &mut v, p, q, [u00, u01, u10, u11]);
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

// A ← U†·A·U on the (p, q) plane, V ← V·U.
fn rotate(a: &mut DMatrix<C64>, v: &mut DMatrix<C64>, p: usize, q: usize, u: [C64; 4]) {
    let [u00, u01, u10, u11] = u;
    let n = a.nrows();
    for r in 0..n {
        let ap = a[(r, p)];
        let aq = a[(r, q)];
        a[(r, p)] = ap * u00 + aq * u10;
        a[(r, q)] = ap * u01 + aq * u11;
        let vp = v[(r, p)];
        let vq = v[(r, q)];
        v[(r, p)] = vp * u00 + vq * u10;
        v[(r, q)] = vp * u01 + vq * u11;
    }
    for col in 0..n {
        let ap = a[(p, col)];
        let aq = a[(q, col)];
        a[(p, col)] = u00.conj() * ap + u10.conj() * aq;
        a[(q, col)] = u01.conj() * ap + u11.conj() * aq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.random_range(-3.0..3.0), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        ComplexMatrix::new(m).unwrap()
    }

    #[test]
    fn reconstruction_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..20 {
                let m = random_hermitian(n, &mut rng);
                let e = hermitian_eigen(&m).unwrap();
                let tol = tolerances::EIGEN_RECONSTRUCTION * m.max_abs().max(1.0);
                assert!(e.reconstruction_residual(&m) <= tol);
                let trace: f64 = (0..n).map(|i| m.get(i, i).re).sum();
                let sum: f64 = e.values.iter().sum();
                assert!((trace - sum).abs() < 1e-10);
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn vectors_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(6, &mut rng);
        let e = hermitian_eigen(&m).unwrap();
        let gram = e.vectors.adjoint() * &e.vectors;
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn agrees_with_nalgebra_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let m = random_hermitian(5, &mut rng);
            let mut reference: Vec<f64> = m.as_inner().clone().symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let ours = hermitian_eigen(&m).unwrap().values;
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
