//! Small dense complex linear algebra: Hermitian eigenvalues, positivity
//! verdicts and determinants.
//!
//! All matrices handled here are tiny (at most a few dozen rows), so the
//! algorithms favour robustness over asymptotic speed.

mod eigen;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances;

pub use eigen::{hermitian_eigen, HermitianEigen};

pub type C64 = Complex64;
pub type RealMatrix = DMatrix<f64>;

/// Dense square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() != inner.ncols() {
            return Err(Error::DimensionMismatch { expected: inner.nrows(), got: inner.ncols() });
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { inner })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    pub fn from_real(m: &RealMatrix) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    /// `re + i·im` for two real matrices of equal shape.
    pub fn from_parts(re: &RealMatrix, im: &RealMatrix) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch { expected: re.nrows(), got: im.nrows() });
        }
        Self::new(re.zip_map(im, C64::new))
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { inner: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Fails with [`Error::NonHermitianInput`] unless `max|M − M†| ≤ tol·max(1, max|M|)`.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let asymmetry = self.hermitian_asymmetry();
        let allowed = tol * self.max_abs().max(1.0);
        if asymmetry > allowed {
            return Err(Error::NonHermitianInput { asymmetry, allowed });
        }
        Ok(())
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(Self { inner: &self.inner + &other.inner })
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim()).map(|i| self.inner.row(i).iter().copied().collect()).collect()
    }
}

/// Ascending eigenvalues of a Hermitian matrix (cyclic Jacobi).
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive-semidefiniteness with a relative tolerance:
/// `min eigenvalue ≥ −tol·max(1, max|M|)`.
pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> Result<PsdVerdict> {
    let values = hermitian_eigenvalues(m)?;
    let min_eigenvalue = values.first().copied().unwrap_or(0.0);
    let scale = m.max_abs().max(1.0);
    Ok(PsdVerdict { psd: min_eigenvalue >= -tol * scale, min_eigenvalue })
}

/// Determinant. Cofactor expansion up to 3×3, LU with partial pivoting above.
pub fn determinant(m: &ComplexMatrix) -> C64 {
    let a = &m.inner;
    match m.dim() {
        0 => C64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3 => {
            a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
                - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
        }
        n => {
            let mut lu = a.clone();
            let mut det = C64::new(1.0, 0.0);
            for k in 0..n {
                let pivot = (k..n).max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm())).unwrap_or(k);
                if lu[(pivot, k)].norm() == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                if pivot != k {
                    lu.swap_rows(pivot, k);
                    det = -det;
                }
                let p = lu[(k, k)];
                det *= p;
                for i in (k + 1)..n {
                    let f = lu[(i, k)] / p;
                    for j in (k + 1)..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
            det
        }
    }
}

/// `M + i·c·W` for real `M` and real `W`, the shape of every uncertainty matrix here.
pub fn real_plus_imaginary(m: &RealMatrix, c: f64, w: &RealMatrix) -> Result<ComplexMatrix> {
    ComplexMatrix::from_parts(m, &(w * c))
}

/// Positivity check of `M + i·c·W` with the Hermitian pre-check applied.
pub fn psd_with_form(m: &RealMatrix, c: f64, w: &RealMatrix, tol: f64) -> Result<PsdVerdict> {
    let mat = real_plus_imaginary(m, c, w)?;
    mat.check_hermitian(tolerances::HERMITIAN)?;
    is_positive_semidefinite(&mat, tol)
}

pub fn max_abs_real(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn to_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<RealMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for row in rows {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch { expected: ncols, got: row.len() });
        }
    }
    let m = RealMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

/// Serde adapter writing a real matrix as a list of rows.
pub mod serde_rows {
    use super::RealMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &RealMatrix, s: S) -> Result<S::Ok, S::Error> {
        super::to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RealMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // (a+b)/2 ± sqrt(((a−b)/2)² + |c|²)
    fn closed_form_2x2(a: f64, b: f64, off: C64) -> [f64; 2] {
        let mid = (a + b) / 2.0;
        let rad = (((a - b) / 2.0).powi(2) + off.norm_sqr()).sqrt();
        [mid - rad, mid + rad]
    }

    #[test]
    fn identity_eigenvalues() {
        let v = hermitian_eigenvalues(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn amplifier_gain_two_eigenvalues() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0 / 16.0, 0.0), c(-0.5, 0.25)], vec![c(-0.5, -0.25), c(1.0, 0.0)]])
            .unwrap();
        let v = hermitian_eigenvalues(&m).unwrap();
        let oracle = closed_form_2x2(1.0 / 16.0, 1.0, c(-0.5, 0.25));
        let frozen = [17.0 / 32.0 - 545f64.sqrt() / 32.0, 17.0 / 32.0 + 545f64.sqrt() / 32.0];
        for k in 0..2 {
            assert!((oracle[k] - frozen[k]).abs() < 1e-15);
            assert!((v[k] - frozen[k]).abs() < 1e-12, "{v:?}");
        }
        assert!((v[0] + 0.1983).abs() < 1e-4);
    }

    #[test]
    fn vacuum_form_eigenvalues() {
        let m =
            ComplexMatrix::from_rows(&[vec![c(0.25, 0.0), c(0.0, 0.25)], vec![c(0.0, -0.25), c(0.25, 0.0)]]).unwrap();
        let v = hermitian_eigenvalues(&m).unwrap();
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NonHermitianInput { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let m = ComplexMatrix::from_rows(&[vec![c(f64::NAN, 0.0)]]);
        assert_eq!(m.unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn psd_examples() {
        let zero = is_positive_semidefinite(&ComplexMatrix::zeros(3), tolerances::PSD).unwrap();
        assert!(zero.psd);
        assert_eq!(zero.min_eigenvalue, 0.0);

        let g = 1.0_f64;
        let published = ComplexMatrix::from_rows(&[
            vec![c(1.0 / (4.0 * g * g), 0.0), c(-0.5, 0.25)],
            vec![c(-0.5, -0.25), c(g * g / 4.0, 0.0)],
        ])
        .unwrap();
        let v = is_positive_semidefinite(&published, tolerances::PSD).unwrap();
        assert!(!v.psd);
        assert!(v.min_eigenvalue < 0.0);

        let vac =
            ComplexMatrix::from_rows(&[vec![c(0.25, 0.0), c(0.0, 0.25)], vec![c(0.0, -0.25), c(0.25, 0.0)]]).unwrap();
        let v = is_positive_semidefinite(&vac, tolerances::PSD).unwrap();
        assert!(v.psd);
        assert!(v.min_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn psd_tolerance_is_relative() {
        // -1e-7 is a rounding-level deficit for a matrix of scale 1e3
        let m = ComplexMatrix::from_real(&RealMatrix::from_row_slice(2, 2, &[1e3, 0.0, 0.0, -1e-7])).unwrap();
        assert!(is_positive_semidefinite(&m, tolerances::PSD).unwrap().psd);
        let m = ComplexMatrix::from_real(&RealMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-7])).unwrap();
        assert!(!is_positive_semidefinite(&m, tolerances::PSD).unwrap().psd);
    }

    #[test]
    fn determinant_examples() {
        for n in 1..7 {
            let d = determinant(&ComplexMatrix::identity(n));
            assert!((d - c(1.0, 0.0)).norm() < 1e-15);
        }
        let sigma = ComplexMatrix::from_real(&RealMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.5, 0.25])).unwrap();
        assert!((determinant(&sigma) - c(-3.0 / 16.0, 0.0)).norm() < 1e-15);
        for g in [0.5, 1.0, 2.0, 5.0] {
            let m = ComplexMatrix::from_rows(&[
                vec![c(1.0 / (4.0 * g * g), 0.0), c(-0.5, 0.25)],
                vec![c(-0.5, -0.25), c(g * g / 4.0, 0.0)],
            ])
            .unwrap();
            let d = determinant(&m);
            assert!((d.re + 0.25).abs() < 1e-12 && d.im.abs() < 1e-12);
        }
    }

    #[test]
    fn lu_determinant_matches_cofactor_on_block_matrix() {
        // block diag of two 2×2 blocks with known determinants, plus a permutation
        let mut m = DMatrix::<C64>::zeros(4, 4);
        m[(0, 1)] = c(2.0, 0.0);
        m[(1, 0)] = c(3.0, 1.0);
        m[(2, 2)] = c(1.0, -1.0);
        m[(2, 3)] = c(0.5, 0.0);
        m[(3, 2)] = c(0.0, 2.0);
        m[(3, 3)] = c(4.0, 0.0);
        let d = determinant(&ComplexMatrix::new(m).unwrap());
        let first = c(0.0, 0.0) - c(2.0, 0.0) * c(3.0, 1.0);
        let second = c(1.0, -1.0) * c(4.0, 0.0) - c(0.5, 0.0) * c(0.0, 2.0);
        assert!((d - first * second).norm() < 1e-12);
    }
}
