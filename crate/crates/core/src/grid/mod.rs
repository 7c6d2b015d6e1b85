//! Wavefunctions on uniform coordinate grids, used as an oracle that is
//! independent of the bilinear-form moment algebra.
//!
//! Grids are periodic in the discrete sense: an axis with `points` samples on
//! `[x_min, x_max)` has spacing `(x_max − x_min)/points`, and quadrature is the
//! plain sum times the cell volume (the trapezoidal rule for periodic data).
//! The conjugate operator is `Y = −i·gamma·∂/∂x`, so `[X, Y] = i·gamma`.

mod operator;
pub mod saturation;

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, C64};
use crate::measurement::{CoefficientVector, JointPhaseSpace};
use crate::tolerances;

pub use operator::GridOperator;

pub const MIN_POINTS: usize = 64;
pub const DEFAULT_POINTS_1D: usize = 512;
pub const DEFAULT_POINTS_2D: usize = 256;
pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Axis {
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, points }
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.points as f64
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.coordinate(k)).collect()
    }

    /// Same domain, `factor` times as many points.
    pub fn refined(&self, factor: f64) -> Self {
        Self { points: ((self.points as f64) * factor).round() as usize, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    /// Fourier differentiation on the periodic domain.
    #[default]
    Spectral,
    /// Fourth-order central differences with zero values outside the domain.
    CentralFd4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!("1 or 2 axes supported, got {}", axes.len())));
        }
        for a in &axes {
            if a.points < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "need at least {MIN_POINTS} points per axis, got {}",
                    a.points
                )));
            }
            if !a.x_min.is_finite() || !a.x_max.is_finite() || a.x_max <= a.x_min {
                return Err(Error::InvalidGrid(format!("bad interval [{}, {})", a.x_min, a.x_max)));
            }
        }
        Ok(Self { axes })
    }

    /// Default grid for states whose largest position spread is `sigma`:
    /// `[−12σ, 12σ)` with 512 points (1D) or 256 per axis (2D).
    pub fn default_for(sigma: f64, dims: usize) -> Result<Self> {
        let points = if dims == 1 { DEFAULT_POINTS_1D } else { DEFAULT_POINTS_2D };
        Self::new(vec![Axis::symmetric(DEFAULT_HALF_WIDTH_SIGMAS * sigma, points); dims])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Stride of `axis` in the flattened (row-major, axis 0 outermost) layout.
    fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.points).product()
    }

    /// Coordinate along `axis` of flattened index `idx`.
    pub fn coordinate_of(&self, idx: usize, axis: usize) -> f64 {
        let k = (idx / self.stride(axis)) % self.axes[axis].points;
        self.axes[axis].coordinate(k)
    }

    pub fn refined(&self, factor: f64) -> Result<Self> {
        Self::new(self.axes.iter().map(|a| a.refined(factor)).collect())
    }

    /// `∂/∂x_axis` of flattened data.
    pub fn derivative(&self, data: &[C64], axis: usize, scheme: DerivativeScheme) -> Vec<C64> {
        let n = self.axes[axis].points;
        let stride = self.stride(axis);
        let lines = data.len() / n;
        let mut out = vec![C64::new(0.0, 0.0); data.len()];
        let fft = match scheme {
            DerivativeScheme::Spectral => Some(SpectralDerivative::new(&self.axes[axis])),
            DerivativeScheme::CentralFd4 => None,
        };
        let mut line = vec![C64::new(0.0, 0.0); n];
        for l in 0..lines {
            let base = (l / stride) * stride * n + (l % stride);
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = data[base + k * stride];
            }
            let d = match &fft {
                Some(s) => s.apply(&line),
                None => fd4(&line, self.axes[axis].spacing()),
            };
            for (k, v) in d.into_iter().enumerate() {
                out[base + k * stride] = v;
            }
        }
        out
    }
}

struct SpectralDerivative {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl SpectralDerivative {
    fn new(axis: &Axis) -> Self {
        let n = axis.points;
        let mut planner = FftPlanner::new();
        let length = axis.x_max - axis.x_min;
        let wavenumbers = (0..n)
            .map(|j| {
                let j = j as i64;
                let n = n as i64;
                let m = if 2 * j < n {
                    j
                } else if 2 * j == n {
                    0
                } else {
                    j - n
                };
                std::f64::consts::TAU * m as f64 / length
            })
            .collect();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), wavenumbers }
    }

    fn apply(&self, line: &[C64]) -> Vec<C64> {
        let n = line.len();
        let mut buf = line.to_vec();
        self.forward.process(&mut buf);
        for (z, k) in buf.iter_mut().zip(&self.wavenumbers) {
            *z *= C64::new(0.0, *k) / n as f64;
        }
        self.inverse.process(&mut buf);
        buf
    }
}

fn fd4(line: &[C64], dx: f64) -> Vec<C64> {
    let n = line.len() as isize;
    let at = |k: isize| if k < 0 || k >= n { C64::new(0.0, 0.0) } else { line[k as usize] };
    (0..n).map(|i| (at(i - 2) - at(i - 1) * 8.0 + at(i + 1) * 8.0 - at(i + 2)) / (12.0 * dx)).collect()
}

/// Normalized wavefunction on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub grid: Grid,
    pub amplitudes: Vec<C64>,
    pub gamma: f64,
}

impl GridState {
    /// Normalizes the amplitudes and checks the boundary-decay invariant.
    pub fn new(grid: Grid, amplitudes: Vec<C64>, gamma: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: amplitudes.len() });
        }
        let mut s = Self { grid, amplitudes, gamma };
        let norm = s.norm_squared().sqrt();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::UnrepresentableOnGrid("zero or non-finite norm".into()));
        }
        s.amplitudes.iter_mut().for_each(|z| *z /= norm);
        let ratio = s.boundary_ratio();
        if ratio > tolerances::GRID_BOUNDARY {
            return Err(Error::UnrepresentableOnGrid(format!(
                "boundary amplitude is {ratio:.2e} of the peak (limit {:.0e})",
                tolerances::GRID_BOUNDARY
            )));
        }
        Ok(s)
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(C64::norm_sqr).sum::<f64>() * self.grid.cell_volume()
    }

    /// Largest boundary amplitude relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.amplitudes.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let mut edge = 0.0_f64;
        for (idx, z) in self.amplitudes.iter().enumerate() {
            for (axis, a) in self.grid.axes.iter().enumerate() {
                let k = (idx / self.grid.stride(axis)) % a.points;
                if k == 0 || k + 1 == a.points {
                    edge = edge.max(z.norm());
                }
            }
        }
        edge / peak
    }

    /// Product state on the 2D grid whose axes are the factors' axes.
    pub fn product(a: &GridState, b: &GridState) -> Result<Self> {
        if a.grid.dims() != 1 || b.grid.dims() != 1 {
            return Err(Error::InvalidGrid("product expects two one-dimensional states".into()));
        }
        if a.gamma != b.gamma {
            return Err(Error::InvalidGrid("factors use different commutation constants".into()));
        }
        let grid = Grid::new(vec![a.grid.axes[0], b.grid.axes[0]])?;
        let amplitudes = a.amplitudes.iter().flat_map(|x| b.amplitudes.iter().map(move |y| x * y)).collect();
        Self::new(grid, amplitudes, a.gamma)
    }

    fn inner(&self, u: &[C64], v: &[C64]) -> C64 {
        u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.cell_volume()
    }

    /// Position spread along `axis`.
    pub fn spread(&self, axis: usize) -> f64 {
        let x = GridOperator::position(self.grid.dims(), axis);
        let mean = expectation(self, &x, DerivativeScheme::Spectral).re;
        let x2 = x.compose_position(axis);
        (expectation(self, &x2, DerivativeScheme::Spectral).re - mean * mean).max(0.0).sqrt()
    }
}

/// Pure Gaussian `ψ(x) ∝ exp(−a x²)` with position variance `sigma_xx` and
/// symmetrized correlation `sigma_xy`; purity fixes
/// `sigma_yy = (gamma²/4 + sigma_xy²)/sigma_xx`.
pub fn gaussian_state(grid: &Grid, sigma_xx: f64, sigma_xy: f64, gamma: f64) -> Result<GridState> {
    gaussian_state_displaced(grid, sigma_xx, sigma_xy, [0.0, 0.0], gamma)
}

/// [`gaussian_state`] displaced to means `(⟨X⟩, ⟨Y⟩) = mean`.
pub fn gaussian_state_displaced(
    grid: &Grid,
    sigma_xx: f64,
    sigma_xy: f64,
    mean: [f64; 2],
    gamma: f64,
) -> Result<GridState> {
    if grid.dims() != 1 {
        return Err(Error::InvalidGrid("gaussian_state needs a one-dimensional grid".into()));
    }
    if !sigma_xx.is_finite() || sigma_xx <= 0.0 || !sigma_xy.is_finite() || gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::UnphysicalCovariance(format!("sigma_xx = {sigma_xx}, sigma_xy = {sigma_xy}")));
    }
    let a_re = 1.0 / (4.0 * sigma_xx);
    let a_im = -sigma_xy / (2.0 * gamma * sigma_xx);
    let a = C64::new(a_re, a_im);
    let [x0, p0] = mean;
    let amplitudes = grid.axes[0]
        .coordinates()
        .into_iter()
        .map(|x| {
            let u = x - x0;
            (-a * u * u + C64::new(0.0, p0 * u / gamma)).exp()
        })
        .collect();
    GridState::new(grid.clone(), amplitudes, gamma)
}

/// The variance `sigma_yy` a pure Gaussian must have for given `sigma_xx`, `sigma_xy`.
pub fn pure_sigma_yy(sigma_xx: f64, sigma_xy: f64, gamma: f64) -> f64 {
    (gamma * gamma / 4.0 + sigma_xy * sigma_xy) / sigma_xx
}

/// Pure Gaussian matching a full 2×2 covariance, rejecting covariances that
/// violate the uncertainty bound or belong to mixed states.
pub fn gaussian_state_for_covariance(grid: &Grid, sigma: &RealMatrix, gamma: f64) -> Result<GridState> {
    gaussian_state_for_moments(grid, sigma, [0.0, 0.0], gamma)
}

/// [`gaussian_state_for_covariance`] with means.
pub fn gaussian_state_for_moments(grid: &Grid, sigma: &RealMatrix, mean: [f64; 2], gamma: f64) -> Result<GridState> {
    let (sxx, sxy, syy) = (sigma[(0, 0)], sigma[(0, 1)], sigma[(1, 1)]);
    let det = sxx * syy - sxy * sxy;
    let bound = gamma * gamma / 4.0;
    if sxy.abs() > (sxx.max(0.0) * syy.max(0.0)).sqrt() {
        return Err(Error::UnphysicalCovariance(format!(
            "|sigma_xy| = {} exceeds sqrt(sigma_xx sigma_yy) = {}; det = {det}",
            sxy.abs(),
            (sxx * syy).sqrt()
        )));
    }
    if det < bound * (1.0 - 1e-12) {
        return Err(Error::UnphysicalCovariance(format!("det = {det} below gamma^2/4 = {bound}")));
    }
    if det > bound * (1.0 + 1e-12) {
        return Err(Error::UnphysicalCovariance(format!("det = {det} above gamma^2/4 = {bound}: mixed state")));
    }
    gaussian_state_displaced(grid, sxx, sxy, mean, gamma)
}

/// `⟨ψ|Op|ψ⟩`.
pub fn expectation(state: &GridState, op: &GridOperator, scheme: DerivativeScheme) -> C64 {
    let applied = op.apply(state, scheme);
    state.inner(&state.amplitudes, &applied)
}

/// `Re⟨K_α ψ|K_β ψ⟩`, i.e. `⟨{K_α, K_β}⟩` for Hermitian `K`.
pub fn moment_matrix(state: &GridState, ops: &[GridOperator], scheme: DerivativeScheme) -> RealMatrix {
    let applied: Vec<Vec<C64>> = ops.iter().map(|op| op.apply(state, scheme)).collect();
    let m = ops.len();
    let mut k = RealMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = state.inner(&applied[a], &applied[b]).re;
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    k
}

/// `⟨[X, Y]⟩` along `axis`, which should be `i·gamma`.
pub fn grid_commutator(state: &GridState, axis: usize, scheme: DerivativeScheme) -> C64 {
    let d = state.grid.dims();
    let x = GridOperator::position(d, axis).apply(state, scheme);
    let y = GridOperator::conjugate(d, axis, state.gamma).apply(state, scheme);
    state.inner(&x, &y) - state.inner(&y, &x)
}

/// Which joint-space coordinates each grid axis carries: `(x index, p index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMap {
    pub axes: Vec<(usize, usize)>,
}

impl ModeMap {
    pub fn probe_only(space: &JointPhaseSpace) -> Self {
        Self { axes: vec![(space.probe_x(0), space.probe_p(0))] }
    }

    pub fn object_and_probe(space: &JointPhaseSpace) -> Self {
        Self { axes: vec![(space.obj_x(0), space.obj_p(0)), (space.probe_x(0), space.probe_p(0))] }
    }
}

/// Grid operators for coefficient vectors over the joint space. Coefficients
/// on coordinates that no axis carries are rejected.
pub fn ops_from_vectors(vectors: &[CoefficientVector], map: &ModeMap, gamma: f64) -> Result<Vec<GridOperator>> {
    vectors
        .iter()
        .map(|v| {
            let covered: Vec<usize> = map.axes.iter().flat_map(|&(x, p)| [x, p]).collect();
            if let Some((idx, _)) = v.coeffs.iter().enumerate().find(|(i, c)| **c != 0.0 && !covered.contains(i)) {
                return Err(Error::InvalidGrid(format!("coordinate {idx} is not carried by any grid axis")));
            }
            let x: Vec<C64> = map.axes.iter().map(|&(xi, _)| C64::new(v.coeffs[xi], 0.0)).collect();
            let y: Vec<C64> = map.axes.iter().map(|&(_, pi)| C64::new(v.coeffs[pi], 0.0)).collect();
            let mut op = GridOperator::from_quadratures(&x, &y, gamma);
            op.constant = C64::new(v.offset, 0.0);
            Ok(op)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vacuum_grid() -> Grid {
        Grid::default_for(0.5, 1).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(Grid::new(vec![Axis::symmetric(1.0, 32)]), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(vec![]), Err(Error::InvalidGrid(_))));
        let g = Grid::new(vec![Axis::symmetric(6.0, 512)]).unwrap();
        assert_eq!(g.axes[0].coordinate(256), 0.0);
        assert!((g.cell_volume() - 12.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_moments() {
        let s = gaussian_state(&vacuum_grid(), 0.25, 0.0, 0.5).unwrap();
        assert!((s.norm_squared() - 1.0).abs() < tolerances::GRID_NORM);
        let x = GridOperator::position(1, 0);
        let y = GridOperator::conjugate(1, 0, 0.5);
        let scheme = DerivativeScheme::Spectral;
        assert!((expectation(&s, &x.compose_position(0), scheme).re - 0.25).abs() < 1e-10);
        assert!(expectation(&s, &x, scheme).norm() < 1e-14);
        let k = moment_matrix(&s, &[x, y], scheme);
        assert!((k[(1, 1)] - 0.25).abs() < 1e-10);
        assert!(k[(0, 1)].abs() < 1e-12);
        assert!((expectation(&s, &GridOperator::identity(1), scheme).re - 1.0).abs() < tolerances::GRID_NORM);
    }

    #[test]
    fn squeezed_and_correlated_moments() {
        let grid = Grid::default_for(0.5f64.sqrt(), 1).unwrap();
        for (sxx, sxy) in [(0.5, 0.0), (0.5, 0.3), (0.3, -0.2)] {
            let s = gaussian_state(&grid, sxx, sxy, 0.5).unwrap();
            let k = moment_matrix(
                &s,
                &[GridOperator::position(1, 0), GridOperator::conjugate(1, 0, 0.5)],
                DerivativeScheme::Spectral,
            );
            assert!((k[(0, 0)] - sxx).abs() < 1e-8);
            assert!((k[(0, 1)] - sxy).abs() < 1e-8);
            assert!((k[(1, 1)] - pure_sigma_yy(sxx, sxy, 0.5)).abs() < 1e-8);
        }
        // purity constraint for the squeezed example
        assert_eq!(pure_sigma_yy(0.5, 0.0, 0.5), 0.125);
    }

    #[test]
    fn displaced_state_moments() {
        let grid = Grid::new(vec![Axis::symmetric(8.0, 512)]).unwrap();
        let s = gaussian_state_displaced(&grid, 0.25, 0.1, [0.4, -0.3], 0.5).unwrap();
        let scheme = DerivativeScheme::Spectral;
        assert!((expectation(&s, &GridOperator::position(1, 0), scheme).re - 0.4).abs() < 1e-10);
        assert!((expectation(&s, &GridOperator::conjugate(1, 0, 0.5), scheme).re + 0.3).abs() < 1e-10);
        // raw second moments include the mean products
        let k = moment_matrix(&s, &[GridOperator::position(1, 0), GridOperator::conjugate(1, 0, 0.5)], scheme);
        assert!((k[(0, 0)] - (0.25 + 0.16)).abs() < 1e-9);
        assert!((k[(0, 1)] - (0.1 - 0.12)).abs() < 1e-9);
    }

    #[test]
    fn published_probe_is_unreachable() {
        let sigma = RealMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.5, 0.25]);
        let err = gaussian_state_for_covariance(&vacuum_grid(), &sigma, 0.5).unwrap_err();
        assert!(matches!(err, Error::UnphysicalCovariance(_)), "{err}");
        let vac = RealMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.25]);
        assert!(gaussian_state_for_covariance(&vacuum_grid(), &vac, 0.5).is_ok());
        let mixed = RealMatrix::identity(2, 2);
        assert!(gaussian_state_for_covariance(&vacuum_grid(), &mixed, 0.5).is_err());
    }

    #[test]
    fn too_narrow_domain_rejected() {
        let grid = Grid::new(vec![Axis::symmetric(1.0, 128)]).unwrap();
        assert!(matches!(gaussian_state(&grid, 0.25, 0.0, 0.5), Err(Error::UnrepresentableOnGrid(_))));
    }

    #[test]
    fn commutator_on_grid() {
        for scheme in [DerivativeScheme::Spectral, DerivativeScheme::CentralFd4] {
            let s = gaussian_state(&vacuum_grid(), 0.25, 0.1, 0.5).unwrap();
            let c = grid_commutator(&s, 0, scheme);
            assert!((c - C64::new(0.0, 0.5)).norm() < tolerances::GRID_COMMUTATOR, "{scheme:?}: {c}");
        }
    }

    #[test]
    fn two_dimensional_derivatives() {
        let a = gaussian_state(&Grid::new(vec![Axis::symmetric(6.0, 128)]).unwrap(), 0.25, 0.0, 0.5).unwrap();
        let b = gaussian_state(&Grid::new(vec![Axis::symmetric(9.0, 128)]).unwrap(), 0.5, 0.2, 0.5).unwrap();
        let s = GridState::product(&a, &b).unwrap();
        let ops =
            [GridOperator::conjugate(2, 0, 0.5), GridOperator::conjugate(2, 1, 0.5), GridOperator::position(2, 1)];
        let k = moment_matrix(&s, &ops, DerivativeScheme::Spectral);
        assert!((k[(0, 0)] - 0.25).abs() < 1e-8);
        assert!((k[(1, 1)] - pure_sigma_yy(0.5, 0.2, 0.5)).abs() < 1e-8);
        assert!((k[(1, 2)] - 0.2).abs() < 1e-8);
        assert!(k[(0, 1)].abs() < 1e-10);
        assert!((s.spread(1) - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn fd4_cross_check_agrees() {
        let s = gaussian_state(&vacuum_grid(), 0.25, 0.0, 0.5).unwrap();
        let y = [GridOperator::conjugate(1, 0, 0.5)];
        let spectral = moment_matrix(&s, &y, DerivativeScheme::Spectral)[(0, 0)];
        let fd = moment_matrix(&s, &y, DerivativeScheme::CentralFd4)[(0, 0)];
        assert!((spectral - fd).abs() < 1e-5);
    }

    #[test]
    fn uncovered_coordinates_rejected() {
        let space = JointPhaseSpace::quadrature_pair();
        let map = ModeMap::probe_only(&space);
        assert!(ops_from_vectors(&[space.unit(0)], &map, 0.5).is_err());
        assert!(ops_from_vectors(&[space.unit(3)], &map, 0.5).is_ok());
    }
}
