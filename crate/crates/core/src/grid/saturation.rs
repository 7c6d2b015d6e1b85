//! Search for states annihilated by `K_λ = Σ λ_α K_α`.
//!
//! `K_λ` is discretized with fourth-order central differences, so it is
//! pentadiagonal and `K_λ†K_λ` has bandwidth four. The smallest singular value
//! of `K_λ` comes from shifted inverse iteration on `K_λ†K_λ` with a banded
//! Cholesky factorization; the reported residual is `‖K_λ v‖` for the unit
//! vector `v` found, which is an upper bound on the smallest singular value.
//! Two coefficients are searched: after removing the global phase they are
//! `λ = (cos θ, sin θ·e^{iφ})`.
//!
//! Over all states the infimum is zero for every real `λ` as well (the
//! spectrum of a self-adjoint `K_λ` is continuous and contains zero), reached
//! only by states that localize as the grid refines. [`state_annihilation`]
//! instead fixes the state and minimizes `‖K_λ ψ‖` over `λ`, which locates the
//! direction that saturates the matrix relation for that state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Axis, DerivativeScheme, GridOperator, GridState};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, C64};
use crate::measurement::{CoefficientVector, JointPhaseSpace};
use crate::tolerances;

const BAND: usize = 2;
const GRAM_BAND: usize = 2 * BAND;
const MAX_ITERATIONS: usize = 400;

pub const DEFAULT_COARSE_RESOLUTION: usize = 64;
pub const DEFAULT_REAL_RESOLUTION: usize = 256;
pub const DERIVATIVE_SCHEME: &str = "central_fd4";

type Row5 = [C64; 2 * BAND + 1];
type Row9 = [C64; 2 * GRAM_BAND + 1];

const ZERO: C64 = C64::new(0.0, 0.0);

/// Pentadiagonal matrix of a one-dimensional grid operator.
fn banded_operator(op: &GridOperator, axis: &Axis) -> Vec<Row5> {
    assert_eq!(op.dims(), 1, "banded search runs on one axis");
    let n = axis.points;
    let dx = axis.spacing();
    let d = op.derivative[0] / (12.0 * dx);
    let stencil = [d, -d * 8.0, ZERO, d * 8.0, -d];
    (0..n)
        .map(|i| {
            let x = axis.coordinate(i);
            let mut row = stencil;
            row[BAND] = op.constant + op.linear[0] * x + op.quadratic[0] * x * x;
            for (slot, o) in row.iter_mut().zip(-(BAND as isize)..=BAND as isize) {
                let j = i as isize + o;
                if j < 0 || j >= n as isize {
                    *slot = ZERO;
                }
            }
            row
        })
        .collect()
}

fn apply_banded(k: &[Row5], v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(BAND);
            let hi = (i + BAND).min(n - 1);
            (lo..=hi).map(|j| k[i][j + BAND - i] * v[j]).sum()
        })
        .collect()
}

/// `K†K`, stored by row with offsets `−4..=4`.
fn gram(k: &[Row5]) -> Vec<Row9> {
    let n = k.len();
    let mut a = vec![[ZERO; 2 * GRAM_BAND + 1]; n];
    for (i, row) in k.iter().enumerate() {
        for (o1, c1) in row.iter().enumerate() {
            let Some(j) = (i + o1).checked_sub(BAND).filter(|&j| j < n) else { continue };
            for (o2, c2) in row.iter().enumerate() {
                let Some(l) = (i + o2).checked_sub(BAND).filter(|&l| l < n) else { continue };
                a[j][l + GRAM_BAND - j] += c1.conj() * c2;
            }
        }
    }
    a
}

/// Lower factor of a banded Hermitian positive definite matrix, rows stored
/// with offsets `−4..=0`.
fn banded_cholesky(a: &[Row9], shift: f64) -> Option<Vec<[C64; GRAM_BAND + 1]>> {
    let n = a.len();
    let mut l = vec![[ZERO; GRAM_BAND + 1]; n];
    for i in 0..n {
        let lo = i.saturating_sub(GRAM_BAND);
        for j in lo..=i {
            let mut s = a[i][j + GRAM_BAND - i];
            if i == j {
                s += shift;
            }
            for k in lo..j {
                s -= l[i][k + GRAM_BAND - i] * l[j][k + GRAM_BAND - j].conj();
            }
            if i == j {
                if s.re.is_nan() || s.re <= 0.0 {
                    return None;
                }
                l[i][GRAM_BAND] = C64::new(s.re.sqrt(), 0.0);
            } else {
                l[i][j + GRAM_BAND - i] = s / l[j][GRAM_BAND];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[[C64; GRAM_BAND + 1]], b: &[C64]) -> Vec<C64> {
    let n = b.len();
    let mut y = vec![ZERO; n];
    for i in 0..n {
        let lo = i.saturating_sub(GRAM_BAND);
        let s: C64 = (lo..i).map(|k| l[i][k + GRAM_BAND - i] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][GRAM_BAND];
    }
    let mut x = vec![ZERO; n];
    for i in (0..n).rev() {
        let hi = (i + GRAM_BAND).min(n - 1);
        let s: C64 = (i + 1..=hi).map(|k| l[k][i + GRAM_BAND - k].conj() * x[k]).sum();
        x[i] = (y[i] - s) / l[i][GRAM_BAND];
    }
    x
}

fn normalize(v: &mut [C64]) -> f64 {
    let norm = v.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    norm
}

fn seed_vector(axis: &Axis) -> Vec<C64> {
    let width = (axis.x_max - axis.x_min) / 8.0;
    (0..axis.points)
        .map(|i| {
            let x = axis.coordinate(i);
            let envelope = (-(x * x) / (2.0 * width * width)).exp();
            C64::new(1.0 + 0.25 * (0.37 * i as f64).sin(), 0.25 * (0.61 * i as f64).cos()) * envelope
        })
        .collect()
}

/// Smallest residual `‖K v‖` over unit vectors `v`, with its minimizer.
#[derive(Debug, Clone)]
pub struct Residual {
    pub value: f64,
    pub vector: Vec<C64>,
}

pub fn smallest_singular(op: &GridOperator, axis: &Axis) -> Residual {
    let k = banded_operator(op, axis);
    let a = gram(&k);
    let scale = a.iter().map(|r| r[GRAM_BAND].re).fold(0.0_f64, f64::max).max(1.0);
    let mut shift = 1e-13 * scale;
    let l = loop {
        if let Some(l) = banded_cholesky(&a, shift) {
            break l;
        }
        shift *= 100.0;
    };
    let mut v = seed_vector(axis);
    normalize(&mut v);
    let mut value = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut w = cholesky_solve(&l, &v);
        normalize(&mut w);
        v = w;
        let r = apply_banded(&k, &v).iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        let done = (value - r).abs() <= 1e-14 + 1e-10 * r;
        value = r;
        if done {
            break;
        }
    }
    Residual { value, vector: v }
}

/// Position spread of a grid vector treated as a wavefunction.
pub fn vector_spread(v: &[C64], axis: &Axis) -> f64 {
    let total: f64 = v.iter().map(C64::norm_sqr).sum();
    let (m1, m2) = v.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, z)| {
        let x = axis.coordinate(i);
        let p = z.norm_sqr() / total;
        (a + p * x, b + p * x * x)
    });
    (m2 - m1 * m1).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    /// `λ = (cos θ, sin θ·e^{iφ})`, θ ∈ [0, π/2], φ ∈ [0, 2π).
    Complex,
    /// `λ = (cos θ, sin θ)`, θ ∈ [0, π).
    Real,
}

impl Slice {
    pub fn lambda(self, theta: f64, phi: f64) -> [C64; 2] {
        match self {
            Slice::Complex => [C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)],
            Slice::Real => [C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub theta: f64,
    pub phi: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub points: usize,
    pub spacing: f64,
    pub residual: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub axis: Axis,
    pub coarse_resolution: usize,
    pub real_resolution: usize,
}

impl SearchConfig {
    pub fn new(axis: Axis) -> Self {
        Self { axis, coarse_resolution: DEFAULT_COARSE_RESOLUTION, real_resolution: DEFAULT_REAL_RESOLUTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub slice: Slice,
    pub residual: f64,
    pub theta: f64,
    pub phi: f64,
    pub lambda: [C64; 2],
    pub spread: f64,
    /// Residual at the minimizing `λ` on grids with half, the same, and twice
    /// the number of points over the same domain.
    pub refinement: Vec<RefinementPoint>,
    #[serde(skip)]
    pub state: Vec<C64>,
    #[serde(skip)]
    pub landscape: Vec<LandscapePoint>,
}

fn check_ops(ops: &[GridOperator]) -> Result<()> {
    if ops.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ops.len() });
    }
    if ops.iter().any(|o| o.dims() != 1) {
        return Err(Error::InvalidGrid("annihilation search needs one-dimensional operators".into()));
    }
    Ok(())
}

fn residual_at(ops: &[GridOperator], lambda: &[C64; 2], axis: &Axis) -> Residual {
    smallest_singular(&GridOperator::combination(ops, lambda), axis)
}

/// Minimizes the annihilation residual over `λ` on the chosen slice: a
/// parallel scan followed by a compass search from the best scan point. The
/// minimum is then recomputed with half the points; a relative change above
/// the refinement tolerance is `GridTooCoarse` unless both values are below
/// the near-zero floor.
pub fn min_annihilation_residual(ops: &[GridOperator], slice: Slice, config: &SearchConfig) -> Result<SearchResult> {
    check_ops(ops)?;
    let axis = &config.axis;
    let (thetas, phis): (Vec<f64>, Vec<f64>) = match slice {
        Slice::Complex => {
            let r = config.coarse_resolution.max(2);
            let half_pi = std::f64::consts::FRAC_PI_2;
            (
                (0..r).map(|i| half_pi * i as f64 / (r - 1) as f64).collect(),
                (0..r).map(|j| std::f64::consts::TAU * j as f64 / r as f64).collect(),
            )
        }
        Slice::Real => {
            let r = config.real_resolution.max(2);
            ((0..r).map(|i| std::f64::consts::PI * i as f64 / r as f64).collect(), vec![0.0])
        }
    };
    let pairs: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| phis.iter().map(move |&p| (t, p))).collect();
    let landscape: Vec<LandscapePoint> = pairs
        .par_iter()
        .map(|&(theta, phi)| LandscapePoint {
            theta,
            phi,
            residual: residual_at(ops, &slice.lambda(theta, phi), axis).value,
        })
        .collect();
    let best = landscape.iter().min_by(|a, b| a.residual.total_cmp(&b.residual)).copied().expect("non-empty scan");

    let (mut theta, mut phi, mut value) = (best.theta, best.phi, best.residual);
    let mut step_theta = thetas.get(1).map_or(0.1, |t| t - thetas[0]);
    let mut step_phi = if slice == Slice::Complex { phis[1] - phis[0] } else { 0.0 };
    while step_theta > 1e-9 {
        let mut moves = vec![(step_theta, 0.0), (-step_theta, 0.0)];
        if slice == Slice::Complex {
            moves.extend([(0.0, step_phi), (0.0, -step_phi)]);
        }
        let trial = moves
            .par_iter()
            .map(|&(dt, dp)| {
                let (t, p) = (theta + dt, phi + dp);
                (t, p, residual_at(ops, &slice.lambda(t, p), axis).value)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("non-empty moves");
        if trial.2 < value {
            (theta, phi, value) = trial;
        } else {
            step_theta /= 2.0;
            step_phi /= 2.0;
        }
    }
    let lambda = slice.lambda(theta, phi);
    let found = residual_at(ops, &lambda, axis);

    let refinement: Vec<RefinementPoint> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&f| {
            let a = axis.refined(f);
            let r = residual_at(ops, &lambda, &a);
            RefinementPoint {
                points: a.points,
                spacing: a.spacing(),
                residual: r.value,
                spread: vector_spread(&r.vector, &a),
            }
        })
        .collect();
    let (coarse, fine) = (refinement[0].residual, refinement[1].residual);
    if !converged(coarse, fine) {
        return Err(Error::GridTooCoarse { coarse, fine });
    }
    Ok(SearchResult {
        slice,
        residual: found.value,
        theta,
        phi,
        lambda,
        spread: vector_spread(&found.vector, axis),
        refinement,
        state: found.vector,
        landscape,
    })
}

/// Minimum of `‖K_λ ψ‖` over unit `λ` for a fixed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAnnihilation {
    pub slice: Slice,
    pub residual: f64,
    pub lambda: [C64; 2],
    /// `⟨K_α ψ|K_β ψ⟩` evaluated on the grid.
    pub gram: Vec<Vec<C64>>,
}

/// `‖K_λ ψ‖² = λ†Mλ` with `M_{αβ} = ⟨K_α ψ|K_β ψ⟩`, so the minimum over unit
/// complex `λ` is the smallest eigenvalue of `M`, and over unit real `λ` the
/// smallest eigenvalue of `Re M`.
pub fn state_annihilation(ops: &[GridOperator], state: &GridState, slice: Slice) -> Result<StateAnnihilation> {
    if ops.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ops.len() });
    }
    let applied: Vec<Vec<C64>> = ops.iter().map(|o| o.apply(state, DerivativeScheme::Spectral)).collect();
    let dv = state.grid.cell_volume();
    let gram: Vec<Vec<C64>> = applied
        .iter()
        .map(|u| applied.iter().map(|v| u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>() * dv).collect())
        .collect();
    let rows: Vec<Vec<C64>> = match slice {
        Slice::Complex => {
            // symmetrize away rounding so the Hermitian check passes
            let off = (gram[0][1] + gram[1][0].conj()) / 2.0;
            vec![vec![C64::new(gram[0][0].re, 0.0), off], vec![off.conj(), C64::new(gram[1][1].re, 0.0)]]
        }
        Slice::Real => {
            let off = C64::new((gram[0][1].re + gram[1][0].re) / 2.0, 0.0);
            vec![vec![C64::new(gram[0][0].re, 0.0), off], vec![off, C64::new(gram[1][1].re, 0.0)]]
        }
    };
    let eig = hermitian_eigen(&ComplexMatrix::from_rows(&rows)?)?;
    let (a, b) = (eig.vectors[(0, 0)], eig.vectors[(1, 0)]);
    let phase = if a.norm() > 1e-12 { a.conj() / a.norm() } else { b.conj() / b.norm() };
    Ok(StateAnnihilation { slice, residual: eig.values[0].max(0.0).sqrt(), lambda: [a * phase, b * phase], gram })
}

pub fn converged(coarse: f64, fine: f64) -> bool {
    let scale = coarse.abs().max(fine.abs());
    scale <= tolerances::NEAR_ZERO_RESIDUAL || (coarse - fine).abs() <= tolerances::REFINEMENT_RELATIVE * scale
}

/// Restricts coefficient vectors on one object and one probe mode to the
/// collective mode `u = (x_a + x_b)/√2`, `p_u = (p_a + p_b)/√2`. Fails if a
/// vector has a component along the relative mode.
pub fn collective_ops(vectors: &[CoefficientVector], space: &JointPhaseSpace, gamma: f64) -> Result<Vec<GridOperator>> {
    let (xa, pa, xb, pb) = (space.obj_x(0), space.obj_p(0), space.probe_x(0), space.probe_p(0));
    let s = std::f64::consts::SQRT_2;
    vectors
        .iter()
        .map(|v| {
            let c = &v.coeffs;
            if (c[xa] - c[xb]).abs() > tolerances::EXACT || (c[pa] - c[pb]).abs() > tolerances::EXACT {
                return Err(Error::InvalidGrid("operator has a relative-mode component".into()));
            }
            let mut op =
                GridOperator::from_quadratures(&[C64::new(s * c[xa], 0.0)], &[C64::new(s * c[pa], 0.0)], gamma);
            op.constant = C64::new(v.offset, 0.0);
            Ok(op)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(points: usize) -> Axis {
        Axis::symmetric(6.0, points)
    }

    fn bae_ops(g: f64) -> Vec<GridOperator> {
        let x = GridOperator::position(1, 0).scaled(C64::new(1.0 / g, 0.0));
        let y = GridOperator::conjugate(1, 0, 0.5).scaled(C64::new(-g, 0.0));
        vec![x, y]
    }

    #[test]
    fn cholesky_solves_shifted_system() {
        let a = axis(64);
        let op = GridOperator::conjugate(1, 0, 0.5).plus(&GridOperator::position(1, 0));
        let k = banded_operator(&op, &a);
        let g = gram(&k);
        let l = banded_cholesky(&g, 0.3).unwrap();
        let b: Vec<C64> = (0..64).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let x = cholesky_solve(&l, &b);
        let ax: Vec<C64> = {
            let kx = apply_banded(&k, &x);
            let kh: Vec<C64> = (0..64)
                .map(|j| {
                    (0..64)
                        .filter(|i| (*i as isize - j as isize).abs() <= 2)
                        .map(|i| k[i][j + 2 - i].conj() * kx[i])
                        .sum()
                })
                .collect();
            kh.iter().zip(&x).map(|(a, b)| a + b * 0.3).collect()
        };
        let err = ax.iter().zip(&b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn position_operator_residual_is_min_abs_coordinate() {
        // grid contains x = 0, so the real direction λ = (1, 0) is annihilated by a delta
        let r = smallest_singular(&GridOperator::position(1, 0), &axis(512));
        assert!(r.value < 1e-12);
        let shifted = Axis { x_min: -6.0 + 0.01, x_max: 6.0 + 0.01, points: 512 };
        let r = smallest_singular(&GridOperator::position(1, 0), &shifted);
        assert!((r.value - 0.01).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn vacuum_annihilator_has_small_residual() {
        // X + iY annihilates the vacuum for gamma = 1/2
        let op = GridOperator::position(1, 0).plus(&GridOperator::conjugate(1, 0, 0.5).scaled(C64::new(0.0, 1.0)));
        let r = smallest_singular(&op, &axis(512));
        assert!(r.value < 1e-4, "{}", r.value);
        assert!((vector_spread(&r.vector, &axis(512)) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn bae_operator_minimum_is_zero_on_both_slices() {
        let mut cfg = SearchConfig::new(axis(256));
        cfg.coarse_resolution = 16;
        cfg.real_resolution = 32;
        for slice in [Slice::Complex, Slice::Real] {
            let r = min_annihilation_residual(&bae_ops(2.0), slice, &cfg).unwrap();
            assert!(r.residual < 1e-3, "{slice:?}: {}", r.residual);
        }
    }

    #[test]
    fn real_minimizer_localizes_under_refinement() {
        let mut cfg = SearchConfig::new(axis(256));
        cfg.real_resolution = 32;
        let r = min_annihilation_residual(&bae_ops(1.0), Slice::Real, &cfg).unwrap();
        for p in &r.refinement {
            assert!(p.spread <= p.spacing, "{p:?}");
        }
    }

    #[test]
    fn vacuum_saturating_direction() {
        let g = 2.0;
        let grid = super::super::Grid::default_for(0.5, 1).unwrap();
        let vac = super::super::gaussian_state(&grid, 0.25, 0.0, 0.5).unwrap();
        let c = state_annihilation(&bae_ops(g), &vac, Slice::Complex).unwrap();
        assert!(c.residual < 1e-6, "{}", c.residual);
        // λ ∝ (G, −i/G)
        let ratio = c.lambda[1] / c.lambda[0];
        assert!((ratio - C64::new(0.0, -1.0 / (g * g))).norm() < 1e-6, "{ratio}");
        let r = state_annihilation(&bae_ops(g), &vac, Slice::Real).unwrap();
        // min over real λ of λᵀKλ with K = diag(1/(4G²), G²/4)
        assert!((r.residual - 1.0 / (2.0 * g)).abs() < 1e-8, "{}", r.residual);
        // the operator minimizer at that λ is the vacuum
        let op = smallest_singular(&GridOperator::combination(&bae_ops(g), &c.lambda), &grid.axes[0]);
        assert!(op.value < 1e-3);
        assert!((vector_spread(&op.vector, &grid.axes[0]) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn transducer_collective_mode_is_trivially_annihilated() {
        let space = JointPhaseSpace::quadrature_pair();
        let mut k2 = CoefficientVector::zeros(4);
        k2.coeffs[1] = -1.0;
        k2.coeffs[3] = -1.0;
        let ops = collective_ops(&[CoefficientVector::zeros(4), k2], &space, 0.5).unwrap();
        let r = residual_at(&ops, &[C64::new(1.0, 0.0), ZERO], &axis(256));
        assert_eq!(r.value, 0.0);
        assert!(collective_ops(&[space.unit(0)], &space, 0.5).is_err());
    }

    #[test]
    fn convergence_rule() {
        assert!(converged(1e-5, 2e-6));
        assert!(converged(1.0, 0.95));
        assert!(!converged(1.0, 0.5));
    }

    #[test]
    fn wrong_operator_count() {
        let cfg = SearchConfig::new(axis(64));
        assert!(matches!(
            min_annihilation_residual(&bae_ops(1.0)[..1], Slice::Real, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
