//! Grid-oracle cross-checks and saturation searches attached to scenario runs.

use serde::{Deserialize, Serialize};

use super::config::{GridSettings, GAMMA};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceState;
use crate::grid::saturation::{
    self, collective_ops, min_annihilation_residual, smallest_singular, state_annihilation, vector_spread,
    SearchConfig, SearchResult, Slice, StateAnnihilation,
};
use crate::grid::{
    gaussian_state_for_moments, grid_commutator, moment_matrix, ops_from_vectors, Axis, DerivativeScheme, Grid,
    GridOperator, GridState, ModeMap, DEFAULT_POINTS_1D, DEFAULT_POINTS_2D,
};
use crate::linalg::{serde_rows, RealMatrix, C64};
use crate::measurement::{CoefficientVector, JointPhaseSpace};
use crate::tolerances;

/// Moments of the noise and disturbance operators evaluated on gridded
/// wavefunctions, next to the bilinear-form values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    pub grid: Grid,
    pub scheme: DerivativeScheme,
    /// Which joint coordinates the grid axes carry, as labels.
    pub axes: Vec<String>,
    #[serde(with = "serde_rows")]
    pub k_grid: RealMatrix,
    #[serde(with = "serde_rows")]
    pub k_analytic: RealMatrix,
    pub max_relative_deviation: f64,
    /// `⟨[X, Y]⟩` per axis.
    pub commutators: Vec<C64>,
    pub identity_expectation: f64,
    /// Points per axis of the coarser grid used for the convergence gate.
    pub coarse_points: usize,
    pub refinement_relative_change: f64,
}

fn relative_deviation(a: &RealMatrix, b: &RealMatrix) -> f64 {
    let scale = b.amax().max(a.amax());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).amax() / scale
    }
}

/// Gridded product state and operators for the noise/disturbance vectors.
/// Vectors supported on the probe mode alone use a one-dimensional probe grid;
/// otherwise object and probe share a two-dimensional grid.
pub struct GriddedProblem {
    pub state: GridState,
    pub ops: Vec<GridOperator>,
    pub labels: Vec<String>,
}

fn grid_state_for(state: &CovarianceState, axis: Axis) -> Result<GridState> {
    let grid = Grid::new(vec![axis])?;
    let mean = [state.mean[0], state.mean[1]];
    gaussian_state_for_moments(&grid, &state.sigma, mean, state.gamma())
}

/// Position spread plus the offset of the mean, which sets the grid extent.
fn position_spread(state: &CovarianceState) -> f64 {
    state.sigma[(0, 0)].max(0.0).sqrt() + state.mean[0].abs()
}

pub fn grid_problem(
    space: &JointPhaseSpace,
    vectors: &[CoefficientVector],
    object: &CovarianceState,
    probe: &CovarianceState,
    settings: &GridSettings,
    refine: f64,
) -> Result<GriddedProblem> {
    let probe_only = vectors.iter().all(|v| (0..space.dim()).all(|i| space.is_probe(i) || v.coeffs[i] == 0.0));
    let axis_for = |s: &CovarianceState, default_points: usize| {
        let points = settings.points.unwrap_or(default_points);
        Axis::symmetric(settings.half_width_sigmas * position_spread(s), points).refined(refine)
    };
    if probe_only {
        let map = ModeMap::probe_only(space);
        let state = grid_state_for(probe, axis_for(probe, DEFAULT_POINTS_1D))?;
        let ops = ops_from_vectors(vectors, &map, space.gamma)?;
        Ok(GriddedProblem { state, ops, labels: vec![space.labels[map.axes[0].0].clone()] })
    } else {
        let map = ModeMap::object_and_probe(space);
        let a = grid_state_for(object, axis_for(object, DEFAULT_POINTS_2D))?;
        let b = grid_state_for(probe, axis_for(probe, DEFAULT_POINTS_2D))?;
        let state = GridState::product(&a, &b)?;
        let ops = ops_from_vectors(vectors, &map, space.gamma)?;
        let labels = map.axes.iter().map(|&(x, _)| space.labels[x].clone()).collect();
        Ok(GriddedProblem { state, ops, labels })
    }
}

pub fn oracle_block(
    space: &JointPhaseSpace,
    vectors: &[CoefficientVector],
    object: &CovarianceState,
    probe: &CovarianceState,
    k_analytic: &RealMatrix,
    settings: &GridSettings,
) -> Result<OracleBlock> {
    let fine = grid_problem(space, vectors, object, probe, settings, 1.0)?;
    let coarse = grid_problem(space, vectors, object, probe, settings, 0.5)?;
    let k_grid = moment_matrix(&fine.state, &fine.ops, settings.scheme);
    let k_coarse = moment_matrix(&coarse.state, &coarse.ops, settings.scheme);
    let dims = fine.state.grid.dims();
    let commutators = (0..dims).map(|a| grid_commutator(&fine.state, a, settings.scheme)).collect();
    let identity_expectation = fine.state.norm_squared();
    Ok(OracleBlock {
        max_relative_deviation: relative_deviation(&k_grid, k_analytic),
        refinement_relative_change: relative_deviation(&k_coarse, &k_grid),
        coarse_points: coarse.state.grid.axes[0].points,
        grid: fine.state.grid.clone(),
        scheme: settings.scheme,
        axes: fine.labels,
        k_grid,
        k_analytic: k_analytic.clone(),
        commutators,
        identity_expectation,
    })
}

/// The `λ` that annihilates the scenario's own state, and the operator
/// residual at that `λ` under grid refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturatingDirection {
    pub lambda: [C64; 2],
    /// `λ₂/λ₁`, or `None` when `λ₁ = 0`.
    pub ratio: Option<C64>,
    pub state_residual: f64,
    pub operator_residual: f64,
    pub minimizer_spread: f64,
    pub refinement: Vec<DirectionRefinement>,
    /// The state residual shrinks with the spacing, or sits at round-off.
    pub decreasing_under_refinement: bool,
}

/// Residuals at the saturating `λ` on one grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionRefinement {
    pub points: usize,
    pub spacing: f64,
    /// Smallest singular value of the discretized `K_λ`.
    pub operator_residual: f64,
    pub minimizer_spread: f64,
    /// `‖K_λ ψ‖` for the gridded scenario state, with the derivative taken by
    /// fourth-order differences so the discretization error is visible.
    pub state_residual: f64,
}

/// Residuals below this are round-off rather than discretization error.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub scenario: String,
    /// The published claim, as a short tag.
    pub claim: String,
    pub derivative_scheme: String,
    pub axis: Axis,
    /// Minimum over all grid states and all unit complex `λ`.
    pub operator_complex: SearchResult,
    /// Minimum over all grid states and real `λ`.
    pub operator_real: SearchResult,
    /// Fraction of complex scan points with residual below the near-zero floor.
    pub near_zero_fraction: f64,
    /// Minimum over `λ` for the scenario's own state, absent when that state
    /// has no wavefunction.
    pub state_complex: Option<StateAnnihilation>,
    pub state_real: Option<StateAnnihilation>,
    pub saturating_direction: Option<SaturatingDirection>,
    /// Why the state-anchored part was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_unavailable: Option<String>,
}

/// One-dimensional operators for the annihilation search: the probe grid when
/// the vectors live on the probe, otherwise the collective object+probe mode.
fn search_ops(space: &JointPhaseSpace, vectors: &[CoefficientVector]) -> Result<Vec<GridOperator>> {
    let probe_only = vectors.iter().all(|v| (0..space.dim()).all(|i| space.is_probe(i) || v.coeffs[i] == 0.0));
    if probe_only {
        ops_from_vectors(vectors, &ModeMap::probe_only(space), space.gamma)
    } else {
        collective_ops(vectors, space, space.gamma)
    }
}

pub fn saturation_report(
    scenario: &str,
    claim: &str,
    space: &JointPhaseSpace,
    vectors: &[CoefficientVector],
    object: &CovarianceState,
    probe: &CovarianceState,
    settings: &GridSettings,
) -> Result<SaturationReport> {
    if vectors.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: vectors.len() });
    }
    let ops = search_ops(space, vectors)?;
    let vacuum_width = (GAMMA / 2.0).sqrt();
    let axis = Axis::symmetric(settings.half_width_sigmas * vacuum_width, settings.points.unwrap_or(DEFAULT_POINTS_1D));
    let config =
        SearchConfig { axis, coarse_resolution: settings.coarse_resolution, real_resolution: settings.real_resolution };
    let operator_complex = min_annihilation_residual(&ops, Slice::Complex, &config)?;
    let operator_real = min_annihilation_residual(&ops, Slice::Real, &config)?;
    let near = operator_complex.landscape.iter().filter(|p| p.residual < tolerances::NEAR_ZERO_RESIDUAL).count();
    let near_zero_fraction = near as f64 / operator_complex.landscape.len().max(1) as f64;

    let (state_complex, state_real, saturating_direction, state_unavailable) =
        match grid_problem(space, vectors, object, probe, settings, 1.0) {
            Ok(problem) => {
                let complex = state_annihilation(&problem.ops, &problem.state, Slice::Complex)?;
                let real = state_annihilation(&problem.ops, &problem.state, Slice::Real)?;
                let direction = saturating_direction(space, vectors, object, probe, settings, &ops, &axis, &complex)?;
                (Some(complex), Some(real), Some(direction), None)
            }
            Err(e) => (None, None, None, Some(e.to_string())),
        };
    Ok(SaturationReport {
        scenario: scenario.into(),
        claim: claim.into(),
        derivative_scheme: saturation::DERIVATIVE_SCHEME.into(),
        axis,
        operator_complex,
        operator_real,
        near_zero_fraction,
        state_complex,
        state_real,
        saturating_direction,
        state_unavailable,
    })
}

#[allow(clippy::too_many_arguments)]
fn saturating_direction(
    space: &JointPhaseSpace,
    vectors: &[CoefficientVector],
    object: &CovarianceState,
    probe: &CovarianceState,
    settings: &GridSettings,
    ops: &[GridOperator],
    axis: &Axis,
    best: &StateAnnihilation,
) -> Result<SaturatingDirection> {
    let lambda = best.lambda;
    let ratio = (lambda[0].norm() > 1e-12).then(|| lambda[1] / lambda[0]);
    let combined = GridOperator::combination(ops, &lambda);
    let at = smallest_singular(&combined, axis);
    let refinement = [0.5, 1.0, 2.0]
        .iter()
        .map(|&f| {
            let a = axis.refined(f);
            let r = smallest_singular(&combined, &a);
            let p = grid_problem(space, vectors, object, probe, settings, f)?;
            let applied = GridOperator::combination(&p.ops, &lambda).apply(&p.state, DerivativeScheme::CentralFd4);
            let state_residual = (applied.iter().map(C64::norm_sqr).sum::<f64>() * p.state.grid.cell_volume()).sqrt();
            Ok(DirectionRefinement {
                points: a.points,
                spacing: a.spacing(),
                operator_residual: r.value,
                minimizer_spread: vector_spread(&r.vector, &a),
                state_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = refinement
        .windows(2)
        .all(|w| w[1].state_residual < w[0].state_residual || w[1].state_residual <= ROUNDOFF_FLOOR);
    Ok(SaturatingDirection {
        lambda,
        ratio,
        state_residual: best.residual,
        operator_residual: at.value,
        minimizer_spread: vector_spread(&at.vector, axis),
        refinement,
        decreasing_under_refinement: decreasing,
    })
}

/// Residual landscape as CSV: `slice, theta, phi, lambda1_re, lambda1_im,
/// lambda2_re, lambda2_im, residual`.
pub fn landscape_csv(result: &SearchResult) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["slice", "theta", "phi", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "residual"])?;
    for p in &result.landscape {
        let l = result.slice.lambda(p.theta, p.phi);
        w.serialize((result.slice, p.theta, p.phi, l[0].re, l[0].im, l[1].re, l[1].im, p.residual))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// Minimizing state as a JSON array of `[x, re, im]` triples.
pub fn state_json(result: &SearchResult, axis: &Axis) -> String {
    let rows: Vec<[f64; 3]> = result.state.iter().enumerate().map(|(i, z)| [axis.coordinate(i), z.re, z.im]).collect();
    serde_json::to_string(&rows).expect("numbers serialize")
}
