use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ScenarioConfig, StateSpec, GAMMA};
use super::oracle::{oracle_block, saturation_report};
use super::report::{Check, RunReport, Source};
use crate::error::Result;
use crate::gaussian::{robertson_check, rsup_check, CovarianceState};
use crate::grid::gaussian_state_for_covariance;
use crate::grid::Grid;
use crate::linalg::RealMatrix;
use crate::measurement::models::{backaction_evading_amplifier, noiseless_transducer};
use crate::measurement::{
    assess, noise_disturbance_vectors, rotate_nd, JointPhaseSpace, JointState, LinearInteraction, NdAssessment,
    Provenance,
};
use crate::tolerances;

fn stage<T>(report: &mut RunReport, name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.timing.stages_ms.insert(name.into(), start.elapsed().as_secs_f64() * 1e3);
    out
}

struct Prepared {
    ix: LinearInteraction,
    object: CovarianceState,
    probe: CovarianceState,
    assessment: NdAssessment,
}

fn prepare(config: &ScenarioConfig, ix: LinearInteraction, scenario: &str, gain: Option<f64>) -> Result<Prepared> {
    config.validate()?;
    let object = config.object_state.resolve()?;
    let probe = config.probe.resolve()?;
    let joint = JointState::product(&ix.space, &object, &probe)?;
    let assessment = assess(&ix, &joint, config.tolerances.psd)?.with_provenance(Provenance {
        scenario: scenario.into(),
        gain,
        probe: Some(config.probe.to_string()),
    });
    Ok(Prepared { ix, object, probe, assessment })
}

/// Flags the probe covariance when it violates the uncertainty relation.
fn probe_physicality(report: &mut RunReport, probe: &CovarianceState, spec: &StateSpec) -> Result<()> {
    let rsup = rsup_check(probe, tolerances::PSD)?;
    if rsup.psd {
        return Ok(());
    }
    let det = probe.sigma.determinant();
    let robertson = robertson_check(probe);
    let grid = Grid::default_for(probe.sigma[(0, 0)].sqrt(), 1)?;
    let grid_error = gaussian_state_for_covariance(&grid, &probe.sigma, probe.gamma()).err().map(|e| e.to_string());
    report.finding(
        "probe_unphysical",
        format!(
            "probe covariance '{spec}' is not a quantum state: det = {det:.6} (need >= {:.6}), \
             min eigenvalue of Sigma + (i gamma/2) J = {:.6}",
            probe.gamma() * probe.gamma() / 4.0,
            rsup.min_eigenvalue
        ),
        json!({
            "determinant": det,
            "required_determinant": probe.gamma() * probe.gamma() / 4.0,
            "rsup_min_eigenvalue": rsup.min_eigenvalue,
            "robertson": robertson,
            "grid_construction": grid_error,
        }),
    );
    Ok(())
}

fn attach_grid(report: &mut RunReport, prepared: &Prepared, claim: &str) -> Result<()> {
    let Some(settings) = report.config.grid.clone() else { return Ok(()) };
    let vectors = noise_disturbance_vectors(&prepared.ix);
    let tol = report.config.tolerances;
    let scenario = report.config.scenario.to_string();
    let block = stage(report, "oracle", || {
        oracle_block(&prepared.ix.space, &vectors, &prepared.object, &prepared.probe, &prepared.assessment.k, &settings)
    });
    match block {
        Ok(b) => {
            report.check(Check::equal(
                "oracle.k_matrix",
                Source::Oracle,
                "grid moments of the noise/disturbance operators vs bilinear form (max relative deviation)",
                0.0,
                b.max_relative_deviation,
                tol.oracle_relative,
            ));
            for (axis, c) in b.commutators.iter().enumerate() {
                report.check(Check::equal(
                    &format!("oracle.commutator.{}", b.axes.get(axis).map_or("axis", String::as_str)),
                    Source::Oracle,
                    "Im <[X, Y]> on the grid equals gamma",
                    GAMMA,
                    c.im,
                    tol.commutator,
                ));
            }
            report.check(Check::equal(
                "oracle.identity",
                Source::Oracle,
                "<psi|psi> after normalization",
                1.0,
                b.identity_expectation,
                tolerances::GRID_NORM,
            ));
            report.check(Check::equal(
                "oracle.grid_convergence",
                Source::Oracle,
                "relative change of the grid moments between half and full resolution",
                0.0,
                b.refinement_relative_change,
                tol.oracle_relative,
            ));
            report.oracle = Some(b);
        }
        Err(e) => {
            report.finding("oracle_unavailable", format!("grid oracle skipped: {e}"), json!({ "error": e.to_string() }))
        }
    }
    if settings.saturation {
        let sat = stage(report, "saturation", || {
            saturation_report(
                &scenario,
                claim,
                &prepared.ix.space,
                &vectors,
                &prepared.object,
                &prepared.probe,
                &settings,
            )
        });
        match sat {
            Ok(s) => report.saturation = Some(s),
            Err(e) => report.finding(
                "saturation_unavailable",
                format!("saturation search skipped: {e}"),
                json!({ "error": e.to_string() }),
            ),
        }
    }
    Ok(())
}

pub fn run_bae(config: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(config.clone());
    let g = config.gain;
    let prepared =
        stage(&mut report, "assessment", || prepare(config, backaction_evading_amplifier(g)?, "bae", Some(g)))?;
    let a = &prepared.assessment;
    let exact = config.tolerances.exact;
    let psd = config.tolerances.psd;
    let (k, verdict, scalar) = (&a.k, &a.verdicts.matrix_oup, a.verdicts.scalar_oup[0]);

    match config.probe {
        StateSpec::Published => {
            let describe = "K for the published probe covariance";
            report.check(Check::equal("bae.k11", Source::Published, describe, 1.0 / (4.0 * g * g), k[(0, 0)], exact));
            report.check(Check::equal("bae.k12", Source::Published, describe, -0.5, k[(0, 1)], exact));
            report.check(Check::equal("bae.k22", Source::Published, describe, g * g / 4.0, k[(1, 1)], exact));
            report.check(Check::equal(
                "bae.uncertainty_determinant",
                Source::Published,
                "det(K + (i/4) J)",
                -0.25,
                verdict.determinant,
                exact,
            ));
            report.check(Check::equal(
                "bae.eps_eta",
                Source::Published,
                "eps * eta equals the commutator bound",
                0.25,
                scalar.heisenberg_product,
                exact,
            ));
            report.check(Check::below(
                "bae.matrix_relation_violated",
                Source::Published,
                "min eigenvalue of K + (i/2)(Gamma + G) is negative",
                0.0,
                verdict.min_eigenvalue,
            ));
            let closed_form = {
                let (p, q, r) = (k[(0, 0)], k[(1, 1)], k[(0, 1)]);
                let off = (r * r + 1.0 / 16.0).sqrt();
                (p + q) / 2.0 - (((p - q) / 2.0).powi(2) + off * off).sqrt()
            };
            report.check(Check::equal(
                "bae.min_eigenvalue_closed_form",
                Source::Analytic,
                "eigensolver min eigenvalue vs closed-form 2x2 formula",
                closed_form,
                verdict.min_eigenvalue,
                tolerances::EIGEN_RECONSTRUCTION,
            ));
        }
        StateSpec::Vacuum => {
            let describe = "K for a vacuum probe";
            report.check(Check::equal("bae.k11", Source::Analytic, describe, 1.0 / (4.0 * g * g), k[(0, 0)], exact));
            report.check(Check::equal("bae.k12", Source::Analytic, describe, 0.0, k[(0, 1)], exact));
            report.check(Check::equal("bae.k22", Source::Analytic, describe, g * g / 4.0, k[(1, 1)], exact));
            report.check(Check::equal(
                "bae.min_eigenvalue",
                Source::Analytic,
                "vacuum probe saturates the matrix relation",
                0.0,
                verdict.min_eigenvalue,
                psd,
            ));
            report.check(Check::equal(
                "bae.eps_eta",
                Source::Analytic,
                "eps * eta",
                0.25,
                scalar.heisenberg_product,
                exact,
            ));
        }
        _ => {}
    }
    report.check(Check::equal(
        "bae.gamma_zero",
        Source::Analytic,
        "independent intervention: max |Gamma|",
        0.0,
        a.gamma.amax(),
        exact,
    ));
    report.finding(
        "saturation_forms",
        format!(
            "product form eps*eta = {:.6} vs bound {:.6} (saturated: {}); three-term form lhs = {:.6} (holds: {})",
            scalar.heisenberg_product, scalar.rhs, scalar.heisenberg_saturated, scalar.lhs, scalar.holds
        ),
        json!({ "product": scalar.heisenberg_product, "three_term_lhs": scalar.lhs, "rhs": scalar.rhs }),
    );
    if scalar.heisenberg_saturated && !verdict.holds {
        report.finding(
            "strength_separation",
            format!(
                "scalar product relation saturated while the matrix relation fails (min eigenvalue {:.6})",
                verdict.min_eigenvalue
            ),
            json!({ "min_eigenvalue": verdict.min_eigenvalue, "determinant": verdict.determinant }),
        );
    }
    probe_physicality(&mut report, &prepared.probe, &config.probe)?;
    attach_grid(&mut report, &prepared, "no_normalizable_saturating_state")?;
    if let Some(s) = report.saturation.clone() {
        bae_saturation_findings(&mut report, &s);
    }
    report.assessment = Some(prepared.assessment);
    report.timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn bae_saturation_findings(report: &mut RunReport, s: &super::oracle::SaturationReport) {
    match &s.saturating_direction {
        Some(d) => report.finding(
            "complex_lambda_saturation",
            format!(
                "complex lambda = ({:.4}{:+.4}i, {:.4}{:+.4}i) annihilates the probe state: state residual {:.2e}, \
                 operator residual {:.2e} at {} points, gridded-state residual {} (decreasing: {}), \
                 minimizer spread {:.4}",
                d.lambda[0].re,
                d.lambda[0].im,
                d.lambda[1].re,
                d.lambda[1].im,
                d.state_residual,
                d.operator_residual,
                s.axis.points,
                d.refinement.iter().map(|p| format!("{:.2e}", p.state_residual)).collect::<Vec<_>>().join(" -> "),
                d.decreasing_under_refinement,
                d.minimizer_spread
            ),
            json!({
                "lambda": d.lambda,
                "ratio": d.ratio,
                "refinement": d.refinement,
                "near_zero_fraction_of_complex_scan": s.near_zero_fraction,
            }),
        ),
        None => report.finding(
            "complex_lambda_saturation",
            format!(
                "complex scan: smallest operator residual {:.2e}, {:.1}% of scan points below {:.0e}; \
                 no state-anchored direction: {}",
                s.operator_complex.residual,
                100.0 * s.near_zero_fraction,
                tolerances::NEAR_ZERO_RESIDUAL,
                s.state_unavailable.as_deref().unwrap_or("unknown")
            ),
            json!({
                "operator_residual": s.operator_complex.residual,
                "near_zero_fraction_of_complex_scan": s.near_zero_fraction,
                "state_unavailable": s.state_unavailable,
            }),
        ),
    }
    let real = &s.operator_real;
    let state_real = s.state_real.as_ref().map(|r| r.residual);
    report.finding(
        "real_lambda_slice",
        format!(
            "real lambda: smallest operator residual {:.3e} at theta = {:.4}, but its minimizer narrows with the grid \
             (spreads {}); no normalizable minimizer. For the probe state itself the real-lambda minimum is {}",
            real.residual,
            real.theta,
            real.refinement.iter().map(|p| format!("{:.3e}", p.spread)).collect::<Vec<_>>().join(", "),
            state_real.map_or("unavailable".to_string(), |r| format!("{r:.6}"))
        ),
        json!({
            "operator_residual": real.residual,
            "theta": real.theta,
            "refinement": real.refinement,
            "state_residual": state_real,
            "floor": tolerances::REAL_SLICE_FLOOR,
        }),
    );
}

pub fn run_transducer(config: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(config.clone());
    let prepared = stage(&mut report, "assessment", || prepare(config, noiseless_transducer()?, "transducer", None))?;
    let a = &prepared.assessment;
    let exact = config.tolerances.exact;
    let vectors = noise_disturbance_vectors(&prepared.ix);

    report.check(Check::equal(
        "transducer.noise_vector",
        Source::Published,
        "noise operator vanishes identically: max |N coefficient|",
        0.0,
        vectors[0].max_abs().max(vectors[0].offset.abs()),
        0.0,
    ));
    report.check(Check::equal("transducer.eps", Source::Published, "eps = 0 for any state", 0.0, a.epsilon[0], 0.0));
    report.check(Check::equal(
        "transducer.gamma_plus_g",
        Source::Analytic,
        "max |Gamma + G|",
        0.0,
        (&a.gamma + &a.cal_g).amax(),
        exact,
    ));
    report.check(Check::equal(
        "transducer.min_eigenvalue",
        Source::Analytic,
        "matrix relation saturated",
        0.0,
        a.verdicts.matrix_oup.min_eigenvalue,
        config.tolerances.psd,
    ));
    if config.probe == StateSpec::Vacuum && config.object_state == StateSpec::Vacuum {
        let describe = "K for vacuum object and probe";
        report.check(Check::equal("transducer.k11", Source::Analytic, describe, 0.0, a.k[(0, 0)], tolerances::PSD));
        report.check(Check::equal("transducer.k12", Source::Analytic, describe, 0.0, a.k[(0, 1)], tolerances::PSD));
        report.check(Check::equal("transducer.k22", Source::Analytic, describe, 0.5, a.k[(1, 1)], tolerances::PSD));
    }
    // λ = (1, 0) leaves only the noise operator, which is zero
    let k_lambda = vectors[0].max_abs().max(vectors[0].offset.abs());
    report.check(Check::equal(
        "transducer.any_state_saturates",
        Source::Published,
        "max |coefficient| of K_lambda at lambda = (1, 0)",
        0.0,
        k_lambda,
        0.0,
    ));
    probe_physicality(&mut report, &prepared.probe, &config.probe)?;
    attach_grid(&mut report, &prepared, "any_state_saturates_at_lambda2_zero")?;
    if let Some(s) = report.saturation.clone() {
        // the first complex scan point is θ = 0, i.e. λ = (1, 0)
        let origin = s.operator_complex.landscape.first().map_or(f64::NAN, |p| p.residual);
        report.check(Check::equal(
            "transducer.grid_residual_lambda2_zero",
            Source::Published,
            "grid residual of K_lambda at lambda = (1, 0)",
            0.0,
            origin,
            0.0,
        ));
        if let Some(sc) = &s.state_complex {
            report.check(Check::equal(
                "transducer.state_residual",
                Source::Analytic,
                "minimum over lambda of |K_lambda psi| for the scenario state",
                0.0,
                sc.residual,
                tolerances::NEAR_ZERO_RESIDUAL,
            ));
        }
        report.finding(
            "transducer_saturation",
            "lambda = (1, 0) gives K_lambda = 0, so every state saturates; confirmed on the grid".to_string(),
            json!({
                "state_lambda": s.state_complex.as_ref().map(|c| c.lambda),
                "state_residual": s.state_complex.as_ref().map(|c| c.residual),
            }),
        );
    }
    report.assessment = Some(prepared.assessment);
    report.timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// `K` entries before and after the rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationRow {
    pub eps_sq: f64,
    pub eta_sq: f64,
    pub anticommutator: f64,
    pub eps_eta: f64,
    pub matrix_holds: bool,
    pub matrix_saturated: bool,
    pub min_eigenvalue: f64,
    pub determinant: f64,
}

impl RotationRow {
    fn of(a: &NdAssessment) -> Self {
        let v = &a.verdicts.matrix_oup;
        Self {
            eps_sq: a.k[(0, 0)],
            eta_sq: a.k[(1, 1)],
            anticommutator: a.k[(0, 1)],
            eps_eta: a.epsilon[0] * a.eta[0],
            matrix_holds: v.holds,
            matrix_saturated: v.saturated,
            min_eigenvalue: v.min_eigenvalue,
            determinant: v.determinant,
        }
    }
}

/// `ε′² + η′² ≥ √(g² + 4⟨{N′,D′}⟩²)` with `g = Γ₁₂ + 𝒢₁₂`, which follows
/// from the rotated determinant; `printed_rhs` uses `g = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatedScalarRelation {
    pub form: String,
    pub g: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub saturated: bool,
    pub unit_commutator_rhs: f64,
    pub unit_commutator_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationBlock {
    pub angle: f64,
    #[serde(with = "crate::linalg::serde_rows")]
    pub s: RealMatrix,
    pub before: RotationRow,
    pub after: RotationRow,
    pub relation: RotatedScalarRelation,
}

pub fn rotation_matrix(angle: f64) -> RealMatrix {
    let (s, c) = angle.sin_cos();
    RealMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

pub fn rotated_relation(a: &NdAssessment) -> RotatedScalarRelation {
    let g = a.gamma[(0, 1)] + a.cal_g[(0, 1)];
    let c = a.k[(0, 1)];
    let lhs = a.k[(0, 0)] + a.k[(1, 1)];
    let rhs = (g * g + 4.0 * c * c).sqrt();
    let unit = (1.0 + 4.0 * c * c).sqrt();
    let slack = tolerances::SCALAR_RELATION * rhs.max(1.0);
    RotatedScalarRelation {
        form: "eps'^2 + eta'^2 >= sqrt(g^2 + 4 <{N',D'}>^2)".into(),
        g,
        lhs,
        rhs,
        holds: lhs >= rhs - slack,
        saturated: (lhs - rhs).abs() <= slack,
        unit_commutator_rhs: unit,
        unit_commutator_holds: lhs >= unit - slack,
    }
}

pub fn run_rotated_bae(config: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut base_config = config.clone();
    base_config.grid = None;
    let base = run_bae(&base_config)?;
    let mut report = RunReport::new(config.clone());
    let a = base.assessment.clone().expect("bae run carries an assessment");
    let s = rotation_matrix(config.rotation_angle);
    let rotated = stage(&mut report, "rotation", || rotate_nd(&a, &s))?;
    let (before, after) = (RotationRow::of(&a), RotationRow::of(&rotated));
    let relation = rotated_relation(&rotated);
    let exact = config.tolerances.exact;

    let (c2, s2) = (config.rotation_angle.cos().powi(2), config.rotation_angle.sin().powi(2));
    let cs = config.rotation_angle.cos() * config.rotation_angle.sin();
    report.check(Check::equal(
        "rotated.eps_sq",
        Source::Analytic,
        "eps'^2 = cos^2 eps^2 + 2 cs <{N,D}> + sin^2 eta^2",
        c2 * before.eps_sq + 2.0 * cs * before.anticommutator + s2 * before.eta_sq,
        after.eps_sq,
        exact,
    ));
    report.check(Check::equal(
        "rotated.eta_sq",
        Source::Analytic,
        "eta'^2 = sin^2 eps^2 - 2 cs <{N,D}> + cos^2 eta^2",
        s2 * before.eps_sq - 2.0 * cs * before.anticommutator + c2 * before.eta_sq,
        after.eta_sq,
        exact,
    ));
    report.check(Check::equal(
        "rotated.anticommutator",
        Source::Analytic,
        "<{N',D'}> = cs (eta^2 - eps^2) + (c^2 - s^2) <{N,D}>",
        cs * (before.eta_sq - before.eps_sq) + (c2 - s2) * before.anticommutator,
        after.anticommutator,
        exact,
    ));
    report.check(Check::flag(
        "rotated.matrix_verdict_unchanged",
        Source::Published,
        "matrix verdict invariant under the rotation",
        true,
        before.matrix_holds == after.matrix_holds && before.matrix_saturated == after.matrix_saturated,
    ));
    report.check(Check::equal(
        "rotated.determinant_invariant",
        Source::Analytic,
        "det(K' + (i/2)(Gamma' + G')) - det(K + (i/2)(Gamma + G))",
        0.0,
        after.determinant - before.determinant,
        exact,
    ));
    if before.matrix_holds {
        report.check(Check::flag(
            "rotated.scalar_relation",
            Source::Analytic,
            "rotated scalar relation in its verified normalization holds",
            true,
            relation.holds,
        ));
    }
    report.finding(
        "rotated_relation_normalization",
        format!(
            "with [X, Y] = i/2 the rotated relation reads {} with g = {}; lhs = {:.6}, rhs = {:.6} \
             (holds: {}, saturated: {}); with g = 1 the rhs would be {:.6} (holds: {})",
            relation.form,
            relation.g,
            relation.lhs,
            relation.rhs,
            relation.holds,
            relation.saturated,
            relation.unit_commutator_rhs,
            relation.unit_commutator_holds
        ),
        json!(&relation),
    );
    report.finding(
        "rotation_contrast",
        format!(
            "eps*eta {:.6} -> {:.6}; matrix verdict holds {} -> {}, min eigenvalue {:.3e} -> {:.3e}",
            before.eps_eta,
            after.eps_eta,
            before.matrix_holds,
            after.matrix_holds,
            before.min_eigenvalue,
            after.min_eigenvalue
        ),
        json!({ "before": before, "after": after }),
    );
    report.findings.extend(base.findings.iter().filter(|f| f.key == "probe_unphysical").cloned());
    report.rotation = Some(RotationBlock { angle: config.rotation_angle, s, before, after, relation });
    report.assessment = Some(rotated);
    report.timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// One row of a BAE gain sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gain: f64,
    pub eps: f64,
    pub eta: f64,
    pub min_eigenvalue: f64,
    pub det: f64,
}

pub fn gain_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// BAE assessments over a list of gains, evaluated in parallel; zero gains
/// are rejected by the model constructor.
pub fn sweep_bae(config: &ScenarioConfig, gains: &[f64]) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let object = config.object_state.resolve()?;
    let probe = config.probe.resolve()?;
    let space = JointPhaseSpace::quadrature_pair();
    let joint = JointState::product(&space, &object, &probe)?;
    gains
        .par_iter()
        .map(|&g| {
            let a = assess(&backaction_evading_amplifier(g)?, &joint, config.tolerances.psd)?;
            Ok(SweepRow {
                gain: g,
                eps: a.epsilon[0],
                eta: a.eta[0],
                min_eigenvalue: a.verdicts.matrix_oup.min_eigenvalue,
                det: a.verdicts.matrix_oup.determinant,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}
