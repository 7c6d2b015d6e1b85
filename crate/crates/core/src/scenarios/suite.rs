//! Cross-module property suites run from a seed. Trials are independent and
//! evaluated in parallel; each trial draws from its own ChaCha stream, so the
//! results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{GridSettings, TrialCounts, GAMMA};
use super::oracle::oracle_block;
use crate::gaussian::{random_valid_covariance_with, robertson_check, rsup_check, CovarianceDoc, CovarianceState};
use crate::linalg::{to_rows, RealMatrix};
use crate::measurement::models::{backaction_evading_amplifier, random_model};
use crate::measurement::{assess, noise_disturbance_vectors, rotate_nd, JointPhaseSpace, JointState, NdAssessment};
use crate::symplectic::{random_symplectic_with, SymplecticForm};
use crate::tolerances;

const MAX_COUNTEREXAMPLES: usize = 10;

const IMPLICATION_STREAM: u64 = 1;
const SYMPLECTIC_STREAM: u64 = 2;
const RSUP_STREAM: u64 = 3;
const ORACLE_STREAM: u64 = 4;

fn trial_rng(seed: u64, suite: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ suite.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    /// Up to ten failing trials with their full inputs.
    pub counterexamples: Vec<serde_json::Value>,
    pub stats: serde_json::Value,
}

impl PropertyOutcome {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }

    pub fn pass_rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.passed as f64 / self.trials as f64
        }
    }
}

fn collect(name: &str, results: Vec<(bool, serde_json::Value)>, stats: serde_json::Value) -> PropertyOutcome {
    let trials = results.len();
    let passed = results.iter().filter(|(ok, _)| *ok).count();
    let counterexamples = results.into_iter().filter(|(ok, _)| !ok).map(|(_, v)| v).take(MAX_COUNTEREXAMPLES).collect();
    PropertyOutcome { name: name.into(), trials, passed, counterexamples, stats }
}

fn state_json(s: &CovarianceState) -> serde_json::Value {
    serde_json::to_value(CovarianceDoc::from(s)).expect("state serializes")
}

/// Matrix relation ⇒ scalar relation, over random valid linear models.
pub fn implication_suite(seed: u64, trials: usize, tol: f64) -> PropertyOutcome {
    let results: Vec<(bool, bool, bool, serde_json::Value)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, IMPLICATION_STREAM, i);
            let model = match random_model(&mut rng) {
                Ok(m) => m,
                Err(e) => return (false, false, false, json!({ "trial": i, "error": e.to_string() })),
            };
            match assess(&model.interaction, &model.joint, tol) {
                Ok(a) => {
                    let matrix = a.verdicts.matrix_oup.holds;
                    let scalar = a.verdicts.scalar_oup.iter().all(|s| s.holds);
                    let input = json!({
                        "trial": i,
                        "t": to_rows(&model.interaction.t),
                        "meter": model.interaction.probe_observables,
                        "object": state_json(&model.object),
                        "probe": state_json(&model.probe),
                        "verdicts": a.verdicts,
                    });
                    (!matrix || scalar, matrix, scalar, input)
                }
                Err(e) => (false, false, false, json!({ "trial": i, "error": e.to_string() })),
            }
        })
        .collect();
    let matrix_holds = results.iter().filter(|r| r.1).count();
    let scalar_holds = results.iter().filter(|r| r.2).count();
    collect(
        "implication",
        results.into_iter().map(|(ok, _, _, v)| (ok, v)).collect(),
        json!({ "matrix_holds": matrix_holds, "scalar_holds": scalar_holds }),
    )
}

/// Assessment with `Γ = 0` and `𝒢 = (1/2)J`, `K` drawn either from a valid
/// covariance or from one shrunk below the bound.
fn random_independent_assessment<R: Rng>(rng: &mut R, tol: f64) -> crate::error::Result<NdAssessment> {
    let mut k = random_valid_covariance_with(1, GAMMA, rng).sigma;
    if rng.random_bool(0.4) {
        k *= rng.random_range(0.2..0.9);
    }
    let cal_g = SymplecticForm::new(1, GAMMA).matrix();
    NdAssessment::from_parts(k, RealMatrix::zeros(2, 2), cal_g, vec![0.5], vec![0.5], tol)
}

/// Verdict invariance of `K + (i/4)J ⪰ 0` under `K ↦ SKSᵀ`.
pub fn symplectic_suite(seed: u64, trials: usize, tol: f64) -> PropertyOutcome {
    let results: Vec<(bool, f64, bool, serde_json::Value)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, SYMPLECTIC_STREAM, i);
            let outcome = random_independent_assessment(&mut rng, tol).and_then(|a| {
                let s = random_symplectic_with(1, &mut rng);
                rotate_nd(&a, &s).map(|b| (a, s, b))
            });
            match outcome {
                Ok((a, s, b)) => {
                    let same = a.verdicts.matrix_oup.holds == b.verdicts.matrix_oup.holds;
                    let change = b.epsilon[0] * b.eta[0] - a.epsilon[0] * a.eta[0];
                    let input = json!({
                        "trial": i,
                        "k": to_rows(&a.k),
                        "s": to_rows(&s),
                        "before": a.verdicts.matrix_oup,
                        "after": b.verdicts.matrix_oup,
                    });
                    (same, change, a.verdicts.matrix_oup.holds, input)
                }
                Err(e) => (false, 0.0, false, json!({ "trial": i, "error": e.to_string() })),
            }
        })
        .collect();
    let changed = results.iter().filter(|r| r.1.abs() > tolerances::SCALAR_RELATION).count();
    let max_change = results.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let holding = results.iter().filter(|r| r.2).count();
    collect(
        "symplectic_invariance",
        results.into_iter().map(|(ok, _, _, v)| (ok, v)).collect(),
        json!({ "scalar_product_changed": changed, "max_product_change": max_change, "matrix_holds_before": holding }),
    )
}

/// Stored state for which the pairwise product bound holds but the matrix
/// bound does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobertsonFixture {
    pub provenance: String,
    pub state: CovarianceDoc,
    pub expected_robertson: bool,
    pub expected_rsup: bool,
}

pub const ROBERTSON_FIXTURE: &str = include_str!("../../fixtures/robertson_counterexample.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureVerdict {
    pub robertson: bool,
    pub rsup: bool,
    pub rsup_min_eigenvalue: f64,
    pub reproduced: bool,
}

pub fn check_robertson_fixture(text: &str) -> crate::error::Result<FixtureVerdict> {
    let fixture: RobertsonFixture =
        serde_json::from_str(text).map_err(|e| crate::error::Error::Config(format!("fixture: {e}")))?;
    let state = CovarianceState::try_from(fixture.state)?;
    let robertson = robertson_check(&state).iter().all(|v| v.holds);
    let rsup = rsup_check(&state, tolerances::PSD)?;
    Ok(FixtureVerdict {
        robertson,
        rsup: rsup.psd,
        rsup_min_eigenvalue: rsup.min_eigenvalue,
        reproduced: robertson == fixture.expected_robertson && rsup.psd == fixture.expected_rsup,
    })
}

/// Random valid covariances on 1 to 3 modes pass both uncertainty checks.
pub fn rsup_suite(seed: u64, trials: usize) -> PropertyOutcome {
    let results: Vec<(bool, f64, serde_json::Value)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, RSUP_STREAM, i);
            let n = rng.random_range(1..=3);
            let state = random_valid_covariance_with(n, GAMMA, &mut rng);
            match rsup_check(&state, tolerances::PSD) {
                Ok(v) => {
                    let robertson = robertson_check(&state).iter().all(|r| r.holds);
                    let input = json!({ "trial": i, "state": state_json(&state), "rsup": v, "robertson": robertson });
                    (v.psd && robertson, v.min_eigenvalue, input)
                }
                Err(e) => (false, f64::NAN, json!({ "trial": i, "error": e.to_string() })),
            }
        })
        .collect();
    let min_eig = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    collect(
        "rsup",
        results.into_iter().map(|(ok, _, v)| (ok, v)).collect(),
        json!({ "smallest_min_eigenvalue": if trials == 0 { None } else { Some(min_eig) } }),
    )
}

/// Random pure probe with squeezing `|r| ≤ 1/2` at a random angle.
fn random_pure_probe<R: Rng>(rng: &mut R) -> crate::error::Result<CovarianceState> {
    let r: f64 = rng.random_range(-0.5..0.5);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (s, c) = phi.sin_cos();
    let rot = RealMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let d = RealMatrix::from_row_slice(2, 2, &[(-2.0 * r).exp(), 0.0, 0.0, (2.0 * r).exp()]);
    let sigma = &rot * d * rot.transpose() * (GAMMA / 2.0);
    let mean = vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
    CovarianceState::new(mean, (&sigma + sigma.transpose()) * 0.5, SymplecticForm::new(1, GAMMA))
}

/// Grid moments agree with the bilinear form for random amplifier gains and
/// random pure probes.
pub fn oracle_suite(seed: u64, trials: usize, relative: f64, commutator: f64) -> PropertyOutcome {
    let settings = GridSettings { saturation: false, ..GridSettings::default() };
    let space = JointPhaseSpace::quadrature_pair();
    let results: Vec<(bool, f64, serde_json::Value)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, ORACLE_STREAM, i);
            let gain = rng.random_range(0.5..2.0);
            let mut run = || -> crate::error::Result<(bool, f64, serde_json::Value)> {
                let probe = random_pure_probe(&mut rng)?;
                let object = CovarianceState::vacuum(1, GAMMA);
                let ix = backaction_evading_amplifier(gain)?;
                let joint = JointState::product(&space, &object, &probe)?;
                let a = assess(&ix, &joint, tolerances::PSD)?;
                let b = oracle_block(&space, &noise_disturbance_vectors(&ix), &object, &probe, &a.k, &settings)?;
                let comm = b.commutators.iter().map(|c| (c.im - GAMMA).abs() + c.re.abs()).fold(0.0, f64::max);
                let ok = b.max_relative_deviation <= relative && comm <= commutator;
                let input = json!({
                    "trial": i,
                    "gain": gain,
                    "probe": state_json(&probe),
                    "max_relative_deviation": b.max_relative_deviation,
                    "commutator_error": comm,
                });
                Ok((ok, b.max_relative_deviation, input))
            };
            run().unwrap_or_else(|e| (false, f64::NAN, json!({ "trial": i, "error": e.to_string() })))
        })
        .collect();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    collect(
        "oracle_equivalence",
        results.into_iter().map(|(ok, _, v)| (ok, v)).collect(),
        json!({ "max_relative_deviation": worst }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub trials: TrialCounts,
    pub properties: Vec<PropertyOutcome>,
    pub fixture: FixtureVerdict,
}

pub fn run_suites(
    seed: u64,
    trials: TrialCounts,
    tol: f64,
    relative: f64,
    commutator: f64,
) -> crate::error::Result<SuiteSummary> {
    let properties = vec![
        implication_suite(seed, trials.implication, tol),
        symplectic_suite(seed, trials.symplectic, tol),
        rsup_suite(seed, trials.rsup),
        oracle_suite(seed, trials.oracle, relative, commutator),
    ];
    Ok(SuiteSummary { trials, properties, fixture: check_robertson_fixture(ROBERTSON_FIXTURE)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_is_empty_success() {
        let s = run_suites(3, TrialCounts::uniform(0), 1e-9, 1e-6, 1e-6).unwrap();
        assert!(s.properties.iter().all(|p| p.trials == 0 && p.all_passed() && p.pass_rate() == 1.0));
        assert!(s.fixture.reproduced);
    }

    #[test]
    fn small_suites_pass_and_are_deterministic() {
        let a = implication_suite(11, 40, 1e-9);
        assert!(a.all_passed(), "{:?}", a.counterexamples);
        assert_eq!(a, implication_suite(11, 40, 1e-9));
        let b = symplectic_suite(11, 40, 1e-9);
        assert!(b.all_passed(), "{:?}", b.counterexamples);
        assert!(b.stats["scalar_product_changed"].as_u64().unwrap() > 0);
        assert!(rsup_suite(11, 40).all_passed());
        let o = oracle_suite(11, 3, 1e-6, 1e-6);
        assert!(o.all_passed(), "{:?}", o.counterexamples);
    }
}
