use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceState;
use crate::grid::saturation::{DEFAULT_COARSE_RESOLUTION, DEFAULT_REAL_RESOLUTION};
use crate::grid::{DerivativeScheme, DEFAULT_HALF_WIDTH_SIGMAS};
use crate::linalg::RealMatrix;
use crate::tolerances;

/// Commutation constant of the quadratures used throughout the scenarios.
pub const GAMMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Bae,
    Transducer,
    RotatedBae,
    RandomSuite,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bae" => Ok(Self::Bae),
            "transducer" => Ok(Self::Transducer),
            "rotated_bae" => Ok(Self::RotatedBae),
            "random_suite" => Ok(Self::RandomSuite),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bae => "bae",
            Self::Transducer => "transducer",
            Self::RotatedBae => "rotated_bae",
            Self::RandomSuite => "random_suite",
        })
    }
}

/// Single-mode state source: `vacuum`, `published` (the worked-example probe
/// covariance `[[1/4, 1/2], [1/2, 1/4]]`), `squeezed:R` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateSpec {
    #[default]
    Vacuum,
    Published,
    Squeezed(f64),
    File(PathBuf),
}

impl StateSpec {
    pub fn resolve(&self) -> Result<CovarianceState> {
        match self {
            Self::Vacuum => Ok(CovarianceState::vacuum(1, GAMMA)),
            Self::Published => published_probe(),
            Self::Squeezed(r) => {
                let v = GAMMA / 2.0;
                let sigma = RealMatrix::from_row_slice(2, 2, &[v * (-2.0 * r).exp(), 0.0, 0.0, v * (2.0 * r).exp()]);
                CovarianceState::centered(sigma, GAMMA)
            }
            Self::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let state = CovarianceState::from_json(&text)?;
                if state.n() != 1 {
                    return Err(Error::Config(format!("{} holds {} modes, expected 1", path.display(), state.n())));
                }
                Ok(state)
            }
        }
    }
}

pub fn published_probe() -> Result<CovarianceState> {
    CovarianceState::centered(RealMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.5, 0.25]), GAMMA)
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vacuum" => Ok(Self::Vacuum),
            "published" => Ok(Self::Published),
            _ => {
                if let Some(r) = s.strip_prefix("squeezed:") {
                    let r: f64 = r.parse().map_err(|_| Error::Config(format!("bad squeezing '{r}'")))?;
                    if !r.is_finite() {
                        return Err(Error::Config("squeezing must be finite".into()));
                    }
                    Ok(Self::Squeezed(r))
                } else if let Some(p) = s.strip_prefix("file:") {
                    Ok(Self::File(PathBuf::from(p)))
                } else {
                    Err(Error::Config(format!("unknown state '{s}' (vacuum, published, squeezed:R, file:PATH)")))
                }
            }
        }
    }
}

impl TryFrom<String> for StateSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StateSpec> for String {
    fn from(s: StateSpec) -> String {
        s.to_string()
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Vacuum => f.write_str("vacuum"),
            Self::Published => f.write_str("published"),
            Self::Squeezed(r) => write!(f, "squeezed:{r}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Points per axis; defaults to 512 (1D) or 256 (2D).
    pub points: Option<usize>,
    pub half_width_sigmas: f64,
    pub scheme: DerivativeScheme,
    pub saturation: bool,
    pub coarse_resolution: usize,
    pub real_resolution: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            points: None,
            half_width_sigmas: DEFAULT_HALF_WIDTH_SIGMAS,
            scheme: DerivativeScheme::Spectral,
            saturation: true,
            coarse_resolution: DEFAULT_COARSE_RESOLUTION,
            real_resolution: DEFAULT_REAL_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSettings {
    pub psd: f64,
    pub exact: f64,
    pub oracle_relative: f64,
    pub commutator: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        Self {
            psd: tolerances::PSD,
            exact: tolerances::EXACT,
            oracle_relative: tolerances::ORACLE_RELATIVE,
            commutator: tolerances::GRID_COMMUTATOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialCounts {
    pub implication: usize,
    pub symplectic: usize,
    pub rsup: usize,
    pub oracle: usize,
}

impl Default for TrialCounts {
    fn default() -> Self {
        Self { implication: 1000, symplectic: 500, rsup: 1000, oracle: 20 }
    }
}

impl TrialCounts {
    pub fn uniform(n: usize) -> Self {
        Self { implication: n, symplectic: n, rsup: n, oracle: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default = "default_gain")]
    pub gain: f64,
    #[serde(default)]
    pub probe: StateSpec,
    #[serde(default)]
    pub object_state: StateSpec,
    /// Grid-oracle settings; the oracle runs iff present.
    #[serde(default)]
    pub grid: Option<GridSettings>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceSettings,
    #[serde(default)]
    pub trials: TrialCounts,
    /// Rotation applied by `rotated_bae`, in radians.
    #[serde(default = "default_rotation")]
    pub rotation_angle: f64,
}

fn default_gain() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    1
}

fn default_rotation() -> f64 {
    std::f64::consts::FRAC_PI_4
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            gain: default_gain(),
            probe: StateSpec::Vacuum,
            object_state: StateSpec::Vacuum,
            grid: None,
            seed: default_seed(),
            tolerances: ToleranceSettings::default(),
            trials: TrialCounts::default(),
            rotation_angle: default_rotation(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the invariants and that referenced state files parse.
    pub fn validate(&self) -> Result<()> {
        if self.gain == 0.0 || !self.gain.is_finite() {
            return Err(Error::Config(format!("gain must be finite and nonzero, got {}", self.gain)));
        }
        if !self.rotation_angle.is_finite() {
            return Err(Error::Config("rotation angle must be finite".into()));
        }
        let t = &self.tolerances;
        if [t.psd, t.exact, t.oracle_relative, t.commutator].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("tolerances must be finite and non-negative".into()));
        }
        if let Some(g) = &self.grid {
            if g.half_width_sigmas.is_nan() || g.half_width_sigmas <= 0.0 {
                return Err(Error::Config("grid half width must be positive".into()));
            }
        }
        self.probe.resolve()?;
        self.object_state.resolve()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_spec_round_trip() {
        for s in ["vacuum", "published", "squeezed:0.5", "file:/tmp/x.json"] {
            assert_eq!(s.parse::<StateSpec>().unwrap().to_string(), s);
        }
        assert!("eq47".parse::<StateSpec>().is_err());
        assert!("squeezed:abc".parse::<StateSpec>().is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = ScenarioConfig::from_json(r#"{"scenario": "bae"}"#).unwrap();
        assert_eq!(c, ScenarioConfig::new(Scenario::Bae));
        let c = ScenarioConfig::from_json(r#"{"scenario": "bae", "gain": 0}"#).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ScenarioConfig::from_json(r#"{"scenario": "bae", "probe": "file:/nonexistent.json"}"#).unwrap();
        assert!(c.validate().is_err());
        assert!(ScenarioConfig::from_json(r#"{"scenario": "bae", "gian": 2}"#).is_err());
        let c = ScenarioConfig::from_json(r#"{"scenario": "transducer", "grid": {}}"#).unwrap();
        assert_eq!(c.grid, Some(GridSettings::default()));
    }

    #[test]
    fn squeezed_state_is_pure() {
        let s = StateSpec::Squeezed(0.3).resolve().unwrap();
        let det = s.sigma.determinant();
        assert!((det - GAMMA * GAMMA / 4.0).abs() < 1e-15);
    }
}
