use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::oracle::{OracleBlock, SaturationReport};
use super::runs::RotationBlock;
use super::suite::SuiteSummary;
use crate::measurement::NdAssessment;

pub const SCHEMA_VERSION: u32 = 1;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// A value printed in the reference worked examples.
    Published,
    /// A closed-form consequence computed independently.
    Analytic,
    /// Agreement between the grid oracle and the moment algebra.
    Oracle,
    /// A pass count from a property suite.
    Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − expected| ≤ tolerance`
    Equal,
    /// `measured < expected`
    Below,
    /// `measured > expected`
    Above,
}

/// One asserted comparison. Every check carries its tolerance and delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub key: String,
    pub source: Source,
    pub description: String,
    pub relation: Relation,
    pub expected: f64,
    pub measured: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn equal(key: &str, source: Source, description: &str, expected: f64, measured: f64, tolerance: f64) -> Self {
        let delta = measured - expected;
        Self {
            key: key.into(),
            source,
            description: description.into(),
            relation: Relation::Equal,
            expected,
            measured,
            delta,
            tolerance,
            pass: delta.abs() <= tolerance,
        }
    }

    pub fn below(key: &str, source: Source, description: &str, bound: f64, measured: f64) -> Self {
        Self {
            key: key.into(),
            source,
            description: description.into(),
            relation: Relation::Below,
            expected: bound,
            measured,
            delta: measured - bound,
            tolerance: 0.0,
            pass: measured < bound,
        }
    }

    pub fn above(key: &str, source: Source, description: &str, bound: f64, measured: f64) -> Self {
        Self {
            key: key.into(),
            source,
            description: description.into(),
            relation: Relation::Above,
            expected: bound,
            measured,
            delta: measured - bound,
            tolerance: 0.0,
            pass: measured > bound,
        }
    }

    /// A boolean expectation encoded as 1 / 0.
    pub fn flag(key: &str, source: Source, description: &str, expected: bool, measured: bool) -> Self {
        Self::equal(key, source, description, f64::from(u8::from(expected)), f64::from(u8::from(measured)), 0.0)
    }
}

/// A discrepancy worth reporting that does not fail the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub key: String,
    pub summary: String,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub stages_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
}

impl ReportProvenance {
    pub fn current(seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: ReportProvenance,
    pub config: ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assessment: Option<NdAssessment>,
    pub checks: Vec<Check>,
    pub findings: Vec<Finding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteSummary>,
    pub passed: bool,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            provenance: ReportProvenance::current(config.seed),
            config,
            assessment: None,
            checks: Vec::new(),
            findings: Vec::new(),
            oracle: None,
            saturation: None,
            rotation: None,
            suite: None,
            passed: true,
            timing: Timing::default(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.pass;
        self.checks.push(c);
    }

    pub fn finding(&mut self, key: &str, summary: impl Into<String>, details: serde_json::Value) {
        self.findings.push(Finding { key: key.into(), summary: summary.into(), details });
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check_named(&self, key: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.key == key)
    }

    pub fn finding_named(&self, key: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.key == key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without timing, which is bit-identical across reruns of
    /// the same config.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    /// Checks as CSV rows.
    pub fn checks_csv(&self) -> csv::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["key", "source", "relation", "expected", "measured", "delta", "tolerance", "pass"])?;
        for c in &self.checks {
            w.serialize((&c.key, c.source, c.relation, c.expected, c.measured, c.delta, c.tolerance, c.pass))?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors() {
        assert!(Check::equal("a", Source::Analytic, "", 0.25, 0.25 + 1e-13, 1e-12).pass);
        assert!(!Check::equal("a", Source::Analytic, "", 0.25, 0.26, 1e-12).pass);
        assert!(Check::below("b", Source::Published, "", 0.0, -0.2).pass);
        assert!(!Check::above("c", Source::Analytic, "", 0.1, 0.0).pass);
        let f = Check::flag("d", Source::Analytic, "", true, false);
        assert_eq!((f.expected, f.measured, f.pass), (1.0, 0.0, false));
    }
}
