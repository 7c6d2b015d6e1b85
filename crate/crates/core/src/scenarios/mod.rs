//! Scenario registry, configuration, batch execution and report emission.

mod config;
pub mod oracle;
mod report;
mod runs;
pub mod suite;

use std::time::Instant;

pub use config::{
    published_probe, GridSettings, Scenario, ScenarioConfig, StateSpec, ToleranceSettings, TrialCounts, GAMMA,
};
pub use report::{Check, Finding, Relation, ReportProvenance, RunReport, Source, Timing, SCHEMA_VERSION};
pub use runs::{
    gain_grid, rotated_relation, rotation_matrix, run_bae, run_rotated_bae, run_transducer, sweep_bae, sweep_csv,
    RotatedScalarRelation, RotationBlock, RotationRow, SweepRow,
};

use crate::error::Result;

/// Runs the property suites and records one pass-count check per suite.
pub fn run_random_suite(config: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let mut report = RunReport::new(config.clone());
    let t = config.tolerances;
    let summary = suite::run_suites(config.seed, config.trials, t.psd, t.oracle_relative, t.commutator)?;
    for p in &summary.properties {
        report.check(Check::equal(
            &format!("suite.{}", p.name),
            Source::Property,
            "passing trials",
            p.trials as f64,
            p.passed as f64,
            0.0,
        ));
    }
    if let Some(sym) = summary.properties.iter().find(|p| p.name == "symplectic_invariance") {
        if sym.trials > 0 {
            let changed = sym.stats["scalar_product_changed"].as_u64().unwrap_or(0);
            report.check(Check::above(
                "suite.symplectic_scalar_changes",
                Source::Property,
                "trials where eps*eta changed under the conjugation",
                0.0,
                changed as f64,
            ));
        }
    }
    report.check(Check::flag(
        "suite.robertson_fixture",
        Source::Property,
        "stored state passes the product bound and fails the matrix bound",
        true,
        summary.fixture.reproduced,
    ));
    report.suite = Some(summary);
    report.timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

pub fn run(config: &ScenarioConfig) -> Result<RunReport> {
    match config.scenario {
        Scenario::Bae => run_bae(config),
        Scenario::Transducer => run_transducer(config),
        Scenario::RotatedBae => run_rotated_bae(config),
        Scenario::RandomSuite => run_random_suite(config),
    }
}
