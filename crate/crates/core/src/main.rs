use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use noise_disturbance::scenarios::{
    self, gain_grid, oracle, sweep_bae, sweep_csv, RunReport, Scenario, ScenarioConfig, StateSpec, TrialCounts,
};

#[derive(Parser)]
#[command(name = "ndu", version, about = "Noise-disturbance uncertainty relations for linear measurement models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its report.
    Run(RunArgs),
    /// Assess the amplifier over a range of gains.
    Sweep(SweepArgs),
    /// Run the property suites.
    Suite(SuiteArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// JSON config document; flags override its fields.
    #[arg(long, env = "NDU_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "NDU_SEED")]
    seed: Option<u64>,
    /// Probe state: vacuum, published, squeezed:R or file:PATH.
    #[arg(long, env = "NDU_PROBE")]
    probe: Option<String>,
    /// Object state, same forms as --probe.
    #[arg(long, env = "NDU_OBJECT")]
    object: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", env = "NDU_FORMAT")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// bae, transducer, rotated_bae or random_suite.
    scenario: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "NDU_GAIN", allow_negative_numbers = true)]
    gain: Option<f64>,
    /// Enable the grid oracle with default settings.
    #[arg(long, env = "NDU_GRID")]
    grid: bool,
    /// Grid points per axis (implies --grid).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Skip the saturation search when the grid oracle runs.
    #[arg(long)]
    no_saturation: bool,
    /// Rotation angle for rotated_bae, in radians.
    #[arg(long, allow_negative_numbers = true)]
    angle: Option<f64>,
    /// Trials per property suite (random_suite only).
    #[arg(long)]
    trials: Option<usize>,
    /// Write residual landscapes (CSV) and minimizing states (JSON) here.
    #[arg(long)]
    landscape_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Only `bae` is sweepable.
    scenario: String,
    /// `from:to:steps`.
    #[arg(long, allow_hyphen_values = true)]
    gain_range: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SuiteArgs {
    /// Trials per property suite; defaults to each suite's own count.
    #[arg(long, env = "NDU_TRIALS")]
    trials: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn base_config(common: &Common, scenario: Scenario) -> anyhow::Result<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut c = ScenarioConfig::from_json(&text)?;
            c.scenario = scenario;
            c
        }
        None => ScenarioConfig::new(scenario),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(p) = &common.probe {
        config.probe = p.parse::<StateSpec>()?;
    }
    if let Some(o) = &common.object {
        config.object_state = o.parse::<StateSpec>()?;
    }
    Ok(config)
}

fn emit(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn summarize(report: &RunReport) {
    let failed: Vec<_> = report.failed_checks().collect();
    eprintln!(
        "{}: {} checks, {} failed, {} findings",
        report.config.scenario,
        report.checks.len(),
        failed.len(),
        report.findings.len()
    );
    for c in failed {
        eprintln!("  FAIL {}: expected {} measured {} (tolerance {})", c.key, c.expected, c.measured, c.tolerance);
    }
    for f in &report.findings {
        eprintln!("  finding {}: {}", f.key, f.summary);
    }
}

fn write_landscapes(dir: &Path, report: &RunReport) -> anyhow::Result<()> {
    let Some(s) = &report.saturation else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    for (name, result) in [("complex", &s.operator_complex), ("real", &s.operator_real)] {
        std::fs::write(dir.join(format!("landscape_{name}.csv")), oracle::landscape_csv(result)?)?;
        std::fs::write(dir.join(format!("state_{name}.json")), oracle::state_json(result, &s.axis))?;
    }
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<bool> {
    let scenario: Scenario = args.scenario.parse()?;
    let mut config = base_config(&args.common, scenario)?;
    if let Some(g) = args.gain {
        config.gain = g;
    }
    if args.grid || args.grid_points.is_some() || args.no_saturation {
        let mut g = config.grid.take().unwrap_or_default();
        if let Some(p) = args.grid_points {
            g.points = Some(p);
        }
        if args.no_saturation {
            g.saturation = false;
        }
        config.grid = Some(g);
    }
    if let Some(a) = args.angle {
        config.rotation_angle = a;
    }
    if let Some(n) = args.trials {
        config.trials = TrialCounts::uniform(n);
    }
    let report = scenarios::run(&config)?;
    summarize(&report);
    if let Some(dir) = &args.landscape_dir {
        write_landscapes(dir, &report)?;
    }
    let body = match args.common.format {
        Format::Json => report.to_json(),
        Format::Csv => report.checks_csv()?,
    };
    emit(args.common.out.as_deref(), &body)?;
    Ok(report.passed)
}

fn parse_range(s: &str) -> anyhow::Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else { bail!("gain range must be from:to:steps, got '{s}'") };
    Ok((a.parse()?, b.parse()?, n.parse()?))
}

fn sweep(args: SweepArgs) -> anyhow::Result<bool> {
    if args.scenario != "bae" {
        bail!("only the bae scenario can be swept");
    }
    let (from, to, steps) = parse_range(&args.gain_range)?;
    let config = base_config(&args.common, Scenario::Bae)?;
    let rows = sweep_bae(&config, &gain_grid(from, to, steps))?;
    let body = match args.common.format {
        Format::Csv => sweep_csv(&rows)?,
        Format::Json => serde_json::to_string_pretty(&rows)?,
    };
    emit(args.common.out.as_deref(), &body)?;
    Ok(true)
}

fn suite(args: SuiteArgs) -> anyhow::Result<bool> {
    let mut config = base_config(&args.common, Scenario::RandomSuite)?;
    if let Some(n) = args.trials {
        config.trials = TrialCounts::uniform(n);
    }
    let report = scenarios::run(&config)?;
    summarize(&report);
    let body = match args.common.format {
        Format::Json => report.to_json(),
        Format::Csv => report.checks_csv()?,
    };
    emit(args.common.out.as_deref(), &body)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Suite(a) => suite(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0.5:5:10").unwrap(), (0.5, 5.0, 10));
        assert!(parse_range("1:2").is_err());
    }
}
