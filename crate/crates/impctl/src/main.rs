use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use impctl::check::run_checks;
use impctl::{read_config, run_experiment, ExperimentConfig};
use impctl_core::controller::ControllerKind;
use impctl_core::sim::Scenario;

/// Simulate the two-link impedance-control experiments and write CSV logs
/// and JSON summaries.
#[derive(Debug, Parser)]
#[command(name = "impctl", version)]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run only this scenario.
    #[arg(long, value_name = "NAME", value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Run only this controller.
    #[arg(long, value_name = "NAME", value_parser = parse_controller)]
    controller: Option<ControllerKind>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Simulated time per run (s).
    #[arg(long, value_name = "S")]
    duration: Option<f64>,
    /// Fixed step (s).
    #[arg(long, value_name = "S")]
    dt: Option<f64>,
    /// Run the invariant suite and exit.
    #[arg(long)]
    check: bool,
}

fn parse_scenario(name: &str) -> Result<Scenario, String> {
    Scenario::from_name(name).ok_or_else(|| {
        let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn parse_controller(name: &str) -> Result<ControllerKind, String> {
    ControllerKind::from_name(name).ok_or_else(|| {
        let names: Vec<_> = ControllerKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn load(cli: &Cli) -> Result<ExperimentConfig, impctl::ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => read_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.scenario {
        cfg.scenarios = vec![s];
    }
    if let Some(c) = cli.controller {
        cfg.controllers = vec![c];
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(d) = cli.duration {
        cfg.sim.duration = d;
    }
    if let Some(dt) = cli.dt {
        cfg.sim.dt = dt;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }

    if cli.check {
        let lines = run_checks(&cfg);
        for l in &lines {
            println!("{l}");
        }
        return if lines.iter().all(|l| l.passed) {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        };
    }

    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for run in &outcome.runs {
        let r = &run.report;
        let status = match (&r.error, r.identities_hold) {
            (Some(err), _) => format!("aborted: {err}"),
            (None, false) => "identity check failed".to_owned(),
            (None, true) => "ok".to_owned(),
        };
        println!(
            "{:<32} eta_ss {:<12.4e} e_ss {:<12.4e} max|dtau| {:<10.4} {status}",
            run.key.stem(),
            r.eta_ss_mean,
            r.e_ss_norm,
            r.max_torque_step
        );
    }
    for (scenario, _, c) in &outcome.comparisons {
        println!("{:<32} baseline/proposed eta_ss ratio {:.4}", scenario.name(), c.eta_ss_ratio);
    }
    if outcome.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
