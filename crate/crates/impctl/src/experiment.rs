//! Scenario × controller experiments and their artifacts on disk.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use impctl_core::analysis::summarize;
use impctl_core::controller::ControllerKind;
use impctl_core::sim::Scenario;
use serde::Serialize;

use crate::batch::run_batch;
use crate::config::ExperimentConfig;
use crate::csvlog::write_records;
use crate::report::{Comparison, SummaryReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub scenario: Scenario,
    pub controller: ControllerKind,
}

impl RunKey {
    pub fn stem(&self) -> String {
        format!("{}-{}", self.scenario.name(), self.controller.name())
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub key: RunKey,
    pub csv: PathBuf,
    pub summary: PathBuf,
    /// Present when the run aborted.
    pub error_marker: Option<PathBuf>,
    pub report: SummaryReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub runs: Vec<RunArtifacts>,
    pub comparisons: Vec<(Scenario, PathBuf, Comparison)>,
}

impl ExperimentOutcome {
    /// All runs completed and passed the identity checks.
    pub fn ok(&self) -> bool {
        self.runs.iter().all(|r| r.report.ok())
    }

    pub fn report(&self, key: RunKey) -> Option<&SummaryReport> {
        self.runs.iter().find(|r| r.key == key).map(|r| &r.report)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct ArtifactError {
    pub path: PathBuf,
    pub source: io::Error,
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError {
        path: path.to_owned(),
        source,
    }
}

pub fn comparison_path(dir: &Path, scenario: Scenario) -> PathBuf {
    dir.join(format!("{}-comparison.json", scenario.name()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_at(path))
}

/// Run every configured scenario with every configured controller and write
/// one CSV and one summary per run, plus a comparison per scenario that has
/// both controllers. Aborted runs keep their partial log and get an
/// `.error` marker next to it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, ArtifactError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let hash = config.hash();
    let opts = config.summary_options();

    let jobs: Vec<_> = config
        .scenarios
        .iter()
        .flat_map(|&scenario| {
            config.controllers.iter().map(move |&controller| RunKey { scenario, controller })
        })
        .map(|key| (key, config.run_spec(key.scenario, key.controller)))
        .collect();
    let results = run_batch(jobs);

    let mut runs = Vec::with_capacity(results.len());
    for (key, result) in results {
        let (records, error) = match result {
            Ok(records) => (records, None),
            Err(aborted) => (aborted.records, Some(aborted.error.to_string())),
        };
        let stem = key.stem();
        let csv = dir.join(format!("{stem}.csv"));
        let file = fs::File::create(&csv).map_err(io_at(&csv))?;
        let mut out = BufWriter::new(file);
        write_records(&mut out, &records).map_err(|e| ArtifactError {
            path: csv.clone(),
            source: e.into(),
        })?;
        out.flush().map_err(io_at(&csv))?;

        let summary = summarize(&records, key.scenario, key.controller, &opts);
        let report = SummaryReport::new(&summary, &hash, config.sim.dt, config.analysis.torque_step_bound, error);
        let summary_path = dir.join(format!("{stem}.summary.json"));
        write_json(&summary_path, &report)?;

        let marker = dir.join(format!("{stem}.error"));
        let error_marker = match &report.error {
            Some(msg) => {
                fs::write(&marker, format!("{msg}\n")).map_err(io_at(&marker))?;
                Some(marker)
            }
            None => {
                match fs::remove_file(&marker) {
                    Ok(()) => {}
                    Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                    Err(e) => return Err(io_at(&marker)(e)),
                }
                None
            }
        };
        runs.push(RunArtifacts {
            key,
            csv,
            summary: summary_path,
            error_marker,
            report,
        });
    }

    let mut comparisons = Vec::new();
    for &scenario in &config.scenarios {
        let find = |controller| {
            runs.iter()
                .find(|r| r.key == RunKey { scenario, controller })
                .map(|r| &r.report)
        };
        if let (Some(p), Some(b)) = (find(ControllerKind::Proposed), find(ControllerKind::Baseline)) {
            let comparison = Comparison::new(p, b);
            let path = comparison_path(dir, scenario);
            write_json(&path, &comparison)?;
            comparisons.push((scenario, path, comparison));
        }
    }
    Ok(ExperimentOutcome { runs, comparisons })
}
