//! Experiment configuration files.
//!
//! A config is a TOML document. Every key is optional and defaults to the
//! reference experiment; unknown keys are rejected.

use std::path::{Path, PathBuf};

use impctl_core::controller::{
    AccelSource, ControllerConfig, ControllerKind, GfteGains, ImpedanceTarget, StaGains, TdeConfig,
};
use impctl_core::dynamics::{IkBranch, JointState, ManipulatorParams};
use impctl_core::environment::{ContactMode, DisturbanceSpec, EnvironmentModel, TrajectorySpec};
use impctl_core::linalg::diag;
use impctl_core::sim::{InitialCondition, RunSpec, Scenario, SimConfig};
use impctl_core::analysis::SummaryOptions;
use impctl_core::Vec2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub scenarios: Vec<Scenario>,
    pub controllers: Vec<ControllerKind>,
    pub sim: SimSection,
    pub plant: PlantSection,
    pub controller: ControllerSection,
    pub reference: TrajectorySection,
    pub environment: EnvironmentSection,
    pub disturbance: DisturbanceSection,
    pub analysis: AnalysisSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            scenarios: Scenario::ALL.to_vec(),
            controllers: ControllerKind::ALL.to_vec(),
            sim: SimSection::default(),
            plant: PlantSection::default(),
            controller: ControllerSection::default(),
            reference: TrajectorySection::from(TrajectorySpec::reference_default()),
            environment: EnvironmentSection::default(),
            disturbance: DisturbanceSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub duration: f64,
    pub ik_branch: IkBranch,
    /// Explicit start instead of starting on the reference.
    pub initial_q: Option<[f64; 2]>,
    pub initial_qdot: Option<[f64; 2]>,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            duration: d.duration,
            ik_branch: d.ik_branch,
            initial_q: None,
            initial_qdot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = ManipulatorParams::default();
        Self {
            m1: p.m1,
            m2: p.m2,
            l1: p.l1,
            l2: p.l2,
            g: p.g,
        }
    }
}

/// Diagonal matrices are written as `[x, y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub gamma1: [f64; 2],
    pub gamma2: [f64; 2],
    pub target: TargetSection,
    pub sta: StaSection,
    pub tde: TdeSection,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let g = GfteGains::default();
        Self {
            gamma1: diagonal(&g.gamma1),
            gamma2: diagonal(&g.gamma2),
            target: TargetSection::default(),
            sta: StaSection::default(),
            tde: TdeSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub inertia: [f64; 2],
    pub damping: [f64; 2],
    pub stiffness: [f64; 2],
}

impl Default for TargetSection {
    fn default() -> Self {
        let t = ImpedanceTarget::default();
        Self {
            inertia: diagonal(&t.inertia),
            damping: diagonal(&t.damping),
            stiffness: diagonal(&t.stiffness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaSection {
    pub gamma01: f64,
    pub gamma02: f64,
    pub gamma11: f64,
    pub gamma12: f64,
}

impl Default for StaSection {
    fn default() -> Self {
        let s = StaGains::default();
        Self {
            gamma01: s.gamma01,
            gamma02: s.gamma02,
            gamma11: s.gamma11,
            gamma12: s.gamma12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccelSourceName {
    TrueState,
    FilteredDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdeSection {
    pub design_inertia: [f64; 2],
    pub delay: f64,
    pub accel_source: AccelSourceName,
    /// Pole of the velocity-difference filter (rad/s), used with `filtered-difference`.
    pub filter_pole: f64,
}

impl Default for TdeSection {
    fn default() -> Self {
        let t = TdeConfig::default();
        Self {
            design_inertia: diagonal(&t.inertia),
            delay: t.delay,
            accel_source: AccelSourceName::TrueState,
            filter_pole: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub offset: [f64; 2],
    pub amplitude: [f64; 2],
    pub frequency: [f64; 2],
}

impl From<TrajectorySpec> for TrajectorySection {
    fn from(t: TrajectorySpec) -> Self {
        Self {
            offset: t.offset.into(),
            amplitude: t.amplitude.into(),
            frequency: t.frequency.into(),
        }
    }
}

impl Default for TrajectorySection {
    fn default() -> Self {
        TrajectorySpec::reference_default().into()
    }
}

impl TrajectorySection {
    fn spec(&self) -> TrajectorySpec {
        TrajectorySpec {
            offset: self.offset.into(),
            amplitude: self.amplitude.into(),
            frequency: self.frequency.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub stiffness: [f64; 2],
    pub contact: ContactMode,
    pub offset: [f64; 2],
    pub amplitude: [f64; 2],
    pub frequency: [f64; 2],
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        let e = EnvironmentModel::default();
        let t = TrajectorySection::from(e.trajectory);
        Self {
            stiffness: diagonal(&e.stiffness),
            contact: e.mode,
            offset: t.offset,
            amplitude: t.amplitude,
            frequency: t.frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceSection {
    pub amplitude: [f64; 2],
    pub frequency: f64,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        let d = DisturbanceSpec::default();
        Self {
            amplitude: d.amplitude.into(),
            frequency: d.frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// `‖η‖` below which a run counts as converged (m/s²).
    pub convergence_threshold: f64,
    /// Trailing fraction of each run used for steady-state statistics.
    pub steady_fraction: f64,
    /// Largest per-step joint torque change reported as smooth (N·m).
    pub torque_step_bound: f64,
    /// Bound checks ignore samples before this time (s).
    pub bound_check_from: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let o = SummaryOptions::default();
        Self {
            convergence_threshold: o.convergence_threshold,
            steady_fraction: o.steady_fraction,
            torque_step_bound: 0.5,
            bound_check_from: o.bound_check_from,
        }
    }
}

fn diagonal(m: &impctl_core::Mat2) -> [f64; 2] {
    [m[(0, 0)], m[(1, 1)]]
}

fn has_duplicates<T: Ord + Clone>(items: &[T]) -> bool {
    let mut sorted = items.to_vec();
    sorted.sort();
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn matrix(d: [f64; 2]) -> impctl_core::Mat2 {
    diag(d[0], d[1])
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Read and deserialize without validating, so callers can apply overrides first.
pub fn read_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let config = read_config(path)?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn params(&self) -> ManipulatorParams {
        let p = &self.plant;
        ManipulatorParams {
            m1: p.m1,
            m2: p.m2,
            l1: p.l1,
            l2: p.l2,
            g: p.g,
        }
    }

    pub fn controller_config(&self) -> ControllerConfig {
        let c = &self.controller;
        ControllerConfig {
            target: ImpedanceTarget {
                inertia: matrix(c.target.inertia),
                damping: matrix(c.target.damping),
                stiffness: matrix(c.target.stiffness),
            },
            gfte: GfteGains {
                gamma1: matrix(c.gamma1),
                gamma2: matrix(c.gamma2),
            },
            sta: StaGains {
                gamma01: c.sta.gamma01,
                gamma02: c.sta.gamma02,
                gamma11: c.sta.gamma11,
                gamma12: c.sta.gamma12,
            },
            tde: TdeConfig {
                inertia: matrix(c.tde.design_inertia),
                delay: c.tde.delay,
                accel_source: match c.tde.accel_source {
                    AccelSourceName::TrueState => AccelSource::TrueState,
                    AccelSourceName::FilteredDifference => AccelSource::FilteredDifference {
                        pole: c.tde.filter_pole,
                    },
                },
            },
        }
    }

    pub fn environment_model(&self) -> EnvironmentModel {
        let e = &self.environment;
        EnvironmentModel {
            stiffness: matrix(e.stiffness),
            trajectory: TrajectorySpec {
                offset: e.offset.into(),
                amplitude: e.amplitude.into(),
                frequency: e.frequency.into(),
            },
            mode: e.contact,
        }
    }

    pub fn summary_options(&self) -> SummaryOptions {
        let sta = &self.controller.sta;
        SummaryOptions {
            convergence_threshold: self.analysis.convergence_threshold,
            steady_fraction: self.analysis.steady_fraction,
            gamma0_star: sta.gamma01 + sta.gamma02,
            gamma1_star: sta.gamma11 + sta.gamma12,
            delay: self.controller.tde.delay,
            bound_check_from: self.analysis.bound_check_from,
        }
    }

    /// Everything needed to simulate one scenario with one controller.
    pub fn run_spec(&self, scenario: Scenario, controller: ControllerKind) -> RunSpec {
        let initial_condition = match self.sim.initial_q {
            Some(q) => InitialCondition::Explicit(JointState::new(
                q.into(),
                self.sim.initial_qdot.map_or(Vec2::zeros(), Vec2::from),
            )),
            None => InitialCondition::OnReference,
        };
        RunSpec {
            sim: SimConfig {
                dt: self.sim.dt,
                duration: self.sim.duration,
                scenario,
                controller,
                initial_condition,
                ik_branch: self.sim.ik_branch,
            },
            params: self.params(),
            controller: self.controller_config(),
            reference: self.reference.spec(),
            environment: self.environment_model(),
            disturbance: DisturbanceSpec {
                amplitude: self.disturbance.amplitude.into(),
                frequency: self.disturbance.frequency,
            },
        }
    }

    /// All violations, not just the first.
    pub fn errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sim.dt) {
            errors.push(format!("sim.dt must be positive, got {}", self.sim.dt));
        }
        if !positive(self.sim.duration) {
            errors.push(format!("sim.duration must be positive, got {}", self.sim.duration));
        }
        if self.sim.initial_qdot.is_some() && self.sim.initial_q.is_none() {
            errors.push("sim.initial_qdot needs sim.initial_q".into());
        }
        for name in self.params().violations() {
            errors.push(format!("plant.{name} must be positive"));
        }
        if self.scenarios.is_empty() {
            errors.push("scenarios must not be empty".into());
        }
        if self.controllers.is_empty() {
            errors.push("controllers must not be empty".into());
        }
        if has_duplicates(&self.scenarios) {
            errors.push("scenarios contains duplicates".into());
        }
        if has_duplicates(&self.controllers) {
            errors.push("controllers contains duplicates".into());
        }
        if !self.reference.spec().is_valid() {
            errors.push("reference frequencies must be positive and all values finite".into());
        }
        if !self.environment_model().is_valid() {
            errors.push("environment stiffness must be non-negative and frequencies positive".into());
        }
        if self.disturbance.amplitude.iter().chain([&self.disturbance.frequency]).any(|v| !v.is_finite()) {
            errors.push("disturbance values must be finite".into());
        }
        if !positive(self.analysis.convergence_threshold) {
            errors.push("analysis.convergence_threshold must be positive".into());
        }
        if !(self.analysis.steady_fraction > 0.0 && self.analysis.steady_fraction <= 1.0) {
            errors.push("analysis.steady_fraction must lie in (0, 1]".into());
        }
        if !positive(self.analysis.torque_step_bound) {
            errors.push("analysis.torque_step_bound must be positive".into());
        }
        if positive(self.sim.dt) {
            errors.extend(self.controller_config().check(self.sim.dt).errors);
        }
        errors
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.sim.dt > 0.0 {
            self.controller_config().check(self.sim.dt).warnings
        } else {
            Vec::new()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let errors = self.errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Hex SHA-256 of the resolved configuration, excluding the output directory.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let text = toml::to_string(&canonical).expect("configuration serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
