//! Flat JSON reports written next to each CSV log.

use impctl_core::analysis::RunSummary;
use impctl_core::controller::ControllerKind;
use impctl_core::sim::Scenario;
use serde::{Deserialize, Serialize};

/// One run's statistics as a flat key-value record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub scenario: Scenario,
    pub controller: ControllerKind,
    pub config_hash: String,
    pub completed: bool,
    pub error: Option<String>,
    pub samples: usize,
    #[serde(deserialize_with = "nan_from_null")]
    pub dt: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub duration: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub eta_peak: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub eta_ss_mean: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub e_ss_x: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub e_ss_y: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub e_ss_norm: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub f_e_ss_x: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub f_e_ss_y: f64,
    pub convergence_time: Option<f64>,
    #[serde(deserialize_with = "nan_from_null")]
    pub convergence_threshold: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub max_torque_step: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub torque_step_bound: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub chatter_index: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub omega_max: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub sigma_bound_margin: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub sigma_bound_t: f64,
    pub sigma_bound_violations: usize,
    #[serde(deserialize_with = "nan_from_null")]
    pub sigma_derivative_ratio: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub sigma_derivative_t: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub closed_loop_residual: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub surface_residual: f64,
    /// Identity residuals within `10·dt`.
    pub identities_hold: bool,
}

impl SummaryReport {
    pub fn new(
        summary: &RunSummary,
        config_hash: &str,
        dt: f64,
        torque_step_bound: f64,
        error: Option<String>,
    ) -> Self {
        let tolerance = identity_tolerance(dt);
        Self {
            scenario: summary.scenario,
            controller: summary.controller,
            config_hash: config_hash.to_owned(),
            completed: error.is_none(),
            error,
            samples: summary.samples,
            dt,
            duration: summary.duration,
            eta_peak: summary.eta_peak,
            eta_ss_mean: summary.eta_ss_mean,
            e_ss_x: summary.e_ss[0],
            e_ss_y: summary.e_ss[1],
            e_ss_norm: summary.e_ss_norm,
            f_e_ss_x: summary.f_e_ss[0],
            f_e_ss_y: summary.f_e_ss[1],
            convergence_time: summary.convergence_time,
            convergence_threshold: summary.convergence_threshold,
            max_torque_step: summary.max_torque_step,
            torque_step_bound,
            chatter_index: summary.chatter_index,
            omega_max: summary.omega_max,
            sigma_bound_margin: summary.sigma_bound.min_margin,
            sigma_bound_t: summary.sigma_bound.t_at_min,
            sigma_bound_violations: summary.sigma_bound.violations,
            sigma_derivative_ratio: summary.sigma_derivative.max_ratio,
            sigma_derivative_t: summary.sigma_derivative.t_at_max,
            closed_loop_residual: summary.closed_loop_residual,
            surface_residual: summary.surface_residual,
            identities_hold: summary.closed_loop_residual < tolerance && summary.surface_residual < tolerance,
        }
    }

    /// Completed without tripping the in-loop guards or the identity checks.
    pub fn ok(&self) -> bool {
        self.completed && self.identities_hold
    }
}

/// JSON has no NaN, so undefined statistics are written as null and read back as NaN.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Pointwise tolerance for the closed-loop identity residuals.
pub fn identity_tolerance(dt: f64) -> f64 {
    10.0 * dt
}

/// Proposed versus baseline on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: Scenario,
    pub config_hash: String,
    #[serde(deserialize_with = "nan_from_null")]
    pub proposed_eta_ss_mean: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub baseline_eta_ss_mean: f64,
    /// Baseline over proposed; above one favours the proposed controller.
    #[serde(deserialize_with = "nan_from_null")]
    pub eta_ss_ratio: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub proposed_e_ss_norm: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub baseline_e_ss_norm: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub proposed_max_torque_step: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub baseline_max_torque_step: f64,
    pub proposed_completed: bool,
    pub baseline_completed: bool,
}

impl Comparison {
    pub fn new(proposed: &SummaryReport, baseline: &SummaryReport) -> Self {
        Self {
            scenario: proposed.scenario,
            config_hash: proposed.config_hash.clone(),
            proposed_eta_ss_mean: proposed.eta_ss_mean,
            baseline_eta_ss_mean: baseline.eta_ss_mean,
            eta_ss_ratio: baseline.eta_ss_mean / proposed.eta_ss_mean,
            proposed_e_ss_norm: proposed.e_ss_norm,
            baseline_e_ss_norm: baseline.e_ss_norm,
            proposed_max_torque_step: proposed.max_torque_step,
            baseline_max_torque_step: baseline.max_torque_step,
            proposed_completed: proposed.completed,
            baseline_completed: baseline.completed,
        }
    }
}
