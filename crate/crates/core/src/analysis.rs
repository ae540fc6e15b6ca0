//! Diagnostics over logged runs: delay-estimation error, its empirical
//! bounds, the design-inertia condition, closed-loop identity residuals,
//! steady-state checks and per-run summaries.

use alloc::vec::Vec;

use crate::controller::{ef_rate, theta_norm, ControllerKind, GfteGains, ImpedanceTarget, S_EPS};
use crate::dynamics::{cartesian_dynamics_terms, CartesianTerms, ManipulatorParams};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Mat2, Vec2};
use crate::sim::{Scenario, SimRecord};

fn inverse(m: &Mat2, what: &str) -> Result<Mat2> {
    m.try_inverse()
        .ok_or_else(|| Error::Invalid(alloc::format!("{what} is not invertible")))
}

/// `σ = M̄⁻¹ (N − N̂)` with `N = (M_x − M̄) ẍ + C_x ẋ + g_x + d_x − F_e`.
pub fn tde_error_from_terms(
    terms: &CartesianTerms,
    xdot: &Vec2,
    xddot: &Vec2,
    d_x: &Vec2,
    f_e: &Vec2,
    n_hat: &Vec2,
    design_inertia: &Mat2,
) -> Result<Vec2> {
    let lumped = (terms.mx - design_inertia) * xddot + terms.cx * xdot + terms.gx + d_x - f_e;
    Ok(inverse(design_inertia, "design inertia")? * (lumped - n_hat))
}

/// Delay-estimation error of one record, rebuilt from the plant model.
pub fn true_tde_error(record: &SimRecord, params: &ManipulatorParams, design_inertia: &Mat2) -> Result<Vec2> {
    let terms = cartesian_dynamics_terms(params, &record.q, &record.qdot)?;
    tde_error_from_terms(
        &terms,
        &record.xdot,
        &record.xddot,
        &record.d_x,
        &record.f_e,
        &record.n_hat,
        design_inertia,
    )
}

/// `Ω = ‖M_x⁻¹ M̄ − I‖₂`
pub fn omega(mx: &Mat2, design_inertia: &Mat2) -> Result<f64> {
    let m = inverse(mx, "task-space inertia")? * design_inertia - Mat2::identity();
    Ok(spectral_norm(&m))
}

pub fn omega_series(records: &[SimRecord], params: &ManipulatorParams, design_inertia: &Mat2) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            let terms = cartesian_dynamics_terms(params, &r.q, &r.qdot)?;
            omega(&terms.mx, design_inertia)
        })
        .collect()
}

/// Records at or after `from` seconds.
pub fn window(records: &[SimRecord], from: f64) -> &[SimRecord] {
    let start = records.partition_point(|r| r.t < from);
    &records[start..]
}

/// Worst-case slack of `‖σ‖ ≤ γ₀* + γ₁* ‖Θ‖` over a record sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SigmaBoundReport {
    /// `min_t (γ₀* + γ₁*‖Θ‖ − ‖σ‖)`; positive means the bound holds throughout.
    pub min_margin: f64,
    pub t_at_min: f64,
    pub violations: usize,
}

impl SigmaBoundReport {
    pub fn holds(&self) -> bool {
        self.min_margin > 0.0
    }
}

pub fn sigma_bound_check(records: &[SimRecord], gamma0: f64, gamma1: f64) -> SigmaBoundReport {
    let mut report = SigmaBoundReport {
        min_margin: f64::INFINITY,
        t_at_min: f64::NAN,
        violations: 0,
    };
    for r in records {
        let margin = gamma0 + gamma1 * theta_norm(&r.e, &r.edot) - r.sigma.norm();
        if margin <= 0.0 {
            report.violations += 1;
        }
        if margin < report.min_margin {
            report.min_margin = margin;
            report.t_at_min = r.t;
        }
    }
    report
}

/// Largest ratio of the central-difference `‖σ̇‖` to `2h⁻¹(γ₀* + γ₁*‖Θ‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DerivativeBoundReport {
    pub max_ratio: f64,
    pub t_at_max: f64,
}

impl DerivativeBoundReport {
    pub fn holds(&self) -> bool {
        self.max_ratio < 1.0
    }
}

pub fn sigma_derivative_bound(records: &[SimRecord], delay: f64, gamma0: f64, gamma1: f64) -> DerivativeBoundReport {
    let mut report = DerivativeBoundReport {
        max_ratio: 0.0,
        t_at_max: f64::NAN,
    };
    for w in records.windows(3) {
        let (prev, mid, next) = (&w[0], &w[1], &w[2]);
        let rate = (next.sigma - prev.sigma).norm() / (next.t - prev.t);
        let bound = 2.0 / delay * (gamma0 + gamma1 * theta_norm(&mid.e, &mid.edot));
        let ratio = rate / bound;
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.t_at_max = mid.t;
        }
    }
    report
}

/// Largest `‖ẍ − (a + Δa − σ)‖` over the records.
pub fn closed_loop_residual(records: &[SimRecord]) -> f64 {
    records
        .iter()
        .map(|r| (r.xddot - (r.a + r.delta_a - r.sigma)).norm())
        .fold(0.0, f64::max)
}

/// Largest `‖(s_{k+1} − s_k)/dt − (σ_k − Δa_k)‖` over samples with `‖s_k‖ ≥ s_eps`.
pub fn surface_residual(records: &[SimRecord]) -> f64 {
    records
        .windows(2)
        .filter(|w| w[0].s.norm() >= S_EPS)
        .map(|w| {
            let rate = (w[1].s - w[0].s) / (w[1].t - w[0].t);
            (rate - (w[0].sigma - w[0].delta_a)).norm()
        })
        .fold(0.0, f64::max)
}

/// Largest `‖η − (α̇ + Γ₂ α)‖` with `α̇ = ë + Γ₁ ė + ė_f` taken from the
/// force-filter right-hand side. Zero up to rounding when the GFTE gains
/// match the impedance target.
pub fn lti_equivalence_residual(records: &[SimRecord], gains: &GfteGains, target: &ImpedanceTarget) -> f64 {
    records
        .iter()
        .map(|r| {
            let eddot = r.xddot_d - r.xddot;
            let def = ef_rate(&r.e_f, &r.f_e, &target.inertia, &gains.gamma2);
            let alpha_dot = eddot + gains.gamma1 * r.edot + def;
            (r.eta - (alpha_dot + gains.gamma2 * r.alpha)).norm()
        })
        .fold(0.0, f64::max)
}

/// Task-space position where `K_m (x_d − x) = −K_e (x_e − x)`:
/// `x_ss = (K_m + K_e)⁻¹ (K_m x_d + K_e x_e)`.
pub fn steady_state_position(target_stiffness: &Mat2, env_stiffness: &Mat2, x_d: &Vec2, x_e: &Vec2) -> Result<Vec2> {
    let total = inverse(&(target_stiffness + env_stiffness), "combined stiffness")?;
    Ok(total * (target_stiffness * x_d + env_stiffness * x_e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EquilibriumReport {
    pub expected: [f64; 2],
    pub actual: [f64; 2],
    /// Per-axis `|x − x_ss|` (m).
    pub deviation: [f64; 2],
}

/// Compare the final position of a settled static run with the analytic
/// equilibrium. Fails with [`Error::NotSettled`] when the final speed exceeds
/// `speed_tolerance`.
pub fn equilibrium_check(
    records: &[SimRecord],
    target_stiffness: &Mat2,
    env_stiffness: &Mat2,
    speed_tolerance: f64,
) -> Result<EquilibriumReport> {
    let last = records
        .last()
        .ok_or_else(|| Error::Invalid("empty run".into()))?;
    let speed = last.xdot.norm();
    if speed.is_nan() || speed > speed_tolerance {
        return Err(Error::NotSettled {
            speed,
            tolerance: speed_tolerance,
        });
    }
    let expected = steady_state_position(target_stiffness, env_stiffness, &last.x_d, &last.x_e)?;
    let dev = (last.x - expected).abs();
    Ok(EquilibriumReport {
        expected: [expected[0], expected[1]],
        actual: [last.x[0], last.x[1]],
        deviation: [dev[0], dev[1]],
    })
}

/// Thresholds and constants used by [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryOptions {
    /// `‖η‖` below which the run counts as converged (m/s²).
    pub convergence_threshold: f64,
    /// Fraction of the run, at the end, used for steady-state statistics.
    pub steady_fraction: f64,
    pub gamma0_star: f64,
    pub gamma1_star: f64,
    pub delay: f64,
    /// Bound checks ignore samples before this time (s).
    pub bound_check_from: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            convergence_threshold: 0.5,
            steady_fraction: 0.2,
            gamma0_star: 15.1,
            gamma1_star: 0.06,
            delay: 0.005,
            bound_check_from: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunSummary {
    pub scenario: Scenario,
    pub controller: ControllerKind,
    pub samples: usize,
    pub duration: f64,
    pub eta_peak: f64,
    /// Mean `‖η‖` over the final steady-state window.
    pub eta_ss_mean: f64,
    /// Mean position error over the final steady-state window (m).
    pub e_ss: [f64; 2],
    /// Mean `‖e‖` over the final steady-state window (m).
    pub e_ss_norm: f64,
    /// Mean contact force over the final steady-state window (N).
    pub f_e_ss: [f64; 2],
    /// First time after which `‖η‖` stays below the threshold, if any.
    pub convergence_time: Option<f64>,
    pub convergence_threshold: f64,
    /// Largest per-step joint torque change (N·m).
    pub max_torque_step: f64,
    /// `max |Δτ| / dt` (N·m/s).
    pub chatter_index: f64,
    pub omega_max: f64,
    pub sigma_bound: SigmaBoundReport,
    pub sigma_derivative: DerivativeBoundReport,
    pub closed_loop_residual: f64,
    pub surface_residual: f64,
}

impl RunSummary {
    pub fn sigma_bound_margin(&self) -> f64 {
        self.sigma_bound.min_margin
    }
}

fn mean_of(records: &[SimRecord], f: impl Fn(&SimRecord) -> Vec2) -> Vec2 {
    if records.is_empty() {
        return Vec2::zeros();
    }
    records.iter().map(f).sum::<Vec2>() / records.len() as f64
}

/// Statistics of a complete run. `records` must be non-empty and time-ordered.
pub fn summarize(records: &[SimRecord], scenario: Scenario, controller: ControllerKind, opts: &SummaryOptions) -> RunSummary {
    let first_t = records.first().map_or(0.0, |r| r.t);
    let last_t = records.last().map_or(0.0, |r| r.t);
    let duration = last_t - first_t;
    let steady = window(records, last_t - opts.steady_fraction * duration);

    let eta_peak = records.iter().map(|r| r.eta.norm()).fold(0.0, f64::max);
    let eta_ss_mean = if steady.is_empty() {
        0.0
    } else {
        steady.iter().map(|r| r.eta.norm()).sum::<f64>() / steady.len() as f64
    };
    let e_ss = mean_of(steady, |r| r.e);
    let e_ss_norm = if steady.is_empty() {
        0.0
    } else {
        steady.iter().map(|r| r.e.norm()).sum::<f64>() / steady.len() as f64
    };
    let f_e_ss = mean_of(steady, |r| r.f_e);

    let convergence_time = match records.iter().rposition(|r| r.eta.norm() >= opts.convergence_threshold) {
        None => Some(first_t),
        Some(i) if i + 1 < records.len() => Some(records[i + 1].t),
        Some(_) => None,
    };

    let mut max_torque_step: f64 = 0.0;
    let mut chatter_index: f64 = 0.0;
    for w in records.windows(2) {
        let jump = (w[1].tau - w[0].tau).amax();
        max_torque_step = max_torque_step.max(jump);
        chatter_index = chatter_index.max(jump / (w[1].t - w[0].t));
    }

    let checked = window(records, opts.bound_check_from);
    RunSummary {
        scenario,
        controller,
        samples: records.len(),
        duration,
        eta_peak,
        eta_ss_mean,
        e_ss: [e_ss[0], e_ss[1]],
        e_ss_norm,
        f_e_ss: [f_e_ss[0], f_e_ss[1]],
        convergence_time,
        convergence_threshold: opts.convergence_threshold,
        max_torque_step,
        chatter_index,
        omega_max: records.iter().map(|r| r.omega).fold(0.0, f64::max),
        sigma_bound: sigma_bound_check(checked, opts.gamma0_star, opts.gamma1_star),
        sigma_derivative: sigma_derivative_bound(checked, opts.delay, opts.gamma0_star, opts.gamma1_star),
        closed_loop_residual: closed_loop_residual(records),
        surface_residual: surface_residual(records),
    }
}
