//! Quick invariant suite behind `--check`.

use std::fmt;

use impctl_core::analysis::{closed_loop_residual, surface_residual};
use impctl_core::dynamics::{
    analytic_jacobian, cartesian_dynamics_terms, forward_kinematics, inverse_kinematics, jacobian_dot,
    joint_acceleration, mass_matrix, IkBranch,
};
use impctl_core::linalg::symmetric_eigenvalues;
use impctl_core::{Mat2, Vec2};

use crate::config::ExperimentConfig;
use crate::experiment::RunKey;
use crate::report::identity_tolerance;

/// Simulated horizon for the closed-loop part of the suite (s).
pub const CHECK_HORIZON: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn line(name: impl Into<String>, passed: bool, detail: String) -> CheckLine {
    CheckLine {
        name: name.into(),
        passed,
        detail,
    }
}

/// Joint configurations away from the straight and folded elbow.
fn sample_configurations() -> impl Iterator<Item = Vec2> {
    (0..12).flat_map(|i| {
        (0..10).map(move |k| {
            let q1 = -3.0 + 0.5 * i as f64;
            let q2 = if k < 5 { 0.3 + 0.5 * k as f64 } else { -0.3 - 0.5 * (k - 5) as f64 };
            Vec2::new(q1, q2)
        })
    })
}

fn dynamics_checks(cfg: &ExperimentConfig) -> Vec<CheckLine> {
    let p = cfg.params();
    let mut min_eig = f64::INFINITY;
    let mut ik_err: f64 = 0.0;
    let mut jac_err: f64 = 0.0;
    let mut dyn_err: f64 = 0.0;
    let qdot = Vec2::new(0.7, -1.1);
    let h = 1e-6;
    for q in sample_configurations() {
        min_eig = min_eig.min(symmetric_eigenvalues(&mass_matrix(&p, &q)).0);

        let x = forward_kinematics(&p, &q);
        let branch = if q[1] >= 0.0 { IkBranch::ElbowDown } else { IkBranch::ElbowUp };
        if let Ok(back) = inverse_kinematics(&p, &x, branch) {
            ik_err = ik_err.max((forward_kinematics(&p, &back) - x).norm());
        } else {
            ik_err = f64::INFINITY;
        }

        let mut fd = Mat2::zeros();
        for k in 0..2 {
            let mut dq = Vec2::zeros();
            dq[k] = h;
            fd.set_column(k, &((forward_kinematics(&p, &(q + dq)) - forward_kinematics(&p, &(q - dq))) / (2.0 * h)));
        }
        jac_err = jac_err.max((analytic_jacobian(&p, &q) - fd).amax());

        let tau = Vec2::new(0.4, -0.3);
        let qddot = joint_acceleration(&p, &q, &qdot, &tau);
        let j = analytic_jacobian(&p, &q);
        let xdot = j * qdot;
        let xddot = j * qddot + jacobian_dot(&p, &q, &qdot) * qdot;
        match (cartesian_dynamics_terms(&p, &q, &qdot), j.transpose().try_inverse()) {
            (Ok(terms), Some(jt_inv)) => {
                let f = jt_inv * tau;
                let r = (terms.mx * xddot + terms.cx * xdot + terms.gx - f).norm() / (1.0 + f.norm());
                dyn_err = dyn_err.max(r);
            }
            _ => dyn_err = f64::INFINITY,
        }
    }
    vec![
        line("mass matrix positive definite", min_eig > 0.0, format!("min eigenvalue {min_eig:e}")),
        line("kinematics round trip", ik_err < 1e-10, format!("max error {ik_err:e} m")),
        line("jacobian vs finite differences", jac_err < 1e-5, format!("max error {jac_err:e}")),
        line("joint/task dynamics agree", dyn_err < 1e-8, format!("max relative residual {dyn_err:e}")),
    ]
}

fn closed_loop_checks(cfg: &ExperimentConfig) -> Vec<CheckLine> {
    let tolerance = identity_tolerance(cfg.sim.dt);
    let jobs: Vec<_> = cfg
        .scenarios
        .iter()
        .flat_map(|&scenario| cfg.controllers.iter().map(move |&controller| RunKey { scenario, controller }))
        .map(|key| {
            let mut spec = cfg.run_spec(key.scenario, key.controller);
            spec.sim.duration = spec.sim.duration.min(CHECK_HORIZON);
            (key, spec)
        })
        .collect();
    crate::batch::run_batch(jobs)
        .into_iter()
        .map(|(key, result)| {
            let name = format!("{} identities", key.stem());
            match result {
                Ok(records) => {
                    let a = closed_loop_residual(&records);
                    let b = surface_residual(&records);
                    line(
                        name,
                        a < tolerance && b < tolerance,
                        format!("acceleration residual {a:e}, surface residual {b:e} (limit {tolerance:e})"),
                    )
                }
                Err(aborted) => line(name, false, aborted.to_string()),
            }
        })
        .collect()
}

/// Validate the configuration, spot-check the model and replay the
/// closed-loop identities over a short horizon of every configured run.
pub fn run_checks(cfg: &ExperimentConfig) -> Vec<CheckLine> {
    let errors = cfg.errors();
    let mut lines = vec![line(
        "configuration",
        errors.is_empty(),
        if errors.is_empty() {
            format!("{} warning(s)", cfg.warnings().len())
        } else {
            errors.join("; ")
        },
    )];
    if !errors.is_empty() {
        return lines;
    }
    lines.extend(dynamics_checks(cfg));
    lines.extend(closed_loop_checks(cfg));
    lines
}
