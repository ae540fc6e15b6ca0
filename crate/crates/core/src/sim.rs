//! Fixed-step closed-loop simulation of arm, controller and environment.
//!
//! Every step reads the plant state, evaluates the controller, applies the
//! joint torque together with the disturbance and contact force (all held
//! over the step) and integrates the joint dynamics with RK4. One
//! [`SimRecord`] is logged per sample, including the initial one.

use alloc::vec::Vec;

use crate::analysis::{omega, tde_error_from_terms};
use crate::controller::{impedance_error, Controller, ControllerConfig, ControllerKind, ControllerState, Measurement};
use crate::dynamics::{
    analytic_jacobian, cartesian_dynamics_terms, forward_kinematics, inverse_kinematics, jacobian_dot,
    jacobian_inverse, plant_acceleration, IkBranch, JointState, ManipulatorParams,
};
use crate::environment::{DisturbanceSpec, EnvironmentModel, TrajectorySpec};
use crate::error::{Error, Result};
use crate::integrate::{integrate_step, HeldLoads};
use crate::linalg::{is_finite, Mat2, Vec2};

/// Joint speed above which a run is declared divergent (rad/s).
pub const DIVERGENCE_SPEED: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scenario {
    /// Moving reference kept inside a moving compliant environment.
    Constrained,
    /// Same reference, no environment.
    FreeMotion,
    /// Reference and environment parked at their offsets.
    StaticEquilibrium,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Constrained, Scenario::FreeMotion, Scenario::StaticEquilibrium];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Constrained => "constrained",
            Scenario::FreeMotion => "free-motion",
            Scenario::StaticEquilibrium => "static-equilibrium",
        }
    }

    /// Reference and environment actually used by this scenario.
    pub fn apply(self, reference: &TrajectorySpec, environment: &EnvironmentModel) -> (TrajectorySpec, EnvironmentModel) {
        match self {
            Scenario::Constrained => (*reference, *environment),
            Scenario::FreeMotion => (
                *reference,
                EnvironmentModel {
                    stiffness: Mat2::zeros(),
                    ..*environment
                },
            ),
            Scenario::StaticEquilibrium => (
                reference.stationary(),
                EnvironmentModel {
                    trajectory: environment.trajectory.stationary(),
                    ..*environment
                },
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Start on the reference: `x(0) = x_d(0)`, `ẋ(0) = ẋ_d(0)`.
    OnReference,
    Explicit(JointState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub scenario: Scenario,
    pub controller: ControllerKind,
    pub initial_condition: InitialCondition,
    pub ik_branch: IkBranch,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 10.0,
            scenario: Scenario::Constrained,
            controller: ControllerKind::Proposed,
            initial_condition: InitialCondition::OnReference,
            ik_branch: IkBranch::ElbowDown,
        }
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        libm::round(self.duration / self.dt) as usize
    }
}

/// Everything a single run depends on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSpec {
    pub sim: SimConfig,
    pub params: ManipulatorParams,
    pub controller: ControllerConfig,
    pub reference: TrajectorySpec,
    pub environment: EnvironmentModel,
    pub disturbance: DisturbanceSpec,
}

impl RunSpec {
    pub fn new(sim: SimConfig) -> Self {
        Self { sim, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(Error::Invalid(alloc::format!("dt must be positive, got {}", s.dt)));
        }
        if !(s.duration.is_finite() && s.duration > 0.0) {
            return Err(Error::Invalid(alloc::format!("duration must be positive, got {}", s.duration)));
        }
        if let Some(name) = self.params.violations().next() {
            return Err(Error::Invalid(alloc::format!("plant parameter {name} must be positive")));
        }
        if !self.reference.is_valid() {
            return Err(Error::Invalid("reference trajectory is invalid".into()));
        }
        if !self.environment.is_valid() {
            return Err(Error::Invalid("environment model is invalid".into()));
        }
        let report = self.controller.check(s.dt);
        if let Some(first) = report.errors.into_iter().next() {
            return Err(Error::Invalid(first));
        }
        Ok(())
    }
}

/// One logged sample.
///
/// `eta` is the impedance error against the configured target, `sigma` the
/// delay-estimation error reconstructed from plant truth, `omega` the
/// design-inertia condition number `‖M_x⁻¹ M̄ − I‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub q: Vec2,
    pub qdot: Vec2,
    pub x: Vec2,
    pub xdot: Vec2,
    pub xddot: Vec2,
    pub x_d: Vec2,
    pub xdot_d: Vec2,
    pub xddot_d: Vec2,
    pub x_e: Vec2,
    pub e: Vec2,
    pub edot: Vec2,
    pub e_f: Vec2,
    pub alpha: Vec2,
    pub s: Vec2,
    pub eta: Vec2,
    pub f_e: Vec2,
    pub f_u: Vec2,
    pub tau: Vec2,
    pub a: Vec2,
    pub delta_a: Vec2,
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_hat: Vec2,
    pub d_x: Vec2,
    pub sigma: Vec2,
    pub omega: f64,
}

/// A run that stopped early, with the samples logged so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Aborted {
    pub records: Vec<SimRecord>,
    pub error: Error,
}

impl core::fmt::Display for Aborted {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "run aborted after {} samples: {}", self.records.len(), self.error)
    }
}

impl core::error::Error for Aborted {}

pub fn initial_state(
    config: &SimConfig,
    params: &ManipulatorParams,
    reference: &TrajectorySpec,
    controller: &ControllerConfig,
) -> Result<(JointState, ControllerState)> {
    let joint = match config.initial_condition {
        InitialCondition::Explicit(js) => js,
        InitialCondition::OnReference => {
            let r = reference.evaluate(0.0);
            let q = inverse_kinematics(params, &r.pos, config.ik_branch)?;
            let qdot = jacobian_inverse(params, &q)? * r.vel;
            JointState::new(q, qdot)
        }
    };
    Ok((joint, ControllerState::new(controller, config.dt)?))
}

pub fn run(spec: &RunSpec) -> core::result::Result<Vec<SimRecord>, Aborted> {
    let mut records = Vec::new();
    match run_into(spec, &mut records) {
        Ok(()) => Ok(records),
        Err(error) => Err(Aborted { records, error }),
    }
}

fn run_into(spec: &RunSpec, records: &mut Vec<SimRecord>) -> Result<()> {
    spec.validate()?;
    let cfg = &spec.sim;
    let p = &spec.params;
    let dt = cfg.dt;
    let (reference, environment) = cfg.scenario.apply(&spec.reference, &spec.environment);
    let (mut joint, _) = initial_state(cfg, p, &reference, &spec.controller)?;
    let mut controller = Controller::new(cfg.controller, spec.controller, dt)?;
    let mbar = spec.controller.tde.inertia;
    let n = cfg.steps();
    records.reserve(n + 1);

    for k in 0..=n {
        let t = k as f64 * dt;
        if !(is_finite(&joint.q) && is_finite(&joint.qdot)) || !controller.state_is_finite() {
            return Err(Error::NonFinite { what: "state", t });
        }
        let speed = joint.qdot.norm();
        if speed > DIVERGENCE_SPEED {
            return Err(Error::Diverged { speed, t });
        }

        let terms = cartesian_dynamics_terms(p, &joint.q, &joint.qdot)?;
        let jacobian = analytic_jacobian(p, &joint.q);
        let x = forward_kinematics(p, &joint.q);
        let xdot = jacobian * joint.qdot;
        let target = reference.evaluate(t);
        let f_e = environment.contact_force(&x, t);
        let d_x = spec.disturbance.evaluate(t);
        let meas = Measurement { x, xdot, jacobian, f_e };

        let out = controller.compute(&target, &meas);
        let qddot = plant_acceleration(p, &joint.q, &joint.qdot, &out.tau, &d_x, &f_e)?;
        let xddot = jacobian * qddot + jacobian_dot(p, &joint.q, &joint.qdot) * joint.qdot;
        let eta = impedance_error(&out.e, &out.edot, &(target.acc - xddot), &f_e, &spec.controller.target);
        let sigma = tde_error_from_terms(&terms, &xdot, &xddot, &d_x, &f_e, &out.n_hat, &mbar)?;

        let record = SimRecord {
            t,
            q: joint.q,
            qdot: joint.qdot,
            x,
            xdot,
            xddot,
            x_d: target.pos,
            xdot_d: target.vel,
            xddot_d: target.acc,
            x_e: environment.surface(t),
            e: out.e,
            edot: out.edot,
            e_f: out.e_f,
            alpha: out.alpha,
            s: out.s,
            eta,
            f_e,
            f_u: out.f_u,
            tau: out.tau,
            a: out.a,
            delta_a: out.delta_a,
            lambda1: out.lambda1,
            lambda2: out.lambda2,
            n_hat: out.n_hat,
            d_x,
            sigma,
            omega: omega(&terms.mx, &mbar)?,
        };
        if !record_is_finite(&record) {
            return Err(Error::NonFinite { what: "record", t });
        }
        records.push(record);
        if k == n {
            break;
        }

        controller.advance(&out, &meas, &xddot);
        let loads = HeldLoads { tau: out.tau, d_x, f_e };
        joint = integrate_step(p, &joint, &loads, dt)?;
    }
    Ok(())
}

fn record_is_finite(r: &SimRecord) -> bool {
    [
        r.q, r.qdot, r.x, r.xdot, r.xddot, r.e_f, r.alpha, r.s, r.eta, r.f_u, r.tau, r.delta_a, r.n_hat, r.sigma,
    ]
    .iter()
    .all(is_finite)
        && r.lambda1.is_finite()
        && r.lambda2.is_finite()
        && r.omega.is_finite()
}
