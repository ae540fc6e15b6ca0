//! Classical fixed-step fourth-order Runge–Kutta.

use core::convert::Infallible;
use core::ops::{Add, Mul};

use crate::dynamics::{joint_acceleration, plant_acceleration, JointState, ManipulatorParams};
use crate::error::Result;
use crate::linalg::Vec2;

/// One RK4 step of `ẏ = f(τ, y)` where `τ ∈ [0, dt]` is the offset into the step.
pub fn rk4_step<S, F>(y: S, dt: f64, mut f: F) -> S
where
    S: Copy + Add<Output = S> + Mul<f64, Output = S>,
    F: FnMut(f64, S) -> S,
{
    let Ok(next) = try_rk4_step::<S, _, Infallible>(y, dt, |tau, s| Ok(f(tau, s)));
    next
}

/// Fallible variant of [`rk4_step`]; the first failing stage aborts the step.
pub fn try_rk4_step<S, F, E>(y: S, dt: f64, mut f: F) -> core::result::Result<S, E>
where
    S: Copy + Add<Output = S> + Mul<f64, Output = S>,
    F: FnMut(f64, S) -> core::result::Result<S, E>,
{
    let half = 0.5 * dt;
    let k1 = f(0.0, y)?;
    let k2 = f(half, y + k1 * half)?;
    let k3 = f(half, y + k2 * half)?;
    let k4 = f(dt, y + k3 * dt)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Loads held constant over one plant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldLoads {
    pub tau: Vec2,
    pub d_x: Vec2,
    pub f_e: Vec2,
}

/// Advance the joint state by `dt` with the loads held (zero-order hold).
pub fn integrate_step(
    p: &ManipulatorParams,
    state: &JointState,
    loads: &HeldLoads,
    dt: f64,
) -> Result<JointState> {
    let y = nalgebra::Vector4::new(state.q[0], state.q[1], state.qdot[0], state.qdot[1]);
    let next = try_rk4_step(y, dt, |_, s| {
        let q = Vec2::new(s[0], s[1]);
        let qdot = Vec2::new(s[2], s[3]);
        let qdd = plant_acceleration(p, &q, &qdot, &loads.tau, &loads.d_x, &loads.f_e)?;
        Ok(nalgebra::Vector4::new(qdot[0], qdot[1], qdd[0], qdd[1]))
    })?;
    Ok(JointState::new(Vec2::new(next[0], next[1]), Vec2::new(next[2], next[3])))
}

/// Advance the joint state by `dt` under a held joint torque only. Unlike
/// [`integrate_step`] this never needs the Jacobian inverse.
pub fn integrate_joint_step(p: &ManipulatorParams, state: &JointState, tau: &Vec2, dt: f64) -> JointState {
    let y = nalgebra::Vector4::new(state.q[0], state.q[1], state.qdot[0], state.qdot[1]);
    let next = rk4_step(y, dt, |_, s| {
        let q = Vec2::new(s[0], s[1]);
        let qdot = Vec2::new(s[2], s[3]);
        let qdd = joint_acceleration(p, &q, &qdot, tau);
        nalgebra::Vector4::new(qdot[0], qdot[1], qdd[0], qdd[1])
    });
    JointState::new(Vec2::new(next[0], next[1]), Vec2::new(next[2], next[3]))
}
