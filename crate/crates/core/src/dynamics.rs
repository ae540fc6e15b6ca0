//! Rigid-body model of the planar two-link arm.
//!
//! The links are modelled as point masses at their distal ends, with gravity
//! acting along −y. Joint angles are absolute for the first link and relative
//! for the second.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Configurations with `|det J| <= SINGULARITY_TOLERANCE` are rejected.
pub const SINGULARITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManipulatorParams {
    /// Mass of link 1 (kg).
    pub m1: f64,
    /// Mass of link 2 (kg).
    pub m2: f64,
    /// Length of link 1 (m).
    pub l1: f64,
    /// Length of link 2 (m).
    pub l2: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self {
            m1: 0.8,
            m2: 0.7,
            l1: 0.6,
            l2: 0.5,
            g: 9.8,
        }
    }
}

impl ManipulatorParams {
    /// Names of fields that are not strictly positive and finite.
    pub fn violations(&self) -> impl Iterator<Item = &'static str> {
        [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("g", self.g),
        ]
        .into_iter()
        .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
        .map(|(name, _)| name)
    }

    pub fn reach(&self) -> (f64, f64) {
        ((self.l1 - self.l2).abs(), self.l1 + self.l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub q: Vec2,
    pub qdot: Vec2,
}

impl JointState {
    pub fn new(q: Vec2, qdot: Vec2) -> Self {
        Self { q, qdot }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub x: Vec2,
    pub xdot: Vec2,
    pub xddot: Vec2,
}

/// Which inverse-kinematics solution to pick. Elbow-down has `q2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum IkBranch {
    ElbowUp,
    #[default]
    ElbowDown,
}

pub fn mass_matrix(p: &ManipulatorParams, q: &Vec2) -> Mat2 {
    let c2 = libm::cos(q[1]);
    let m11 = (p.m1 + p.m2) * p.l1 * p.l1 + p.m2 * p.l2 * (p.l2 + 2.0 * p.l1 * c2);
    let m12 = p.m2 * p.l2 * (p.l2 + p.l1 * c2);
    let m22 = p.m2 * p.l2 * p.l2;
    Mat2::new(m11, m12, m12, m22)
}

/// Centripetal/Coriolis matrix built from the Christoffel symbols of
/// [`mass_matrix`], so that `Ṁ − 2C` is skew-symmetric.
pub fn coriolis_matrix(p: &ManipulatorParams, q: &Vec2, qdot: &Vec2) -> Mat2 {
    let k = p.m2 * p.l1 * p.l2 * libm::sin(q[1]);
    Mat2::new(
        -k * qdot[1],
        -k * (qdot[0] + qdot[1]),
        k * qdot[0],
        0.0,
    )
}

pub fn gravity_vector(p: &ManipulatorParams, q: &Vec2) -> Vec2 {
    let c1 = libm::cos(q[0]);
    let c12 = libm::cos(q[0] + q[1]);
    Vec2::new(
        p.m1 * p.l1 * p.g * c1 + p.m2 * p.g * (p.l2 * c12 + p.l1 * c1),
        p.m2 * p.g * p.l2 * c12,
    )
}

pub fn forward_kinematics(p: &ManipulatorParams, q: &Vec2) -> Vec2 {
    let q12 = q[0] + q[1];
    Vec2::new(
        p.l1 * libm::cos(q[0]) + p.l2 * libm::cos(q12),
        p.l1 * libm::sin(q[0]) + p.l2 * libm::sin(q12),
    )
}

pub fn inverse_kinematics(p: &ManipulatorParams, x: &Vec2, branch: IkBranch) -> Result<Vec2> {
    const SLACK: f64 = 1e-12;
    let (inner, outer) = p.reach();
    let r = x.norm();
    if !r.is_finite() || r < inner - SLACK || r > outer + SLACK {
        return Err(Error::Unreachable { x: x[0], y: x[1] });
    }
    let c2 = ((r * r - p.l1 * p.l1 - p.l2 * p.l2) / (2.0 * p.l1 * p.l2)).clamp(-1.0, 1.0);
    let q2 = match branch {
        IkBranch::ElbowDown => libm::acos(c2),
        IkBranch::ElbowUp => -libm::acos(c2),
    };
    let q1 = libm::atan2(x[1], x[0])
        - libm::atan2(p.l2 * libm::sin(q2), p.l1 + p.l2 * libm::cos(q2));
    Ok(Vec2::new(q1, q2))
}

pub fn analytic_jacobian(p: &ManipulatorParams, q: &Vec2) -> Mat2 {
    let q12 = q[0] + q[1];
    let (s1, c1) = (libm::sin(q[0]), libm::cos(q[0]));
    let (s12, c12) = (libm::sin(q12), libm::cos(q12));
    Mat2::new(
        -p.l1 * s1 - p.l2 * s12,
        -p.l2 * s12,
        p.l1 * c1 + p.l2 * c12,
        p.l2 * c12,
    )
}

pub fn jacobian_dot(p: &ManipulatorParams, q: &Vec2, qdot: &Vec2) -> Mat2 {
    let q12 = q[0] + q[1];
    let w12 = qdot[0] + qdot[1];
    let (s1, c1) = (libm::sin(q[0]), libm::cos(q[0]));
    let (s12, c12) = (libm::sin(q12), libm::cos(q12));
    Mat2::new(
        -p.l1 * c1 * qdot[0] - p.l2 * c12 * w12,
        -p.l2 * c12 * w12,
        -p.l1 * s1 * qdot[0] - p.l2 * s12 * w12,
        -p.l2 * s12 * w12,
    )
}

/// Jacobian inverse, failing inside the singularity band.
pub fn jacobian_inverse(p: &ManipulatorParams, q: &Vec2) -> Result<Mat2> {
    let j = analytic_jacobian(p, q);
    let det = j.determinant();
    if det.is_nan() || det.abs() <= SINGULARITY_TOLERANCE {
        return Err(Error::Singular {
            det,
            tolerance: SINGULARITY_TOLERANCE,
        });
    }
    Ok(Mat2::new(j[(1, 1)], -j[(0, 1)], -j[(1, 0)], j[(0, 0)]) / det)
}

/// Task-space inertia, Coriolis matrix and gravity:
/// `M_x = J⁻ᵀ M J⁻¹`, `C_x = J⁻ᵀ C J⁻¹ − M_x J̇ J⁻¹`, `g_x = J⁻ᵀ g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianTerms {
    pub mx: Mat2,
    pub cx: Mat2,
    pub gx: Vec2,
}

pub fn cartesian_dynamics_terms(
    p: &ManipulatorParams,
    q: &Vec2,
    qdot: &Vec2,
) -> Result<CartesianTerms> {
    let j_inv = jacobian_inverse(p, q)?;
    let j_inv_t = j_inv.transpose();
    let mx = j_inv_t * mass_matrix(p, q) * j_inv;
    let cx = j_inv_t * coriolis_matrix(p, q, qdot) * j_inv - mx * jacobian_dot(p, q, qdot) * j_inv;
    let gx = j_inv_t * gravity_vector(p, q);
    Ok(CartesianTerms { mx, cx, gx })
}

/// Joint accelerations under a joint torque alone, `q̈ = M⁻¹(τ − C q̇ − g)`.
/// Valid in every configuration.
pub fn joint_acceleration(p: &ManipulatorParams, q: &Vec2, qdot: &Vec2, tau: &Vec2) -> Vec2 {
    let rhs = tau - coriolis_matrix(p, q, qdot) * qdot - gravity_vector(p, q);
    let m = mass_matrix(p, q);
    // det M = m2 l1² l2² (m1 + m2 sin² q2) > 0
    let det = m.determinant();
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) * rhs / det
}

/// Joint accelerations under joint torque `tau`, a task-space disturbance
/// `d_x` and a task-space contact force `f_e`:
/// `q̈ = M⁻¹(τ + Jᵀ(F_e − d_x) − C q̇ − g)`.
pub fn plant_acceleration(
    p: &ManipulatorParams,
    q: &Vec2,
    qdot: &Vec2,
    tau: &Vec2,
    d_x: &Vec2,
    f_e: &Vec2,
) -> Result<Vec2> {
    jacobian_inverse(p, q)?;
    let j = analytic_jacobian(p, q);
    Ok(joint_acceleration(p, q, qdot, &(tau + j.transpose() * (f_e - d_x))))
}

/// Task-space state for a joint state and joint acceleration.
pub fn cartesian_state(p: &ManipulatorParams, joint: &JointState, qddot: &Vec2) -> CartesianState {
    let j = analytic_jacobian(p, &joint.q);
    CartesianState {
        x: forward_kinematics(p, &joint.q),
        xdot: j * joint.qdot,
        xddot: j * qddot + jacobian_dot(p, &joint.q, &joint.qdot) * joint.qdot,
    }
}

/// Kinetic plus gravitational potential energy (J), zero potential at y = 0.
pub fn mechanical_energy(p: &ManipulatorParams, joint: &JointState) -> f64 {
    let kinetic = 0.5 * joint.qdot.dot(&(mass_matrix(p, &joint.q) * joint.qdot));
    let y1 = p.l1 * libm::sin(joint.q[0]);
    let y2 = forward_kinematics(p, &joint.q)[1];
    kinetic + p.g * (p.m1 * y1 + p.m2 * y2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_PI_2;

    fn p() -> ManipulatorParams {
        ManipulatorParams::default()
    }

    #[test]
    fn mass_matrix_straight_elbow() {
        let m = mass_matrix(&p(), &Vec2::new(0.7, 0.0));
        assert_abs_diff_eq!(m[(0, 0)], 1.135, epsilon = 1e-12);
    }

    #[test]
    fn mass_matrix_right_angle_elbow() {
        let m = mass_matrix(&p(), &Vec2::new(0.0, FRAC_PI_2));
        assert_abs_diff_eq!(m[(0, 1)], 0.175, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(1, 0)], 0.175, epsilon = 1e-12);
    }

    #[test]
    fn coriolis_vanishes_at_rest_and_straight_elbow() {
        let c = coriolis_matrix(&p(), &Vec2::new(0.4, 1.1), &Vec2::zeros());
        assert_eq!(c, Mat2::zeros());
        let c = coriolis_matrix(&p(), &Vec2::new(0.4, 1.1), &Vec2::new(0.0, 0.0));
        assert_eq!(c, Mat2::zeros());
        let c = coriolis_matrix(&p(), &Vec2::new(0.4, 0.0), &Vec2::new(1.3, -0.2));
        assert_eq!(c[(0, 0)], 0.0);
        assert_eq!(c[(1, 1)], 0.0);
    }

    #[test]
    fn gravity_examples() {
        let g = gravity_vector(&p(), &Vec2::new(FRAC_PI_2, 0.0));
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-12);
        let g = gravity_vector(&p(), &Vec2::zeros());
        assert_abs_diff_eq!(g[0], 12.25, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 3.43, epsilon = 1e-12);
    }

    #[test]
    fn forward_kinematics_examples() {
        let p = p();
        assert_abs_diff_eq!(forward_kinematics(&p, &Vec2::zeros()), Vec2::new(1.1, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            forward_kinematics(&p, &Vec2::new(FRAC_PI_2, 0.0)),
            Vec2::new(0.0, 1.1),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            forward_kinematics(&p, &Vec2::new(0.0, FRAC_PI_2)),
            Vec2::new(0.6, 0.5),
            epsilon = 1e-15
        );
    }

    #[test]
    fn inverse_kinematics_examples() {
        let p = p();
        for branch in [IkBranch::ElbowUp, IkBranch::ElbowDown] {
            let q = inverse_kinematics(&p, &Vec2::new(1.1, 0.0), branch).unwrap();
            assert_abs_diff_eq!(q, Vec2::zeros(), epsilon = 1e-7);
        }
        let q = inverse_kinematics(&p, &Vec2::new(0.6, 0.5), IkBranch::ElbowDown).unwrap();
        assert_abs_diff_eq!(q, Vec2::new(0.0, FRAC_PI_2), epsilon = 1e-12);
        assert!(matches!(
            inverse_kinematics(&p, &Vec2::new(2.0, 0.0), IkBranch::ElbowDown),
            Err(Error::Unreachable { .. })
        ));
        assert!(inverse_kinematics(&p, &Vec2::new(0.05, 0.0), IkBranch::ElbowDown).is_err());
    }

    #[test]
    fn jacobian_determinant_examples() {
        let p = p();
        assert_abs_diff_eq!(analytic_jacobian(&p, &Vec2::zeros()).determinant(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            analytic_jacobian(&p, &Vec2::new(0.0, FRAC_PI_2)).determinant(),
            0.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn jacobian_dot_is_linear_in_velocity() {
        let p = p();
        let q = Vec2::new(0.3, 1.2);
        assert_eq!(jacobian_dot(&p, &q, &Vec2::zeros()), Mat2::zeros());
        let w = Vec2::new(0.7, -1.9);
        assert_abs_diff_eq!(
            jacobian_dot(&p, &q, &(2.0 * w)),
            2.0 * jacobian_dot(&p, &q, &w),
            epsilon = 1e-14
        );
    }

    #[test]
    fn straight_arm_is_singular() {
        let err = cartesian_dynamics_terms(&p(), &Vec2::zeros(), &Vec2::zeros()).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
        assert!(plant_acceleration(
            &p(),
            &Vec2::zeros(),
            &Vec2::zeros(),
            &Vec2::zeros(),
            &Vec2::zeros(),
            &Vec2::zeros()
        )
        .is_err());
    }

    #[test]
    fn gravity_compensation_holds_still() {
        let p = p();
        let q = Vec2::new(0.4, 1.3);
        let tau = gravity_vector(&p, &q);
        let qdd = plant_acceleration(&p, &q, &Vec2::zeros(), &tau, &Vec2::zeros(), &Vec2::zeros()).unwrap();
        assert_abs_diff_eq!(qdd, Vec2::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn weightless_arm_at_rest_stays_at_rest() {
        let p = ManipulatorParams { g: 0.0, ..p() };
        let qdd = plant_acceleration(
            &p,
            &Vec2::new(0.2, 2.0),
            &Vec2::zeros(),
            &Vec2::zeros(),
            &Vec2::zeros(),
            &Vec2::zeros(),
        )
        .unwrap();
        assert_eq!(qdd, Vec2::zeros());
    }

    #[test]
    fn violations_lists_bad_fields() {
        let bad = ManipulatorParams { m1: -1.0, g: f64::NAN, ..p() };
        let names: alloc::vec::Vec<_> = bad.violations().collect();
        assert_eq!(names, ["m1", "g"]);
        assert_eq!(p().violations().count(), 0);
    }
}
