//! Dynamics checked against independent oracles built from the arm's
//! kinetic and potential energy and from finite differences.

use approx::assert_abs_diff_eq;
use impctl_core::dynamics::*;
use impctl_core::linalg::symmetric_eigenvalues;
use impctl_core::{Mat2, Vec2};
use proptest::prelude::*;

fn p() -> ManipulatorParams {
    ManipulatorParams::default()
}

/// Kinetic energy of the point-mass arm built directly from link tip velocities.
fn kinetic_energy(p: &ManipulatorParams, q: &Vec2, qdot: &Vec2) -> f64 {
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    let v1 = Vec2::new(-p.l1 * s1, p.l1 * c1) * qdot[0];
    let w12 = qdot[0] + qdot[1];
    let v2 = v1 + Vec2::new(-p.l2 * s12, p.l2 * c12) * w12;
    0.5 * p.m1 * v1.norm_squared() + 0.5 * p.m2 * v2.norm_squared()
}

fn potential_energy(p: &ManipulatorParams, q: &Vec2) -> f64 {
    let y1 = p.l1 * q[0].sin();
    let y2 = y1 + p.l2 * (q[0] + q[1]).sin();
    p.g * (p.m1 * y1 + p.m2 * y2)
}

fn mass_oracle(p: &ManipulatorParams, q: &Vec2) -> Mat2 {
    // M_ij = ∂²T/∂q̇_i∂q̇_j; T is quadratic so unit probes are exact.
    let e = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let mut m = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = kinetic_energy(p, q, &(e[i] + e[j])) - kinetic_energy(p, q, &e[i]) - kinetic_energy(p, q, &e[j]);
        }
    }
    m
}

/// `C(q, q̇) q̇` from `Ṁ q̇ − ½ ∂(q̇ᵀ M q̇)/∂q` by central differences.
fn coriolis_force_oracle(p: &ManipulatorParams, q: &Vec2, qdot: &Vec2) -> Vec2 {
    let h = 1e-6;
    let mut out = Vec2::zeros();
    let mut mdot = Mat2::zeros();
    for k in 0..2 {
        let mut dq = Vec2::zeros();
        dq[k] = h;
        let dm = (mass_oracle(p, &(q + dq)) - mass_oracle(p, &(q - dq))) / (2.0 * h);
        mdot += dm * qdot[k];
        out[k] -= 0.5 * (qdot.transpose() * dm * qdot)[0];
    }
    out + mdot * qdot
}

fn gravity_oracle(p: &ManipulatorParams, q: &Vec2) -> Vec2 {
    let h = 1e-6;
    let mut g = Vec2::zeros();
    for k in 0..2 {
        let mut dq = Vec2::zeros();
        dq[k] = h;
        g[k] = (potential_energy(p, &(q + dq)) - potential_energy(p, &(q - dq))) / (2.0 * h);
    }
    g
}

fn angle() -> impl Strategy<Value = f64> {
    -std::f64::consts::PI..std::f64::consts::PI
}

fn rate() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

/// Elbow angles bounded away from the straight and folded singularities.
fn elbow() -> impl Strategy<Value = f64> {
    prop_oneof![0.2..2.9f64, -2.9..-0.2f64]
}

proptest! {
    #[test]
    fn mass_matrix_matches_kinetic_energy(q1 in angle(), q2 in angle()) {
        let q = Vec2::new(q1, q2);
        let m = mass_matrix(&p(), &q);
        assert_abs_diff_eq!(m, mass_oracle(&p(), &q), epsilon = 1e-12);
    }

    #[test]
    fn mass_matrix_is_symmetric_positive_definite(q1 in angle(), q2 in angle()) {
        let m = mass_matrix(&p(), &Vec2::new(q1, q2));
        prop_assert_eq!(m[(0, 1)], m[(1, 0)]);
        let (lo, _) = symmetric_eigenvalues(&m);
        prop_assert!(lo > 0.0);
    }

    #[test]
    fn coriolis_matches_lagrangian(q1 in angle(), q2 in angle(), w1 in rate(), w2 in rate()) {
        let q = Vec2::new(q1, q2);
        let qdot = Vec2::new(w1, w2);
        let c = coriolis_matrix(&p(), &q, &qdot) * qdot;
        assert_abs_diff_eq!(c, coriolis_force_oracle(&p(), &q, &qdot), epsilon = 1e-7);
    }

    #[test]
    fn mdot_minus_two_c_is_skew(q1 in angle(), q2 in angle(), w1 in rate(), w2 in rate()) {
        let q = Vec2::new(q1, q2);
        let qdot = Vec2::new(w1, w2);
        let h = 1e-6;
        let mdot = (mass_matrix(&p(), &(q + qdot * h)) - mass_matrix(&p(), &(q - qdot * h))) / (2.0 * h);
        let n = mdot - 2.0 * coriolis_matrix(&p(), &q, &qdot);
        assert_abs_diff_eq!(n + n.transpose(), Mat2::zeros(), epsilon = 1e-7);
    }

    #[test]
    fn gravity_is_potential_gradient(q1 in angle(), q2 in angle()) {
        let q = Vec2::new(q1, q2);
        assert_abs_diff_eq!(gravity_vector(&p(), &q), gravity_oracle(&p(), &q), epsilon = 1e-7);
    }

    #[test]
    fn jacobian_matches_finite_differences(q1 in angle(), q2 in angle()) {
        let q = Vec2::new(q1, q2);
        let h = 1e-6;
        let mut fd = Mat2::zeros();
        for k in 0..2 {
            let mut dq = Vec2::zeros();
            dq[k] = h;
            let col = (forward_kinematics(&p(), &(q + dq)) - forward_kinematics(&p(), &(q - dq))) / (2.0 * h);
            fd.set_column(k, &col);
        }
        assert_abs_diff_eq!(analytic_jacobian(&p(), &q), fd, epsilon = 1e-5);
    }

    #[test]
    fn jacobian_dot_matches_finite_differences(q1 in angle(), q2 in angle(), w1 in rate(), w2 in rate()) {
        let q = Vec2::new(q1, q2);
        let qdot = Vec2::new(w1, w2);
        let h = 1e-6;
        let fd = (analytic_jacobian(&p(), &(q + qdot * h)) - analytic_jacobian(&p(), &(q - qdot * h))) / (2.0 * h);
        assert_abs_diff_eq!(jacobian_dot(&p(), &q, &qdot), fd, epsilon = 1e-5);
    }

    #[test]
    fn cartesian_terms_reproduce_joint_dynamics(
        q1 in angle(), q2 in elbow(), w1 in rate(), w2 in rate(), t1 in -5.0..5.0f64, t2 in -5.0..5.0f64,
    ) {
        let params = p();
        let q = Vec2::new(q1, q2);
        let qdot = Vec2::new(w1, w2);
        let tau = Vec2::new(t1, t2);
        let qddot = joint_acceleration(&params, &q, &qdot, &tau);

        let j = analytic_jacobian(&params, &q);
        let xdot = j * qdot;
        let xddot = j * qddot + jacobian_dot(&params, &q, &qdot) * qdot;
        let terms = cartesian_dynamics_terms(&params, &q, &qdot).unwrap();
        let f = j.transpose().try_inverse().unwrap() * tau;
        let lhs = terms.mx * xddot + terms.cx * xdot + terms.gx;
        let scale = 1.0 + f.norm();
        prop_assert!((lhs - f).norm() < 1e-8 * scale, "residual {}", (lhs - f).norm());
    }

    #[test]
    fn task_space_inertia_is_symmetric_positive_definite(q1 in angle(), q2 in elbow()) {
        let terms = cartesian_dynamics_terms(&p(), &Vec2::new(q1, q2), &Vec2::zeros()).unwrap();
        assert_abs_diff_eq!(terms.mx, terms.mx.transpose(), epsilon = 1e-9 * terms.mx.norm());
        prop_assert!(symmetric_eigenvalues(&terms.mx).0 > 0.0);
    }

    #[test]
    fn ik_round_trips_inside_workspace(r in 0.12..1.09f64, phi in angle(), up in any::<bool>()) {
        let params = p();
        let x = Vec2::new(r * phi.cos(), r * phi.sin());
        let branch = if up { IkBranch::ElbowUp } else { IkBranch::ElbowDown };
        let q = inverse_kinematics(&params, &x, branch).unwrap();
        assert_abs_diff_eq!(forward_kinematics(&params, &q), x, epsilon = 1e-10);
        let on_branch = if up { q[1] <= 0.0 } else { q[1] >= 0.0 };
        prop_assert!(on_branch);
    }

    #[test]
    fn ik_rejects_points_outside_workspace(r in 1.1001..5.0f64, phi in angle()) {
        let x = Vec2::new(r * phi.cos(), r * phi.sin());
        prop_assert!(inverse_kinematics(&p(), &x, IkBranch::ElbowDown).is_err());
    }

    #[test]
    fn joint_acceleration_agrees_with_plant_without_task_loads(q1 in angle(), q2 in elbow(), w1 in rate(), w2 in rate()) {
        let params = p();
        let q = Vec2::new(q1, q2);
        let qdot = Vec2::new(w1, w2);
        let tau = Vec2::new(0.3, -0.2);
        let a = joint_acceleration(&params, &q, &qdot, &tau);
        let b = plant_acceleration(&params, &q, &qdot, &tau, &Vec2::zeros(), &Vec2::zeros()).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn ik_round_trip_on_a_grid_of_one_thousand_points_per_branch() {
    let params = p();
    for branch in [IkBranch::ElbowDown, IkBranch::ElbowUp] {
        let mut count = 0;
        for i in 0..25 {
            for k in 0..40 {
                let r = 0.11 + 0.98 * i as f64 / 24.0;
                let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / 40.0;
                let x = Vec2::new(r * phi.cos(), r * phi.sin());
                let q = inverse_kinematics(&params, &x, branch).unwrap();
                assert_abs_diff_eq!(forward_kinematics(&params, &q), x, epsilon = 1e-10);
                count += 1;
            }
        }
        assert_eq!(count, 1000);
    }
}

#[test]
fn singular_configurations_are_reported() {
    for q2 in [0.0, std::f64::consts::PI, 1e-8] {
        let err = jacobian_inverse(&p(), &Vec2::new(0.4, q2)).unwrap_err();
        assert!(matches!(err, impctl_core::Error::Singular { .. }), "{err}");
    }
}
