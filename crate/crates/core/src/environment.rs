//! Reference and environment trajectories, the stiffness contact model and
//! the task-space disturbance.

use crate::linalg::{Mat2, Vec2};

/// Per-axis cosine trajectory `p(t) = offset − amplitude·cos(ω t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub offset: Vec2,
    pub amplitude: Vec2,
    /// Angular frequency per axis (rad/s).
    pub frequency: Vec2,
}

/// Position, velocity and acceleration of a trajectory at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub pos: Vec2,
    pub vel: Vec2,
    pub acc: Vec2,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self::reference_default()
    }
}

impl TrajectorySpec {
    pub fn reference_default() -> Self {
        Self {
            offset: Vec2::new(0.1, 0.35),
            amplitude: Vec2::new(0.1, 0.1),
            frequency: Vec2::new(2.0, 2.0),
        }
    }

    pub fn environment_default() -> Self {
        Self {
            offset: Vec2::new(0.05, 0.3),
            ..Self::reference_default()
        }
    }

    /// Same spec with zero amplitude, i.e. parked at `offset`.
    pub fn stationary(self) -> Self {
        Self {
            amplitude: Vec2::zeros(),
            ..self
        }
    }

    pub fn is_valid(&self) -> bool {
        self.frequency.iter().all(|w| w.is_finite() && *w > 0.0)
            && self.offset.iter().chain(self.amplitude.iter()).all(|v| v.is_finite())
    }

    pub fn evaluate(&self, t: f64) -> TrajectoryPoint {
        let mut point = TrajectoryPoint {
            pos: Vec2::zeros(),
            vel: Vec2::zeros(),
            acc: Vec2::zeros(),
        };
        for i in 0..2 {
            let w = self.frequency[i];
            let a = self.amplitude[i];
            let (s, c) = (libm::sin(w * t), libm::cos(w * t));
            point.pos[i] = self.offset[i] - a * c;
            point.vel[i] = a * w * s;
            point.acc[i] = a * w * w * c;
        }
        point
    }
}

pub fn eval_reference(spec: &TrajectorySpec, t: f64) -> TrajectoryPoint {
    spec.evaluate(t)
}

pub fn eval_environment(spec: &TrajectorySpec, t: f64) -> Vec2 {
    spec.evaluate(t).pos
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ContactMode {
    /// Spring acts in both directions, `F_e = K_e (x_e − x)`.
    #[default]
    AlwaysOn,
    /// Spring only pushes back on penetration (`x_i > x_e,i`).
    Unilateral,
}

/// Stiffness-only environment. The environment occupies `x_i > x_e,i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentModel {
    /// Diagonal stiffness (N/m); zero disables contact.
    pub stiffness: Mat2,
    pub trajectory: TrajectorySpec,
    pub mode: ContactMode,
}

impl Default for EnvironmentModel {
    fn default() -> Self {
        Self {
            stiffness: crate::linalg::diag(50.0, 50.0),
            trajectory: TrajectorySpec::environment_default(),
            mode: ContactMode::AlwaysOn,
        }
    }
}

impl EnvironmentModel {
    pub fn free_space() -> Self {
        Self {
            stiffness: Mat2::zeros(),
            ..Self::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        let k = &self.stiffness;
        k[(0, 1)] == 0.0
            && k[(1, 0)] == 0.0
            && k[(0, 0)] >= 0.0
            && k[(1, 1)] >= 0.0
            && k[(0, 0)].is_finite()
            && k[(1, 1)].is_finite()
            && self.trajectory.is_valid()
    }

    pub fn surface(&self, t: f64) -> Vec2 {
        eval_environment(&self.trajectory, t)
    }

    pub fn contact_force(&self, x: &Vec2, t: f64) -> Vec2 {
        contact_force(self, x, t)
    }
}

pub fn contact_force(env: &EnvironmentModel, x: &Vec2, t: f64) -> Vec2 {
    let xe = env.surface(t);
    let mut f = Vec2::zeros();
    for i in 0..2 {
        let penetrating = x[i] > xe[i];
        if env.mode == ContactMode::AlwaysOn || penetrating {
            f[i] = env.stiffness[(i, i)] * (xe[i] - x[i]);
        }
    }
    f
}

/// Sinusoidal task-space disturbance `d(t) = amplitude·sin(ω t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSpec {
    pub amplitude: Vec2,
    pub frequency: f64,
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        Self {
            amplitude: Vec2::new(0.5, 0.5),
            frequency: 1.0,
        }
    }
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self {
            amplitude: Vec2::zeros(),
            frequency: 1.0,
        }
    }

    pub fn evaluate(&self, t: f64) -> Vec2 {
        self.amplitude * libm::sin(self.frequency * t)
    }
}

pub fn disturbance(spec: &DisturbanceSpec, t: f64) -> Vec2 {
    spec.evaluate(t)
}
