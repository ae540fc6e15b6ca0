//! Delay-estimation impedance controller with a super-twisting robustifier.
//!
//! The control force is
//!
//! ```text
//! F_u = M̄ (a + Δa) + F_u(t − h) − M̄ ẍ(t − h)
//! a   = ẍ_d + Γ₁ ė + ė_f + Γ₂ α,          α = ė + Γ₁ e + e_f
//! Δa  = λ₁ s / ‖s‖^½ − y,                  ẏ = −λ₂ s / ‖s‖
//! ```
//!
//! where `e = x_d − x`, `ė_f = −Γ₂ e_f + M_m⁻¹ F_e` and `s` integrates the
//! impedance error `α̇ + Γ₂ α`. The baseline controller is the same pipeline
//! with `Δa ≡ 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::environment::TrajectoryPoint;
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::linalg::{diag, is_finite, is_positive_diagonal, scaled_direction, Mat2, Vec2};

/// Below this surface norm the super-twisting direction terms are zero.
pub const S_EPS: f64 = 1e-9;

/// Desired task-space impedance `M_m ë + D_m ė + K_m e = −F_e` in error form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceTarget {
    pub inertia: Mat2,
    pub damping: Mat2,
    pub stiffness: Mat2,
}

impl Default for ImpedanceTarget {
    fn default() -> Self {
        Self {
            inertia: Mat2::identity(),
            damping: diag(35.0, 35.0),
            stiffness: diag(60.0, 60.0),
        }
    }
}

impl ImpedanceTarget {
    /// Target matching the default GFTE gains (`K_m = Γ₂Γ₁`, `D_m = Γ₁ + Γ₂`).
    pub fn consistent() -> Self {
        let gains = GfteGains::default();
        Self {
            inertia: Mat2::identity(),
            damping: gains.implied_damping_gain(),
            stiffness: gains.implied_stiffness_gain(),
        }
    }

    fn inertia_inverse(&self) -> Mat2 {
        diagonal_inverse(&self.inertia)
    }

    /// `K_p = M_m⁻¹ K_m`
    pub fn stiffness_gain(&self) -> Mat2 {
        self.inertia_inverse() * self.stiffness
    }

    /// `K_d = M_m⁻¹ D_m`
    pub fn damping_gain(&self) -> Mat2 {
        self.inertia_inverse() * self.damping
    }

    pub fn is_valid(&self) -> bool {
        is_positive_diagonal(&self.inertia)
            && is_positive_diagonal(&self.damping)
            && is_positive_diagonal(&self.stiffness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfteGains {
    pub gamma1: Mat2,
    pub gamma2: Mat2,
}

impl Default for GfteGains {
    fn default() -> Self {
        Self {
            gamma1: diag(10.0, 10.0),
            gamma2: diag(10.0, 10.0),
        }
    }
}

impl GfteGains {
    pub fn implied_stiffness_gain(&self) -> Mat2 {
        self.gamma2 * self.gamma1
    }

    pub fn implied_damping_gain(&self) -> Mat2 {
        self.gamma1 + self.gamma2
    }

    /// Largest entrywise mismatch between the gains implied by `Γ₁, Γ₂` and
    /// the ones implied by `target`. Zero means the two error forms agree.
    pub fn consistency_gap(&self, target: &ImpedanceTarget) -> f64 {
        let dk = self.implied_stiffness_gain() - target.stiffness_gain();
        let dd = self.implied_damping_gain() - target.damping_gain();
        dk.amax().max(dd.amax())
    }

    pub fn is_valid(&self) -> bool {
        is_positive_diagonal(&self.gamma1) && is_positive_diagonal(&self.gamma2)
    }
}

/// Coefficients of the state-dependent super-twisting gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaGains {
    pub gamma01: f64,
    pub gamma02: f64,
    pub gamma11: f64,
    pub gamma12: f64,
}

impl Default for StaGains {
    fn default() -> Self {
        Self {
            gamma01: 15.0,
            gamma02: 0.1,
            gamma11: 0.03,
            gamma12: 0.03,
        }
    }
}

impl StaGains {
    pub fn gamma0_star(&self) -> f64 {
        self.gamma01 + self.gamma02
    }

    pub fn gamma1_star(&self) -> f64 {
        self.gamma11 + self.gamma12
    }

    pub fn is_valid(&self) -> bool {
        [self.gamma01, self.gamma02, self.gamma11, self.gamma12]
            .iter()
            .all(|g| g.is_finite() && *g > 0.0)
    }
}

/// Where the delayed acceleration sample comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AccelSource {
    /// Exact simulated acceleration.
    #[default]
    TrueState,
    /// First-order low-pass of the backward difference of measured velocity,
    /// with the given pole (rad/s).
    FilteredDifference { pole: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdeConfig {
    /// Constant design inertia `M̄`.
    pub inertia: Mat2,
    /// Artificial delay `h` (s).
    pub delay: f64,
    pub accel_source: AccelSource,
}

impl Default for TdeConfig {
    fn default() -> Self {
        Self {
            inertia: diag(0.01, 0.01),
            delay: 0.005,
            accel_source: AccelSource::TrueState,
        }
    }
}

/// Number of simulation steps in `delay`, if it is a positive integer multiple of `dt`.
pub fn delay_steps(delay: f64, dt: f64) -> Result<usize> {
    let ratio = delay / dt;
    let steps = libm::round(ratio);
    if !(ratio.is_finite() && steps >= 1.0 && (ratio - steps).abs() <= 1e-9 * ratio.max(1.0)) {
        return Err(Error::Invalid(format!(
            "delay {delay} s is not a positive integer multiple of the step {dt} s"
        )));
    }
    Ok(steps as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerConfig {
    pub target: ImpedanceTarget,
    pub gfte: GfteGains,
    pub sta: StaGains,
    pub tde: TdeConfig,
}

/// Outcome of validating a [`ControllerConfig`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ControllerConfig {
    pub fn check(&self, dt: f64) -> ConfigReport {
        let mut report = ConfigReport::default();
        if !self.target.is_valid() {
            report
                .errors
                .push("impedance target matrices must be diagonal with positive entries".into());
        }
        if !self.gfte.is_valid() {
            report
                .errors
                .push("gamma1 and gamma2 must be diagonal with positive entries".into());
        }
        if !self.sta.is_valid() {
            report.errors.push("super-twisting coefficients must be positive".into());
        }
        if !is_positive_diagonal(&self.tde.inertia) {
            report
                .errors
                .push("design inertia must be diagonal with positive entries".into());
        }
        if !(self.tde.delay.is_finite() && self.tde.delay > 0.0) {
            report.errors.push(format!("delay must be positive, got {}", self.tde.delay));
        } else if let Err(e) = delay_steps(self.tde.delay, dt) {
            report.errors.push(format!("{e}"));
        }
        if let AccelSource::FilteredDifference { pole } = self.tde.accel_source {
            if !(pole.is_finite() && pole > 0.0) {
                report.errors.push(format!("filter pole must be positive, got {pole}"));
            }
        }
        if self.target.is_valid() && self.gfte.is_valid() {
            let gap = self.gfte.consistency_gap(&self.target);
            if gap > 1e-9 {
                report.warnings.push(format!(
                    "gamma gains imply K_p = {}, K_d = {} but the impedance target gives K_p = {}, K_d = {} (gap {gap})",
                    diag_str(&self.gfte.implied_stiffness_gain()),
                    diag_str(&self.gfte.implied_damping_gain()),
                    diag_str(&self.target.stiffness_gain()),
                    diag_str(&self.target.damping_gain()),
                ));
            }
        }
        if self.sta.is_valid() && self.sta.gamma0_star() <= self.sta.gamma1_star() {
            report.warnings.push(format!(
                "gamma0* = {} should exceed gamma1* = {}",
                self.sta.gamma0_star(),
                self.sta.gamma1_star()
            ));
        }
        report
    }
}

fn diag_str(m: &Mat2) -> String {
    format!("diag({}, {})", m[(0, 0)], m[(1, 1)])
}

fn diagonal_inverse(m: &Mat2) -> Mat2 {
    diag(1.0 / m[(0, 0)], 1.0 / m[(1, 1)])
}

/// Generalized filtered tracking error `α = ė + Γ₁ e + e_f`.
pub fn gfte(e: &Vec2, edot: &Vec2, e_f: &Vec2, gamma1: &Mat2) -> Vec2 {
    edot + gamma1 * e + e_f
}

/// `ė_f = −Γ₂ e_f + M_m⁻¹ F_e`
pub fn ef_rate(e_f: &Vec2, f_e: &Vec2, target_inertia: &Mat2, gamma2: &Mat2) -> Vec2 {
    -(gamma2 * e_f) + diagonal_inverse(target_inertia) * f_e
}

/// Advance the force filter state by `dt` with `F_e` held.
pub fn step_ef(e_f: &Vec2, f_e: &Vec2, target_inertia: &Mat2, gamma2: &Mat2, dt: f64) -> Vec2 {
    rk4_step(*e_f, dt, |_, v| ef_rate(&v, f_e, target_inertia, gamma2))
}

/// Impedance error `η = ë + K_d ė + K_p e + M_m⁻¹ F_e`.
pub fn impedance_error(
    e: &Vec2,
    edot: &Vec2,
    eddot: &Vec2,
    f_e: &Vec2,
    target: &ImpedanceTarget,
) -> Vec2 {
    eddot + target.damping_gain() * edot + target.stiffness_gain() * e
        + target.inertia_inverse() * f_e
}

/// Impedance error in GFTE form, `α̇ + Γ₂ α` with `α̇ = ë + Γ₁ ė + ė_f`.
/// This is the rate of the switching surface.
pub fn surface_rate(eddot: &Vec2, edot: &Vec2, ef_rate: &Vec2, alpha: &Vec2, gains: &GfteGains) -> Vec2 {
    eddot + gains.gamma1 * edot + ef_rate + gains.gamma2 * alpha
}

/// `s(t + dt) = s(t) + η dt` for `η` held over the step.
pub fn step_surface(s: &Vec2, eta: &Vec2, dt: f64) -> Vec2 {
    s + eta * dt
}

/// `Θ = [eᵀ ėᵀ]ᵀ` norm.
pub fn theta_norm(e: &Vec2, edot: &Vec2) -> f64 {
    libm::sqrt(e.norm_squared() + edot.norm_squared())
}

/// `(λ₁, λ₂) = 2(γ₀ᵢ + γ₁ᵢ ‖Θ‖)`.
pub fn sta_gains(e: &Vec2, edot: &Vec2, gains: &StaGains) -> (f64, f64) {
    let theta = theta_norm(e, edot);
    (
        2.0 * (gains.gamma01 + gains.gamma11 * theta),
        2.0 * (gains.gamma02 + gains.gamma12 * theta),
    )
}

/// Super-twisting output `Δa = λ₁ s/‖s‖^½ − y`.
pub fn sta_output(s: &Vec2, y: &Vec2, lambda1: f64) -> Vec2 {
    scaled_direction(s, 0.5, S_EPS) * lambda1 - y
}

/// `ẏ = −λ₂ s/‖s‖`
pub fn sta_integrator_rate(s: &Vec2, lambda2: f64) -> Vec2 {
    -scaled_direction(s, 1.0, S_EPS) * lambda2
}

/// One super-twisting step: returns `Δa` at the current surface and the
/// integrator state after `dt`, with the surface moving at `s_rate` during
/// the step.
pub fn sta_step(s: &Vec2, s_rate: &Vec2, y: &Vec2, lambda1: f64, lambda2: f64, dt: f64) -> (Vec2, Vec2) {
    let delta_a = sta_output(s, y, lambda1);
    let y_next = rk4_step(*y, dt, |tau, _| sta_integrator_rate(&(s + s_rate * tau), lambda2));
    (delta_a, y_next)
}

/// Fixed-depth ring of past `(F_u, ẍ)` samples. Reads before the ring has
/// filled return zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBuffer {
    slots: Vec<(Vec2, Vec2)>,
    cursor: usize,
}

impl DelayBuffer {
    pub fn new(depth: usize) -> Self {
        assert!(depth > 0, "delay buffer needs at least one slot");
        Self {
            slots: vec![(Vec2::zeros(), Vec2::zeros()); depth],
            cursor: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.slots.len()
    }

    /// `(F_u(t − h), ẍ(t − h))`
    pub fn delayed(&self) -> (Vec2, Vec2) {
        self.slots[self.cursor]
    }

    /// Store the current sample, overwriting the one that is now `h + dt` old.
    pub fn push(&mut self, f_u: Vec2, xddot: Vec2) {
        self.slots[self.cursor] = (f_u, xddot);
        self.cursor = (self.cursor + 1) % self.slots.len();
    }
}

/// `N̂ = F_u(t − h) − M̄ ẍ(t − h)`
pub fn tde_estimate(buffer: &DelayBuffer, design_inertia: &Mat2) -> Vec2 {
    let (f_u, xddot) = buffer.delayed();
    f_u - design_inertia * xddot
}

/// `a = ẍ_d + Γ₁ ė + ė_f + Γ₂ α`
pub fn auxiliary_control(xddot_d: &Vec2, edot: &Vec2, ef_rate: &Vec2, alpha: &Vec2, gains: &GfteGains) -> Vec2 {
    xddot_d + gains.gamma1 * edot + ef_rate + gains.gamma2 * alpha
}

/// `F_u = M̄ (a + Δa) + F_u(t − h) − M̄ ẍ(t − h)`
pub fn control_force(a: &Vec2, delta_a: &Vec2, buffer: &DelayBuffer, design_inertia: &Mat2) -> Vec2 {
    design_inertia * (a + delta_a) + tde_estimate(buffer, design_inertia)
}

/// Baseline delay-estimation impedance law: [`control_force`] without the
/// robustifying term.
pub fn baseline_control_force(a: &Vec2, buffer: &DelayBuffer, design_inertia: &Mat2) -> Vec2 {
    control_force(a, &Vec2::zeros(), buffer, design_inertia)
}

/// `τ = J_aᵀ F_u`
pub fn joint_torque(f_u: &Vec2, jacobian: &Mat2) -> Vec2 {
    jacobian.transpose() * f_u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ControllerKind {
    /// Delay estimation plus super-twisting robustifier.
    Proposed,
    /// Delay estimation only.
    Baseline,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 2] = [ControllerKind::Proposed, ControllerKind::Baseline];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Proposed => "proposed",
            ControllerKind::Baseline => "baseline",
        }
    }
}

/// Low-pass filtered backward difference of velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelFilter {
    pole: f64,
    prev_xdot: Option<Vec2>,
    estimate: Vec2,
}

impl AccelFilter {
    pub fn new(pole: f64) -> Self {
        Self {
            pole,
            prev_xdot: None,
            estimate: Vec2::zeros(),
        }
    }

    pub fn update(&mut self, xdot: &Vec2, dt: f64) -> Vec2 {
        if let Some(prev) = self.prev_xdot {
            let raw = (xdot - prev) / dt;
            let blend = self.pole * dt / (1.0 + self.pole * dt);
            self.estimate += (raw - self.estimate) * blend;
        }
        self.prev_xdot = Some(*xdot);
        self.estimate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub e_f: Vec2,
    pub y: Vec2,
    pub s: Vec2,
    pub buffer: DelayBuffer,
    accel_filter: Option<AccelFilter>,
}

impl ControllerState {
    /// Zeroed internals with an empty delay buffer.
    pub fn new(config: &ControllerConfig, dt: f64) -> Result<Self> {
        let depth = delay_steps(config.tde.delay, dt)?;
        let accel_filter = match config.tde.accel_source {
            AccelSource::TrueState => None,
            AccelSource::FilteredDifference { pole } => Some(AccelFilter::new(pole)),
        };
        Ok(Self {
            e_f: Vec2::zeros(),
            y: Vec2::zeros(),
            s: Vec2::zeros(),
            buffer: DelayBuffer::new(depth),
            accel_filter,
        })
    }
}

/// What the controller sees at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub x: Vec2,
    pub xdot: Vec2,
    pub jacobian: Mat2,
    pub f_e: Vec2,
}

/// Everything the controller computed at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub reference: TrajectoryPoint,
    pub e: Vec2,
    pub edot: Vec2,
    pub e_f: Vec2,
    pub ef_rate: Vec2,
    pub alpha: Vec2,
    pub s: Vec2,
    pub a: Vec2,
    pub delta_a: Vec2,
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_hat: Vec2,
    pub f_u: Vec2,
    pub tau: Vec2,
}

/// A controller instance: configuration plus mutable internal state.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: ControllerKind,
    config: ControllerConfig,
    state: ControllerState,
    dt: f64,
}

impl Controller {
    pub fn new(kind: ControllerKind, config: ControllerConfig, dt: f64) -> Result<Self> {
        let report = config.check(dt);
        if let Some(first) = report.errors.first() {
            return Err(Error::Invalid(first.clone()));
        }
        Ok(Self {
            kind,
            state: ControllerState::new(&config, dt)?,
            config,
            dt,
        })
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Control law at the current sample. Does not change internal state.
    pub fn compute(&self, reference: &TrajectoryPoint, m: &Measurement) -> ControlOutput {
        let cfg = &self.config;
        let st = &self.state;
        let e = reference.pos - m.x;
        let edot = reference.vel - m.xdot;
        let alpha = gfte(&e, &edot, &st.e_f, &cfg.gfte.gamma1);
        let ef_rate = ef_rate(&st.e_f, &m.f_e, &cfg.target.inertia, &cfg.gfte.gamma2);
        let a = auxiliary_control(&reference.acc, &edot, &ef_rate, &alpha, &cfg.gfte);
        let (lambda1, lambda2) = sta_gains(&e, &edot, &cfg.sta);
        let delta_a = match self.kind {
            ControllerKind::Proposed => sta_output(&st.s, &st.y, lambda1),
            ControllerKind::Baseline => Vec2::zeros(),
        };
        let n_hat = tde_estimate(&st.buffer, &cfg.tde.inertia);
        let f_u = control_force(&a, &delta_a, &st.buffer, &cfg.tde.inertia);
        ControlOutput {
            reference: *reference,
            e,
            edot,
            e_f: st.e_f,
            ef_rate,
            alpha,
            s: st.s,
            a,
            delta_a,
            lambda1,
            lambda2,
            n_hat,
            f_u,
            tau: joint_torque(&f_u, &m.jacobian),
        }
    }

    /// Commit one sample: record `(F_u, ẍ)` for delayed estimation and move
    /// `e_f`, `s` and `y` forward by one step. `xddot_true` is used only with
    /// [`AccelSource::TrueState`]. Returns the surface rate used over the step.
    pub fn advance(&mut self, out: &ControlOutput, m: &Measurement, xddot_true: &Vec2) -> Vec2 {
        let dt = self.dt;
        let xddot = match self.state.accel_filter.as_mut() {
            None => *xddot_true,
            Some(filter) => filter.update(&m.xdot, dt),
        };
        let eddot = out.reference.acc - xddot;
        let eta = surface_rate(&eddot, &out.edot, &out.ef_rate, &out.alpha, &self.config.gfte);
        self.state.buffer.push(out.f_u, xddot);

        let cfg = &self.config;
        let robust = self.kind == ControllerKind::Proposed;
        let lambda2 = out.lambda2;
        let f_e = m.f_e;
        let st = &mut self.state;
        let packed = nalgebra::Vector6::new(st.e_f[0], st.e_f[1], st.s[0], st.s[1], st.y[0], st.y[1]);
        let next = rk4_step(packed, dt, |_, v| {
            let e_f = Vec2::new(v[0], v[1]);
            let s = Vec2::new(v[2], v[3]);
            let def = ef_rate(&e_f, &f_e, &cfg.target.inertia, &cfg.gfte.gamma2);
            let dy = if robust {
                sta_integrator_rate(&s, lambda2)
            } else {
                Vec2::zeros()
            };
            nalgebra::Vector6::new(def[0], def[1], eta[0], eta[1], dy[0], dy[1])
        });
        st.e_f = Vec2::new(next[0], next[1]);
        // The surface rate is constant over the step, so integrate it exactly.
        st.s = step_surface(&st.s, &eta, dt);
        st.y = Vec2::new(next[4], next[5]);
        eta
    }

    pub fn state_is_finite(&self) -> bool {
        is_finite(&self.state.e_f) && is_finite(&self.state.s) && is_finite(&self.state.y)
    }
}
