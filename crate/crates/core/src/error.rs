use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular configuration: |det J| = {det:e} is not above {tolerance:e}")]
    Singular { det: f64, tolerance: f64 },

    #[error("point ({x}, {y}) lies outside the reachable workspace")]
    Unreachable { x: f64, y: f64 },

    #[error("non-finite value in {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },

    #[error("joint speed {speed} rad/s exceeds the divergence limit at t = {t}")]
    Diverged { speed: f64, t: f64 },

    #[error("run has not settled: end-effector speed {speed} m/s exceeds {tolerance} m/s")]
    NotSettled { speed: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    Invalid(String),
}
