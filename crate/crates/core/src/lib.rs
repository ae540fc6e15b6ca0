//! Delay-estimation impedance control of a planar two-link arm.
//!
//! The crate is `no_std` (with `alloc`) and purely computational:
//!
//! - [`dynamics`]: joint-space model, kinematics and task-space terms
//! - [`environment`]: reference/environment trajectories, contact force, disturbance
//! - [`controller`]: the delay-estimation impedance law with its super-twisting
//!   robustifier, and the baseline without it
//! - [`sim`]: fixed-step closed-loop runs producing [`sim::SimRecord`] logs
//! - [`analysis`]: diagnostics and summaries over those logs

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod controller;
pub mod dynamics;
pub mod environment;
mod error;
pub mod integrate;
pub mod linalg;
pub mod sim;

pub use crate::error::{Error, Result};
pub use crate::linalg::{Mat2, Vec2};
