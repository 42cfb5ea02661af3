//! Flight-dynamics laboratory for a single-rotor tail-sitter UAV.
//!
//! The crate covers the rigid-rotor flapping model and its coupling to a
//! fuselage with non-symmetric inertia, swash-plate mixing and a decoupling
//! rate controller, least-squares identification of the linear rate model
//! from flight logs, a blade-element/momentum propulsion model, a fixed-wing
//! drag polar and a battery discharge model for full missions. The
//! [`scenario`] module ties everything together behind a batch CLI.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aero;
pub mod body;
pub mod config;
pub mod control;
pub mod energy;
mod error;
mod linalg;
pub mod log;
mod ode;
pub mod propulsion;
pub mod rotor;
pub mod scenario;
pub mod sysid;

pub use error::{Error, Result};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;

/// Sea-level ISA air density, kg/m³.
pub const RHO_SEA_LEVEL: f64 = 1.225;
