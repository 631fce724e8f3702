//! Charging dynamics of harmonically driven quantum battery packs.
//!
//! A pack of `N` identical two-level units is described by collective spin
//! operators in the Dicke basis and driven by
//! `H(t) = omega0 J_z + sum_i A_i cos(omega_i t + phi_i) J_i`.
//! The crate computes the charge saturation `eta(t)` by direct integration
//! ([`propagator`]), closed forms ([`analytic`]) and Floquet reconstruction
//! ([`floquet`]), and scans drive parameters ([`sweep`]).

pub mod analytic;
pub mod csvfmt;
pub mod drive;
pub mod error;
pub mod floquet;
pub mod linalg;
pub mod propagator;
pub mod spin;
pub mod sweep;

pub use drive::{DriveConfig, FourierComponents};
pub use error::{Error, Result};
pub use propagator::SaturationTrace;
pub use spin::{SpinOperators, StateVector};
