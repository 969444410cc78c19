//! Parametric Q-factor amplification of MEMS resonators.
//!
//! The crate simulates a resonator whose stiffness is modulated at twice its
//! drive frequency (the damped, forced Mathieu equation), measures the
//! resulting amplitude gain, and checks those measurements against Floquet
//! analysis and closed-form averaging predictions. A small beam finite-element
//! model turns axial forces from a comb drive into the stiffness modulation
//! depth that the resonator sees.
//!
//! Most quantities live in a normalized frame: natural frequency 1 and unit
//! static deflection under the drive.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beam;
pub mod cli;
pub mod config;
pub mod error;
pub mod integrator;
pub mod oracle;
pub mod report;
pub mod sweeps;
pub mod system;

pub use error::{Error, Result};
