//! Steady-state covariance and mirror–mirror entanglement of two
//! optomechanical cavities with intracavity parametric amplifiers,
//! squeezed-vacuum injection, photon hopping and phonon tunneling.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod grid;
pub mod model;
pub mod params;
pub mod plot;
pub mod steady_state;
pub mod sweep;
pub mod symplectic;
pub mod validate;

pub use error::{Error, Result};
