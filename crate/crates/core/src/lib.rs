//! Bessel-Kingman and Laguerre hypergroups, the exact transition laws of the
//! Bessel process BES(δ) and the quantum Bessel process QBES(δ), exact path
//! samplers, and numerical certificates for the identities tying them together.

pub mod error;
pub mod hypergroup;
pub mod kernels;
pub mod linalg;
pub mod quad;
pub mod sampling;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
