//! Identifiability certification and phase-transition analysis for
//! covariance-based activity detection with random user signatures.
//!
//! The crate is organised bottom-up:
//!
//! - [`signatures`] draws Gaussian, Rademacher and sub-sampled Hadamard
//!   signature matrices from seeded streams;
//! - [`lifting`] builds the lifted covariance constraints and the
//!   semi-random surrogate;
//! - [`certifier`] decides whether the constraint null space meets the
//!   feasible-direction cone only at zero;
//! - [`theory`] and [`statdim`] compute the asymptotic boundary and check
//!   it against Monte Carlo statistical dimensions;
//! - [`experiments`] runs phase-diagram sweeps and writes CSV output.

pub mod certifier;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod lifting;
pub mod linalg;
pub mod rng;
pub mod signatures;
pub mod statdim;
pub mod theory;

pub use error::{Error, Result};
