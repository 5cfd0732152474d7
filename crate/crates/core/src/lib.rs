//! Driven generalized quantum Rayleigh-van der Pol oscillator.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod io;
pub mod liouvillian;
pub mod observables;
pub mod ode;
pub mod params;
pub mod perturbation;
pub mod spectrum;
pub mod stencil;
pub mod superop;
pub mod sweep;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, LadderOperators};
pub use liouvillian::{DriveModel, Frame};
pub use params::SystemParams;

pub type C64 = num_complex::Complex64;
