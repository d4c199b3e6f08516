//! 1D elastic waves in a periodic network of time-modulated spring-mass
//! interfaces.
//!
//! The crate provides:
//! - problem configuration and non-dimensionalisation ([`config`]),
//! - unit-cell corrector problems and time-dependent effective
//!   coefficients ([`cell`]),
//! - a full-field reference solver for the microstructured medium
//!   ([`micro`]),
//! - time steppers for the homogenised models ([`effective`]),
//! - Floquet dispersion analysis of the time-periodic effective model
//!   ([`dispersion`]),
//! - energy/error/reciprocity diagnostics ([`diagnostics`]),
//! - experiment presets mirroring the validation configurations
//!   ([`presets`]).

pub mod cell;
pub mod config;
pub mod diagnostics;
pub mod dispersion;
pub mod effective;
pub mod history;
pub mod micro;
pub mod output;
pub mod piecewise;
pub mod presets;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cell problem is not solvable: {0}")]
    Solvability(String),
    #[error("CFL condition violated: wave speed {speed} m/s needs dt <= {max_dt} s, got {dt} s")]
    Cfl { speed: f64, max_dt: f64, dt: f64 },
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
