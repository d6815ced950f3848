//! Fourier spectral collocation with a two-stage exponential Runge-Kutta
//! integrator for the Cahn-Hilliard equation on periodic boxes.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`]: lattices, grid functions, the DFT pair, inner products and norms
//! - [`operators`]: Fourier multipliers, `L_kappa`, `N_kappa`, diagnostic operators
//! - [`phi`]: scalar phi- and S-functions
//! - [`energy`]: double-well potential, discrete energy, norm bounds
//! - [`stepper`]: the integrator with adaptive stabilization
//! - [`harness`]: simulations, convergence studies, stability audits
//! - [`config`], [`initial`], [`io`]: run configuration and on-disk formats

pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod harness;
pub mod initial;
pub mod io;
pub mod operators;
pub mod phi;
pub mod random;
pub mod selftest;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, SpectralField};
pub use operators::OperatorContext;
pub use stepper::{Erk2Stepper, KappaPolicy, StepperConfig};
