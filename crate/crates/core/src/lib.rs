//! Simulation and closed-form analysis of steady-state squeezing in the
//! quantum Rabi and Dicke models.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: Fock x spin spaces, operators, kets and density matrices.
//! * [`models`]: system parameters, Hamiltonians and Lindblad generators.
//! * [`dynamics`]: adaptive Dormand-Prince integration of the Schrodinger,
//!   master, first-order mean-field, second-order cumulant and quadrature
//!   equations, plus coupling ramps.
//! * [`analytics`]: closed-form squeezing, orbit and steady-state results.
//! * [`observables`]: quadrature statistics, Husimi grids, ellipse fits.
//! * [`cli`]: scenario files, presets, CSV/JSON output and comparisons.

pub mod analytics;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod observables;
pub mod quantum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
