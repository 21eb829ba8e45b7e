//! Tight-binding reduction of the Gross–Pitaevskii equation with a
//! piecewise-constant periodic potential.
//!
//! The crate computes the band structure of `L = -∂²ₓ + V(x)`, Wannier
//! functions and the couplings of the discrete nonlinear Schrödinger (DNLS)
//! lattice, integrates both the lattice model and the continuum equation,
//! and measures how well the lattice approximant tracks the continuum field.

pub mod dnls;
pub mod error;
pub mod fit;
pub mod floquet;
pub mod gp;
pub mod grid;
pub mod potential;
pub mod spectral;
pub mod validate;
pub mod wannier;

pub use error::{Error, Result};
pub use grid::{CellGrid, PERIOD};
pub use potential::{small_parameter, PiecewisePotential, Segment, WellFamily};
