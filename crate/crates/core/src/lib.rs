//! Multiphase weakly nonlinear geometric optics for the semiclassical
//! nonlinear Schrödinger equation: resonant phase closure, profile dynamics,
//! a reference spectral solver and the experiments built on them.

pub mod divisors;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod lattice;
pub mod ode;
pub mod pipeline;
pub mod profile;
pub mod report;
pub mod scenario;
pub mod spectral;
pub mod wiener;

pub use error::{Error, Result};
pub use grid::C64;
