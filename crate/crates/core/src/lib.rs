//! Implicit time stepping for a nonlocal phase-field system with inertia and a
//! logarithmic temperature law, with estimate diagnostics and convergence studies.

pub mod banded;
pub mod cli;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod interpolants;
pub mod model;
pub mod nonlocal;
pub mod num;
pub mod scalar;
pub mod stepper;

pub use error::{Error, Result};
pub use num::Real;

pub type Grid64 = model::Grid<f64>;
pub type GridFunction64 = model::GridFunction<f64>;
pub type ProblemData64 = model::ProblemData<f64>;
pub type Trajectory64 = stepper::Trajectory<f64>;
