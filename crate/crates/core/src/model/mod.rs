//! Problem data, admissibility checks and discrete function spaces.

mod grid;
mod grid_function;
pub mod kernel;
pub mod nonlinearity;
pub mod norms;
mod problem;
mod profile;

pub use grid::Grid;
pub use grid_function::GridFunction;
pub use kernel::{Kernel, KernelProfile};
pub use nonlinearity::{Beta, Nonlinearity, Pi};
pub use norms::{
    grad_sq, inner_h, inner_vstar, integral, norm_h, norm_linf, norm_v, norm_vstar, riesz_v,
    SpaceNorm,
};
pub use problem::{validate, warnings, Condition, ProblemData, Violation};
pub use profile::{Profile, Source, TimeProfile};
