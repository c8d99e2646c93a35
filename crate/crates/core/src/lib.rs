//! Finite-volume solver for nonlocal reaction-diffusion epidemic systems.
//!
//! Three species (susceptible, infected, recovered) diffuse with
//! coefficients that depend on each species' total mass and react through a
//! standard-incidence term. Time stepping is backward Euler with two-point
//! fluxes on admissible meshes and zero-flux boundaries.
//!
//! - [`mesh`]: admissible meshes and cell fields
//! - [`linalg`]: sparse matrices and preconditioned conjugate gradient
//! - [`model`]: incidence, treatment, diffusion laws
//! - [`solver`]: the implicit step, the run loop and its monitors
//! - [`analysis`]: norms, equilibria, stability, Turing scans, refinement studies

// `!(x > 0.0)` is used on purpose so that NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use mesh::{Field, Mesh};
pub use model::{DiffusionLaw, ModelParams, Variant};
pub use solver::{Problem, SolverConfig, State, StepReport};
