use thiserror::Error;

use crate::linalg::SolveReport;
use crate::solver::StepReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error(
        "conjugate gradient did not converge after {} iterations (residual {:.3e})",
        .0.iterations,
        .0.residual
    )]
    LinearSolver(SolveReport),

    #[error(
        "fixed-point iteration did not converge after {} iterations (residual {:.3e})",
        .0.picard_iterations,
        .0.picard_residual
    )]
    Picard(Box<StepReport>),

    #[error("diffusion coefficient {value} for species {species} is not positive")]
    DegenerateDiffusion { species: usize, value: f64 },

    #[error("step {step} failed")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no real equilibria: discriminant {0} is negative")]
    NoRealEquilibria(f64),

    #[error("total population u+v+w = {0} must be positive")]
    DegeneratePoint(f64),

    #[error("shift {0} is not a multiple of the lattice spacing")]
    OffLattice(String),

    /// Raised by a run observer, e.g. when writing output fails.
    #[error("observer: {0}")]
    Observer(String),

    #[error("convergence study needs at least {needed} levels, got {got}")]
    InsufficientLevels { needed: usize, got: usize },
}
