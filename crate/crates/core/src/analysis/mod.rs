//! Discrete norms, SARS equilibria and their linear stability, Turing
//! detection, and refinement studies.

mod convergence;
mod eigen;
mod sars;
mod turing;

pub use convergence::{
    convergence_study, self_convergence, ConstantState, ConvergenceRow, ConvergenceTable, CosineMode, Manufactured,
    StudySetup,
};
pub use eigen::{cubic_roots, quadratic_roots};
pub use sars::{jacobian, sars_equilibria, stability, Equilibria, StabilityReport};
pub use turing::{default_k2_grid, printed_turing_polynomial, turing_scan, TuringReport};

use crate::error::Result;
use crate::mesh::{Field, Mesh};

/// `sqrt(sum_K m(K) u_K^2)`
pub fn l2_norm(mesh: &Mesh, f: &Field) -> Result<f64> {
    mesh.check_field(f)?;
    Ok(mesh.cells().iter().zip(f.values()).map(|(c, u)| c.measure * u * u).sum::<f64>().sqrt())
}

/// `sqrt(sum_sigma tau_KL (u_L - u_K)^2)`, one term per unordered interface.
pub fn h1_seminorm(mesh: &Mesh, f: &Field) -> Result<f64> {
    mesh.check_field(f)?;
    let u = f.values();
    Ok(mesh
        .interfaces()
        .iter()
        .map(|s| {
            let d = u[s.cells.1] - u[s.cells.0];
            s.transmissibility() * d * d
        })
        .sum::<f64>()
        .sqrt())
}
