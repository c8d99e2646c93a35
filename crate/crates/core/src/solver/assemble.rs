use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{Field, Mesh};

/// Discrete total mass `sum_K m(K) u_K`, the argument of the nonlocal
/// diffusion coefficient.
pub fn nonlocal_argument(mesh: &Mesh, f: &Field) -> Result<f64> {
    mesh.check_field(f)?;
    Ok(mesh.cells().iter().zip(f.values()).map(|(c, u)| c.measure * u).sum())
}

/// Transmissibility-weighted graph Laplacian with zero row sums. Diagonal
/// entries are stored even for isolated cells.
pub fn laplacian(mesh: &Mesh) -> SparseMatrix {
    let n = mesh.num_cells();
    let mut b = TripletBuilder::with_capacity(n, n + 4 * mesh.interfaces().len());
    for i in 0..n {
        b.add(i, i, 0.0);
    }
    for f in mesh.interfaces() {
        let (k, l) = f.cells;
        let t = f.transmissibility();
        b.add(k, k, t);
        b.add(l, l, t);
        b.add_symmetric(k, l, -t);
    }
    b.build()
}

/// Linear system of one species at frozen coefficient `coeff`:
/// `(m(K)/dt + m(K) reaction_K) u_K + coeff sum_L tau_KL (u_K - u_L) = rhs_K`.
pub fn assemble_species_system(
    mesh: &Mesh,
    coeff: f64,
    dt: f64,
    reaction_diag: &Field,
    rhs: &Field,
) -> Result<(SparseMatrix, Vec<f64>)> {
    mesh.check_field(reaction_diag)?;
    mesh.check_field(rhs)?;
    if !(coeff > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("coefficient {coeff} and dt {dt} must be positive")));
    }
    if let Some(k) = reaction_diag.values().iter().position(|&r| r < 0.0) {
        return Err(Error::InvalidParameter(format!("negative reaction coefficient in cell {k}")));
    }
    let shift: Vec<f64> =
        mesh.cells().iter().zip(reaction_diag.values()).map(|(c, r)| c.measure / dt + c.measure * r).collect();
    Ok((laplacian(mesh).scaled_plus_diagonal(coeff, &shift), rhs.values().to_vec()))
}
