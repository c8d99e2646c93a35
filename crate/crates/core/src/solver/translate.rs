use super::State;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TranslateKind {
    Space,
    Time,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslateRow {
    pub kind: TranslateKind,
    /// `|y|` or `tau`.
    pub magnitude: f64,
    /// Per species.
    pub value: [f64; 3],
}

fn lattice_multiple(value: f64, spacing: f64) -> Result<isize> {
    let q = value / spacing;
    let r = q.round();
    if (q - r).abs() > 1e-9 * r.abs().max(1.0) {
        return Err(Error::OffLattice(format!("{value} (spacing {spacing})")));
    }
    Ok(r as isize)
}

/// Space and time translate norms of the piecewise-constant reconstruction
/// `u_h(t, x) = u^{n+1}_K` on `(t^n, t^{n+1}] x K`.
///
/// `history` must hold time levels `0..=N` on a Cartesian mesh with
/// uniform spacing `dt`. For a shift `y` the norm is
/// `sum_n dt sum_{K, K+y in mesh} m(K) |u^{n+1}_{K+y} - u^{n+1}_K|^2`, which is
/// the integral over `Omega' x (0, T)`; for `tau = q dt` it is
/// `sum_{n < N-q} dt ||u^{n+1+q} - u^{n+1}||^2`.
pub fn translate_diagnostics(
    history: &[State],
    mesh: &Mesh,
    dt: f64,
    shifts: &[[f64; 2]],
    taus: &[f64],
) -> Result<Vec<TranslateRow>> {
    let grid = mesh.grid().ok_or(Error::NotApplicable("translate norms need a Cartesian mesh"))?;
    if history.is_empty() {
        return Err(Error::InvalidParameter("empty history".into()));
    }
    for s in history {
        for f in &s.fields {
            mesh.check_field(f)?;
        }
    }
    let levels = history.len() - 1;
    let m = grid.dx() * grid.dy();
    let mut rows = Vec::with_capacity(shifts.len() + taus.len());

    for y in shifts {
        let px = lattice_multiple(y[0], grid.dx())?;
        let py = lattice_multiple(y[1], grid.dy())?;
        let mut value = [0.0; 3];
        for s in &history[1..] {
            for (i, v) in value.iter_mut().enumerate() {
                let u = s.fields[i].values();
                let mut acc = 0.0;
                for j in 0..grid.ny as isize {
                    let jj = j + py;
                    if jj < 0 || jj >= grid.ny as isize {
                        continue;
                    }
                    for ix in 0..grid.nx as isize {
                        let ii = ix + px;
                        if ii < 0 || ii >= grid.nx as isize {
                            continue;
                        }
                        let d = u[grid.index(ii as usize, jj as usize)] - u[grid.index(ix as usize, j as usize)];
                        acc += m * d * d;
                    }
                }
                *v += dt * acc;
            }
        }
        rows.push(TranslateRow { kind: TranslateKind::Space, magnitude: y[0].hypot(y[1]), value });
    }

    for &tau in taus {
        let q = lattice_multiple(tau, dt)?;
        if q < 0 || q as usize > levels {
            return Err(Error::InvalidParameter(format!("tau {tau} outside [0, T]")));
        }
        let q = q as usize;
        let mut value = [0.0; 3];
        for n in 0..levels - q {
            for (i, v) in value.iter_mut().enumerate() {
                let a = history[n + 1 + q].fields[i].values();
                let b = history[n + 1].fields[i].values();
                let sq: f64 = a.iter().zip(b).map(|(x, y)| m * (x - y) * (x - y)).sum();
                *v += dt * sq;
            }
        }
        rows.push(TranslateRow { kind: TranslateKind::Time, magnitude: tau, value });
    }
    Ok(rows)
}
