use super::eigen::cubic_roots;
use super::sars::jacobian;
use crate::error::Result;
use crate::model::ModelParams;

/// Reference Turing inequality for the SARS example at its stable equilibrium
/// with `d1 = d3`; negative values mean diffusion-driven instability.
pub fn printed_turing_polynomial(d1: f64, d2: f64) -> f64 {
    (5.114590203 + 9.0 * d1) * d2 + 3.289620038 - 2.20024467 * d1
}

/// `0` followed by `points - 1` logarithmically spaced values from
/// `(pi / length)^2` to `(pi n_max / length)^2`, the range of Neumann box modes.
pub fn default_k2_grid(length: f64, n_max: usize, points: usize) -> Vec<f64> {
    assert!(points >= 2 && n_max >= 1);
    let lo = (std::f64::consts::PI / length).powi(2);
    let hi = lo * (n_max * n_max) as f64;
    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    let m = points - 1;
    for k in 0..m {
        let f = if m == 1 { 0.0 } else { k as f64 / (m - 1) as f64 };
        grid.push(lo * (hi / lo).powf(f));
    }
    grid
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuringReport {
    /// Some `k^2` in the grid gives `J - k^2 D` an eigenvalue with positive real part.
    pub unstable: bool,
    /// `(k^2, max real part)` at the most unstable grid point.
    pub witness: (f64, f64),
    /// Value of [`printed_turing_polynomial`], evaluated only when `d1 == d3`.
    pub polynomial: Option<f64>,
}

impl TuringReport {
    pub fn polynomial_unstable(&self) -> Option<bool> {
        self.polynomial.map(|v| v < 0.0)
    }

    /// `None` when the polynomial was not evaluated.
    pub fn verdicts_agree(&self) -> Option<bool> {
        self.polynomial_unstable().map(|p| p == self.unstable)
    }
}

/// Largest real part among the eigenvalues of `m`.
pub(crate) fn max_real_eigenvalue(m: &[[f64; 3]; 3]) -> f64 {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    cubic_roots(-tr, minors, -det).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Scans `J - k^2 diag(d)` over `k2_grid` at `point`.
pub fn turing_scan(p: &ModelParams, point: [f64; 3], d: [f64; 3], k2_grid: &[f64]) -> Result<TuringReport> {
    let jac = jacobian(p, point)?;
    let mut witness = (f64::NAN, f64::NEG_INFINITY);
    for &k2 in k2_grid {
        let mut m = jac;
        for i in 0..3 {
            m[i][i] -= k2 * d[i];
        }
        let re = max_real_eigenvalue(&m);
        if re > witness.1 {
            witness = (k2, re);
        }
    }
    let polynomial = (d[0] == d[2]).then(|| printed_turing_polynomial(d[0], d[1]));
    Ok(TuringReport { unstable: witness.1 > 0.0, witness, polynomial })
}
