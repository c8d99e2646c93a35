use num_complex::Complex64;

use super::eigen::quadratic_roots;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// The two interior equilibria of the SARS reaction system, `e1` being the
/// one with fewer infected.
#[derive(Clone, Debug, PartialEq)]
pub struct Equilibria {
    pub e1: [f64; 3],
    pub e2: [f64; 3],
    /// `(r alpha - A R0 - A alpha)^2 - 4 A^2 R0 alpha` with `R0 = mu + gamma`.
    pub discriminant: f64,
    /// Set for a point with a nonpositive component.
    pub flagged: [bool; 2],
}

fn require_sars(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if !p.is_sars() {
        return Err(Error::InvalidParameter("equilibria are defined for the SARS variant".into()));
    }
    if !(p.alpha_incidence > 0.0 && p.mu > 0.0) {
        return Err(Error::InvalidParameter("alpha and mu must be positive".into()));
    }
    Ok(())
}

pub fn sars_equilibria(p: &ModelParams) -> Result<Equilibria> {
    require_sars(p)?;
    let (a, r, alpha, mu, gamma) = (p.recruitment, p.treatment, p.alpha_incidence, p.mu, p.gamma);
    let r0 = mu + gamma;
    let disc = (r * alpha - a * r0 - a * alpha).powi(2) - 4.0 * a * a * r0 * alpha;
    if disc < 0.0 {
        return Err(Error::NoRealEquilibria(disc));
    }
    let mid = (a - r) / (2.0 * r0) - a / (2.0 * alpha);
    let half = disc.sqrt() / (2.0 * alpha * r0);
    let point = |v: f64| [(a - r - r0 * v) / mu, v, (gamma * v + r) / mu];
    let e1 = point(mid - half);
    let e2 = point(mid + half);
    let flag = |e: &[f64; 3]| e.iter().any(|&x| x <= 0.0);
    Ok(Equilibria { flagged: [flag(&e1), flag(&e2)], e1, e2, discriminant: disc })
}

/// Jacobian of the SARS reaction terms at `(u, v, w)` on the branch `v > 0`,
/// where the treatment term is locally constant.
pub fn jacobian(p: &ModelParams, point: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    let [u, v, w] = point;
    let s = u + v + w;
    if !(s > 0.0) {
        return Err(Error::DegeneratePoint(s));
    }
    let (alpha, mu, gamma) = (p.alpha_incidence, p.mu, p.gamma);
    let uv = alpha * u * v / (s * s);
    let av = alpha * v / s;
    let au = alpha * u / s;
    Ok([[-av + uv - mu, -au + uv, uv], [av - uv, au - uv - gamma - mu, -uv], [0.0, gamma, -mu]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub jacobian: [[f64; 3]; 3],
    /// `-mu` first, then the two roots of the reduced quadratic.
    pub eigenvalues: [Complex64; 3],
    /// `(b, c)` of `lambda^2 + b lambda + c`.
    pub quadratic: [f64; 2],
    /// `(u + v + w) / alpha > max{(u - v)/(2 mu + gamma), u/(mu + gamma) - v/mu}`.
    pub routh_condition_holds: bool,
    /// Both quadratic coefficients positive.
    pub coefficients_positive: bool,
}

impl StabilityReport {
    pub fn verdicts_agree(&self) -> bool {
        self.routh_condition_holds == self.coefficients_positive
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Linear stability of the reaction system at `point`.
///
/// The vector `(1, 1, 1)` is a left eigenvector of the Jacobian with
/// eigenvalue `-mu` at every point, which leaves the quadratic
/// `lambda^2 + ((2mu + gamma) + alpha (v - u)/S) lambda
///  + ((mu + gamma) mu + alpha ((mu + gamma) v - mu u)/S)`.
pub fn stability(p: &ModelParams, point: [f64; 3]) -> Result<StabilityReport> {
    let jac = jacobian(p, point)?;
    let [u, v, w] = point;
    let s = u + v + w;
    let (alpha, mu, gamma) = (p.alpha_incidence, p.mu, p.gamma);
    let b = (2.0 * mu + gamma) + alpha * (v - u) / s;
    let c = (mu + gamma) * mu + alpha * ((mu + gamma) * v - mu * u) / s;
    let [l2, l3] = quadratic_roots(b, c);
    let routh = s / alpha > ((u - v) / (2.0 * mu + gamma)).max(u / (mu + gamma) - v / mu);
    Ok(StabilityReport {
        jacobian: jac,
        eigenvalues: [Complex64::new(-mu, 0.0), l2, l3],
        quadratic: [b, c],
        routh_condition_holds: routh,
        coefficients_positive: b > 0.0 && c > 0.0,
    })
}
