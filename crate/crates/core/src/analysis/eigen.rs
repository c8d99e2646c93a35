//! Closed-form roots of low-degree real polynomials.

use num_complex::Complex64;

/// Roots of `x^2 + b x + c`, the one with the smaller real part first.
pub fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // avoid cancellation: q = -(b + sign(b) s) / 2
        let q = -0.5 * (b + if b >= 0.0 { s } else { -s });
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(-0.5 * b, -im), Complex64::new(-0.5 * b, im)]
    }
}

/// Roots of the monic cubic `x^3 + a x^2 + b x + c`.
///
/// A real root is taken from the trigonometric or Cardano form, polished by
/// Newton steps, and the remaining quadratic factor is solved directly.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if disc > 0.0 {
        let s = disc.sqrt();
        (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()
    } else if p == 0.0 {
        0.0
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        m * (arg.acos() / 3.0).cos()
    };
    let mut x = t + shift;
    for _ in 0..4 {
        let f = ((x + a) * x + b) * x + c;
        let df = (3.0 * x + 2.0 * a) * x + b;
        if df == 0.0 {
            break;
        }
        let next = x - f / df;
        if !next.is_finite() || (next - x).abs() <= f64::EPSILON * x.abs() {
            if next.is_finite() {
                x = next;
            }
            break;
        }
        x = next;
    }
    // x^3 + a x^2 + b x + c = (x - r)(x^2 + (a + r) x + (b + r (a + r)))
    let [z1, z2] = quadratic_roots(a + x, b + x * (a + x));
    [Complex64::new(x, 0.0), z1, z2]
}
