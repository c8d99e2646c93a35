//! Reaction kinetics and nonlocal diffusion laws.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Susceptible-infected-recovered with standard incidence.
    BaseSir,
    /// Adds recruitment `A`, treatment `H` and mortality of recovered.
    Sars,
}

/// Reaction parameters. `recruitment` and `treatment` are ignored for
/// [`Variant::BaseSir`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Incidence rate. Unrelated to the mesh regularity ratio.
    pub alpha_incidence: f64,
    pub mu: f64,
    pub gamma: f64,
    pub variant: Variant,
    /// `A`
    pub recruitment: f64,
    /// `r`, the treatment capacity.
    pub treatment: f64,
}

impl ModelParams {
    pub fn sir(alpha: f64, mu: f64, gamma: f64) -> Self {
        Self { alpha_incidence: alpha, mu, gamma, variant: Variant::BaseSir, recruitment: 0.0, treatment: 0.0 }
    }

    pub fn sars(alpha: f64, mu: f64, gamma: f64, recruitment: f64, treatment: f64) -> Self {
        Self { alpha_incidence: alpha, mu, gamma, variant: Variant::Sars, recruitment, treatment }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alpha", self.alpha_incidence),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("recruitment", self.recruitment),
            ("treatment", self.treatment),
        ];
        for (name, v) in named {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn is_sars(&self) -> bool {
        self.variant == Variant::Sars
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Standard incidence `alpha u v / (u + v + w)` extended to all of R^3 by
/// taking positive parts, and by zero at the origin.
pub fn incidence(u: f64, v: f64, w: f64, alpha: f64) -> f64 {
    let (u, v, w) = (pos(u), pos(v), pos(w));
    let total = u + v + w;
    if total == 0.0 {
        0.0
    } else {
        alpha * u * v / total
    }
}

/// Treatment removal `H(v) = r` for `v > 0`, zero otherwise.
pub fn treatment(v: f64, r: f64) -> f64 {
    if v > 0.0 {
        r
    } else {
        0.0
    }
}

/// Right-hand sides of the three reaction equations as the scheme writes
/// them. `u1_lag` is the time-level-n susceptible density entering the
/// infected equation; `u2_lag` is the time-level-n infected density entering
/// the recovered equation.
pub fn reaction_rates(p: &ModelParams, u1: f64, u2: f64, u3: f64, u1_lag: f64, u2_lag: f64) -> [f64; 3] {
    let a = p.alpha_incidence;
    let s_new = incidence(u1, u2, u3, a);
    let s_lag = incidence(u1_lag, u2, u3, a);
    match p.variant {
        Variant::BaseSir => [-s_new - p.mu * u1, s_lag - (p.gamma + p.mu) * u2, p.gamma * u2_lag],
        Variant::Sars => {
            let h = treatment(u2, p.treatment);
            [p.recruitment - s_new - p.mu * u1, s_lag - (p.gamma + p.mu) * u2 - h, p.gamma * u2_lag + h - p.mu * u3]
        }
    }
}

/// Coefficient law `a_i(s)` applied to the total mass `s` of a species.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiffusionLaw {
    Constant {
        value: f64,
    },
    /// `a(s) = slope * s`. Degenerates at zero mass, so it is excluded from
    /// the bounded-coefficient guarantees and checked at run time only.
    Linear {
        slope: f64,
    },
    /// `clamp(s, min, max)`.
    TruncatedLinear {
        max: f64,
        min: f64,
    },
    /// `clamp(scale / (s - center)^2, min, max)`, equal to `max` at `s = center`.
    TruncatedInverseSquare {
        scale: f64,
        center: f64,
        max: f64,
        min: f64,
    },
}

impl DiffusionLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Self::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                bad(format!("constant diffusion {value} must be positive"))
            }
            Self::Linear { slope } if !slope.is_finite() => bad(format!("linear slope {slope}")),
            Self::TruncatedLinear { max, min } | Self::TruncatedInverseSquare { max, min, .. }
                if !(min > 0.0 && min <= max && max.is_finite()) =>
            {
                bad(format!("truncation bounds [{min}, {max}] must satisfy 0 < min <= max"))
            }
            Self::TruncatedInverseSquare { scale, center, .. } if !(scale > 0.0 && center.is_finite()) => {
                bad(format!("inverse-square scale {scale} must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Linear { slope } => slope * s,
            Self::TruncatedLinear { max, min } => s.clamp(min, max),
            Self::TruncatedInverseSquare { scale, center, max, min } => {
                let gap = s - center;
                if gap == 0.0 {
                    max
                } else {
                    (scale / (gap * gap)).clamp(min, max)
                }
            }
        }
    }

    /// `[lower, upper]` bounds of the law, when it has uniform ones.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Constant { value } => Some((value, value)),
            Self::Linear { .. } => None,
            Self::TruncatedLinear { max, min } | Self::TruncatedInverseSquare { max, min, .. } => Some((min, max)),
        }
    }

    /// Global Lipschitz constant, when it exists.
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            Self::Constant { .. } => Some(0.0),
            Self::Linear { slope } => Some(slope.abs()),
            Self::TruncatedLinear { .. } => Some(1.0),
            // steepest where scale / gap^2 = max, i.e. |gap| = sqrt(scale / max)
            Self::TruncatedInverseSquare { scale, max, .. } => Some(2.0 * max.powf(1.5) / scale.sqrt()),
        }
    }

    /// Whether the law satisfies the uniform lower bound the scheme's
    /// analysis needs.
    pub fn is_bounded_below(&self) -> bool {
        !matches!(self, Self::Linear { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn incidence_examples() {
        assert_relative_eq!(incidence(1.0, 1.0, 1.0, 2.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(incidence(0.0, 0.0, 0.0, 5.0), 0.0);
        assert_eq!(incidence(-1.0, 2.0, 0.0, 3.0), 0.0);
        assert_eq!(incidence(-1.0, -2.0, -3.0, 3.0), 0.0);
    }

    #[test]
    fn treatment_examples() {
        assert_eq!(treatment(0.5, 0.5), 0.5);
        assert_eq!(treatment(0.0, 0.5), 0.0);
        assert_eq!(treatment(-1.0, 0.5), 0.0);
    }

    #[test]
    fn truncated_linear_branches() {
        let law = DiffusionLaw::TruncatedLinear { max: 1e4, min: 1e-4 };
        law.validate().unwrap();
        assert_eq!(law.eval(2e4), 1e4);
        assert_eq!(law.eval(1.0), 1.0);
        assert_eq!(law.eval(1e-6), 1e-4);
    }

    #[test]
    fn inverse_square_at_center_is_upper_bound() {
        let law = DiffusionLaw::TruncatedInverseSquare { scale: 400.0, center: 1.0, max: 1e4, min: 1e-4 };
        law.validate().unwrap();
        assert_eq!(law.eval(1.0), 1e4);
        assert_relative_eq!(law.eval(3.0), 100.0, epsilon = 1e-12);
        assert_eq!(law.eval(1e9), 1e-4);
    }

    #[test]
    fn validation() {
        assert!(DiffusionLaw::Constant { value: 0.0 }.validate().is_err());
        assert!(DiffusionLaw::Constant { value: 0.1 }.validate().is_ok());
        assert!(DiffusionLaw::TruncatedLinear { max: 1.0, min: 2.0 }.validate().is_err());
        assert!(DiffusionLaw::TruncatedLinear { max: 1.0, min: 0.0 }.validate().is_err());
        assert!(DiffusionLaw::Linear { slope: 0.1 }.validate().is_ok());
        assert!(!DiffusionLaw::Linear { slope: 0.1 }.is_bounded_below());
        assert!(ModelParams::sir(2.0, -0.1, 1.0).validate().is_err());
        assert!(ModelParams::sars(3.8, 0.3, 0.8, 3.0, 0.5).validate().is_ok());
    }

    #[test]
    fn reaction_examples() {
        let p = ModelParams::sir(2.0, 0.01, 1.0);
        assert_eq!(reaction_rates(&p, 0.0, 0.0, 0.0, 0.0, 0.0), [0.0, 0.0, 0.0]);
        let f = reaction_rates(&p, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(f[0], -2.0 / 3.0 - 0.01, epsilon = 1e-15);
        assert_relative_eq!(f[1], 2.0 / 3.0 - 1.01, epsilon = 1e-15);
        assert_relative_eq!(f[2], 1.0, epsilon = 1e-15);

        let s = ModelParams::sars(3.8, 0.3, 0.8, 3.0, 0.5);
        let f = reaction_rates(&s, 2.0, 0.0, 1.0, 2.0, 0.0);
        // u2 = 0: no incidence, no treatment
        assert_relative_eq!(f[1], 0.0);
        assert_relative_eq!(f[2], -0.3);
        assert_relative_eq!(f[0], 3.0 - 0.6);
    }

    proptest! {
        #[test]
        fn incidence_bounded_by_min(u in -5.0f64..5.0, v in -5.0f64..5.0, w in -5.0f64..5.0, a in 0.0f64..10.0) {
            let s = incidence(u, v, w, a);
            prop_assert!(s >= 0.0);
            prop_assert!(s <= a * u.max(0.0).min(v.max(0.0)) * (1.0 + 1e-15));
        }

        #[test]
        fn incidence_positive_part_invariant(u in -5.0f64..5.0, v in -5.0f64..5.0, w in -5.0f64..5.0) {
            let s = incidence(u, v, w, 1.7);
            prop_assert_eq!(s, incidence(u.max(0.0), v, w, 1.7));
            prop_assert_eq!(s, incidence(u, v.max(0.0), w, 1.7));
            prop_assert_eq!(s, incidence(u, v, w.max(0.0), 1.7));
        }

        #[test]
        fn incidence_lipschitz_in_first_argument(
            u1 in 0.0f64..10.0, u2 in 0.0f64..10.0, v in 0.0f64..10.0, w in 0.0f64..10.0, a in 0.0f64..5.0,
        ) {
            prop_assume!(u1 + v + w >= 1.0 && u2 + v + w >= 1.0);
            let d = (incidence(u1, v, w, a) - incidence(u2, v, w, a)).abs();
            prop_assert!(d <= a * (u1 - u2).abs() * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn truncated_laws_are_lipschitz(s1 in -1e3f64..1e3, s2 in -1e3f64..1e3) {
            let laws = [
                DiffusionLaw::Constant { value: 0.3 },
                DiffusionLaw::TruncatedLinear { max: 50.0, min: 1e-3 },
                DiffusionLaw::TruncatedInverseSquare { scale: 2.0, center: 4.0, max: 10.0, min: 1e-3 },
            ];
            for law in laws {
                let l = law.lipschitz().unwrap();
                let d = (law.eval(s1) - law.eval(s2)).abs();
                prop_assert!(d <= l * (s1 - s2).abs() * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn truncated_laws_stay_in_bounds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let laws = [
            DiffusionLaw::TruncatedLinear { max: 1e4, min: 1e-4 },
            DiffusionLaw::TruncatedInverseSquare { scale: 4e5, center: 4.010906415, max: 1e4, min: 1e-4 },
            DiffusionLaw::TruncatedInverseSquare { scale: 400.0, center: 1.178843705, max: 1e4, min: 1e-4 },
        ];
        for law in laws {
            let (lo, hi) = law.bounds().unwrap();
            for _ in 0..1_000_000 {
                let s: f64 = rng.gen_range(-1e5..1e5) * 10f64.powi(rng.gen_range(-8..3));
                let a = law.eval(s);
                assert!(a >= lo && a <= hi, "{law:?} at {s} gave {a}");
            }
        }
    }
}
