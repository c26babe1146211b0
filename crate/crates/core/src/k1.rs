//! Class-K¹ comparison functions.
//!
//! A K¹ function `κ: [0, ∞) → [0, 1)` is continuous, strictly increasing,
//! vanishes at the origin and tends to one at infinity. Its derivative is a
//! probability density on the positive half-line, which is how the catalog
//! below is organised: each family is the distribution function of a
//! positive random variable.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::fmt;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::invert::invert_monotone;
use crate::special::{ln_beta, regularized_beta_i_split, regularized_gamma_p};

/// Largest accepted shape parameter for the gamma and beta families.
///
/// Keeps every series and continued fraction well inside its iteration cap.
pub const MAX_SHAPE: f64 = 1e6;

/// The catalog of K¹ families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K1Family {
    /// `(2/π) arctan(a r)`, `a > 0`.
    Atan { a: f64 },
    /// `r / (r + a)`, `a > 0`.
    Rational { a: f64 },
    /// `1 - a^{-r}`, `a > 1`.
    Exponential { a: f64 },
    /// Regularized lower incomplete gamma `P(a, r)`, `a > 0`.
    GammaReg { a: f64 },
    /// Regularized incomplete beta `I(a1, a2, r / (r + 1))`, `a1, a2 > 0`.
    BetaReg { a1: f64, a2: f64 },
}

impl K1Family {
    pub fn tag(&self) -> &'static str {
        match self {
            K1Family::Atan { .. } => "atan",
            K1Family::Rational { .. } => "rational",
            K1Family::Exponential { .. } => "exponential",
            K1Family::GammaReg { .. } => "gamma",
            K1Family::BetaReg { .. } => "beta",
        }
    }
}

impl fmt::Display for K1Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            K1Family::Atan { a } => write!(f, "atan(a={a})"),
            K1Family::Rational { a } => write!(f, "rational(a={a})"),
            K1Family::Exponential { a } => write!(f, "exponential(a={a})"),
            K1Family::GammaReg { a } => write!(f, "gamma(a={a})"),
            K1Family::BetaReg { a1, a2 } => write!(f, "beta(a1={a1}, a2={a2})"),
        }
    }
}

/// A validated member of the K¹ catalog.
///
/// Instances are immutable; evaluation, derivative and inverse are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct K1Function {
    family: K1Family,
    name: String,
    /// Family constant: `ln a` (exponential), `ln Γ(a)` (gamma), `ln B(a1, a2)` (beta).
    log_const: f64,
}

/// Builds the catalog member for `family`.
pub fn make_k1(family: K1Family) -> Result<K1Function> {
    K1Function::new(family)
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value: v,
            reason: "must be positive and finite",
        })
    }
}

fn shape(name: &'static str, v: f64) -> Result<()> {
    positive(name, v)?;
    if v > MAX_SHAPE {
        return Err(Error::ParameterDomain {
            name,
            value: v,
            reason: "shape parameter above 1e6",
        });
    }
    Ok(())
}

impl K1Function {
    pub fn new(family: K1Family) -> Result<Self> {
        let log_const = match family {
            K1Family::Atan { a } | K1Family::Rational { a } => {
                positive("a", a)?;
                0.0
            }
            K1Family::Exponential { a } => {
                if !(a > 1.0 && a.is_finite()) {
                    return Err(Error::ParameterDomain {
                        name: "a",
                        value: a,
                        reason: "exponential family requires a > 1",
                    });
                }
                a.ln()
            }
            K1Family::GammaReg { a } => {
                shape("a", a)?;
                ln_gamma(a)
            }
            K1Family::BetaReg { a1, a2 } => {
                shape("a1", a1)?;
                shape("a2", a2)?;
                ln_beta(a1, a2)
            }
        };
        Ok(Self {
            family,
            name: family.to_string(),
            log_const,
        })
    }

    pub fn family(&self) -> K1Family {
        self.family
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether [`K1Function::inverse`] is evaluated in closed form.
    pub fn has_closed_form_inverse(&self) -> bool {
        matches!(
            self.family,
            K1Family::Atan { .. } | K1Family::Rational { .. } | K1Family::Exponential { .. }
        )
    }

    /// `κ(r)`.
    ///
    /// # Panics
    ///
    /// If `r` is negative, NaN or infinite.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(
            r >= 0.0 && r.is_finite(),
            "kappa evaluated outside [0, inf): {r}"
        );
        match self.family {
            K1Family::Atan { a } => FRAC_2_PI * (a * r).atan(),
            K1Family::Rational { a } => r / (r + a),
            K1Family::Exponential { .. } => -(-r * self.log_const).exp_m1(),
            K1Family::GammaReg { a } => {
                regularized_gamma_p(a, r).expect("shape validated at construction")
            }
            K1Family::BetaReg { a1, a2 } => {
                let sc = 1.0 / (1.0 + r);
                regularized_beta_i_split(a1, a2, r * sc, sc)
                    .expect("shapes validated at construction")
            }
        }
    }

    /// `κ'(r)`, the density associated with `κ`.
    ///
    /// At `r = 0` this equals [`K1Function::deriv_at_zero`], which may be `+∞`.
    ///
    /// # Panics
    ///
    /// If `r` is negative, NaN or infinite.
    pub fn deriv(&self, r: f64) -> f64 {
        assert!(
            r >= 0.0 && r.is_finite(),
            "kappa derivative evaluated outside [0, inf): {r}"
        );
        if r == 0.0 {
            return self.deriv_at_zero();
        }
        match self.family {
            K1Family::Atan { a } => FRAC_2_PI * a / (1.0 + (a * r) * (a * r)),
            K1Family::Rational { a } => a / ((r + a) * (r + a)),
            K1Family::Exponential { .. } => self.log_const * (-r * self.log_const).exp(),
            K1Family::GammaReg { a } => ((a - 1.0) * r.ln() - r - self.log_const).exp(),
            K1Family::BetaReg { a1, a2 } => {
                let sc = 1.0 / (1.0 + r);
                let s = r * sc;
                ((a1 - 1.0) * s.ln() + (a2 + 1.0) * sc.ln() - self.log_const).exp()
            }
        }
    }

    /// `κ'(0⁺)`, possibly `+∞`.
    pub fn deriv_at_zero(&self) -> f64 {
        match self.family {
            K1Family::Atan { a } => FRAC_2_PI * a,
            K1Family::Rational { a } => 1.0 / a,
            K1Family::Exponential { .. } => self.log_const,
            K1Family::GammaReg { a } => edge_density(a, -self.log_const),
            K1Family::BetaReg { a1, .. } => edge_density(a1, -self.log_const),
        }
    }

    /// `κ⁻¹(y)` for `y ∈ [0, 1)`.
    ///
    /// `y >= 1` is rejected rather than clamped; in this crate such a target
    /// only arises from a step-size or parameter bug upstream.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::InversionRange {
                target: y,
                reason: "kappa inverse needs a target in [0, 1)",
            });
        }
        if y >= 1.0 {
            return Err(Error::InversionRange {
                target: y,
                reason: "kappa never reaches 1",
            });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let r = match self.family {
            K1Family::Atan { a } => (FRAC_PI_2 * y).tan() / a,
            K1Family::Rational { a } => a * y / (1.0 - y),
            K1Family::Exponential { .. } => -(-y).ln_1p() / self.log_const,
            K1Family::GammaReg { a } => invert_monotone(|r| self.eval(r), y, 0.0, a.max(1.0))?,
            K1Family::BetaReg { .. } => invert_monotone(|r| self.eval(r), y, 0.0, 1.0)?,
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::InversionRange {
                target: y,
                reason: "inverse overflows",
            })
        }
    }
}

/// Density at the origin of a law whose density behaves like `c · r^{shape-1}`.
fn edge_density(shape: f64, ln_c: f64) -> f64 {
    if shape < 1.0 {
        f64::INFINITY
    } else if shape == 1.0 {
        ln_c.exp()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn k(f: K1Family) -> K1Function {
        make_k1(f).unwrap()
    }

    #[test]
    fn catalog_medians() {
        assert_abs_diff_eq!(k(K1Family::Atan { a: 1.0 }).eval(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(k(K1Family::Rational { a: 1.0 }).eval(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            k(K1Family::GammaReg { a: 1.0 }).eval(2f64.ln()),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            k(K1Family::BetaReg { a1: 1.0, a2: 1.0 }).eval(1.0),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            k(K1Family::Exponential { a: 2.0 }).eval(1.0),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_form_inverses() {
        assert_relative_eq!(k(K1Family::Atan { a: 2.0 }).inverse(0.5).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(k(K1Family::Rational { a: 3.0 }).inverse(0.5).unwrap(), 3.0, max_relative = 1e-15);
        assert_relative_eq!(
            k(K1Family::Exponential { a: 2.0 }).inverse(0.75).unwrap(),
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn numeric_inverse_of_beta_polynomial_case() {
        // I(2, 3, 0.4) = 0.5248 and s = 0.4 ⇔ r = 2/3.
        let kb = k(K1Family::BetaReg { a1: 2.0, a2: 3.0 });
        assert_relative_eq!(kb.inverse(0.5248).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
        let kg = k(K1Family::GammaReg { a: 1.0 });
        assert_relative_eq!(kg.inverse(0.5).unwrap(), 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        for fam in [
            K1Family::Atan { a: 0.0 },
            K1Family::Rational { a: -1.0 },
            K1Family::Exponential { a: 1.0 },
            K1Family::Exponential { a: 0.5 },
            K1Family::GammaReg { a: 0.0 },
            K1Family::GammaReg { a: f64::NAN },
            K1Family::BetaReg { a1: 1.0, a2: 0.0 },
            K1Family::BetaReg { a1: -1.0, a2: 1.0 },
            K1Family::BetaReg { a1: 2e6, a2: 1.0 },
        ] {
            assert!(
                matches!(make_k1(fam), Err(Error::ParameterDomain { .. })),
                "{fam} accepted"
            );
        }
    }

    #[test]
    fn inverse_rejects_one_and_negative() {
        let kf = k(K1Family::Atan { a: 1.0 });
        assert!(matches!(kf.inverse(1.0), Err(Error::InversionRange { .. })));
        assert!(kf.inverse(1.0 + 1e-13).is_err());
        assert!(kf.inverse(-1e-3).is_err());
        assert!(kf.inverse(f64::NAN).is_err());
        let kg = k(K1Family::GammaReg { a: 3.0 });
        assert!(kg.inverse(1.0).is_err());
        assert_eq!(kg.inverse(0.0).unwrap(), 0.0);
    }

    #[test]
    fn eval_zero_is_zero() {
        for fam in [
            K1Family::Atan { a: 1.5 },
            K1Family::Rational { a: 0.2 },
            K1Family::Exponential { a: 3.0 },
            K1Family::GammaReg { a: 0.4 },
            K1Family::BetaReg { a1: 0.7, a2: 5.0 },
        ] {
            assert_eq!(k(fam).eval(0.0), 0.0);
        }
    }

    #[test]
    #[should_panic]
    fn eval_rejects_infinity() {
        k(K1Family::Atan { a: 1.0 }).eval(f64::INFINITY);
    }

    #[test]
    fn derivative_at_zero_metadata() {
        assert_relative_eq!(k(K1Family::Atan { a: 3.0 }).deriv_at_zero(), 6.0 / PI);
        assert_relative_eq!(k(K1Family::Rational { a: 4.0 }).deriv_at_zero(), 0.25);
        assert_relative_eq!(k(K1Family::Exponential { a: 5.0 }).deriv_at_zero(), 5f64.ln());
        assert_eq!(k(K1Family::GammaReg { a: 0.5 }).deriv_at_zero(), f64::INFINITY);
        assert_relative_eq!(k(K1Family::GammaReg { a: 1.0 }).deriv_at_zero(), 1.0, max_relative = 1e-14);
        assert_eq!(k(K1Family::GammaReg { a: 2.0 }).deriv_at_zero(), 0.0);
        assert_eq!(k(K1Family::BetaReg { a1: 0.5, a2: 2.0 }).deriv_at_zero(), f64::INFINITY);
        assert_relative_eq!(
            k(K1Family::BetaReg { a1: 1.0, a2: 2.5 }).deriv_at_zero(),
            2.5,
            max_relative = 1e-13
        );
        assert_eq!(k(K1Family::BetaReg { a1: 3.0, a2: 2.0 }).deriv_at_zero(), 0.0);
    }

    #[test]
    fn finite_derivative_at_zero_matches_one_sided_difference() {
        for fam in [
            K1Family::Atan { a: 3.0 },
            K1Family::Rational { a: 4.0 },
            K1Family::Exponential { a: 5.0 },
            K1Family::GammaReg { a: 1.0 },
            K1Family::GammaReg { a: 2.0 },
            K1Family::BetaReg { a1: 1.0, a2: 2.5 },
        ] {
            let kf = k(fam);
            let step = 1e-7;
            let fd = kf.eval(step) / step;
            assert_abs_diff_eq!(fd, kf.deriv_at_zero(), epsilon = 1e-5 * kf.deriv_at_zero().max(1.0));
        }
    }

    #[test]
    fn names_describe_family() {
        assert_eq!(k(K1Family::BetaReg { a1: 1.0, a2: 2.0 }).name(), "beta(a1=1, a2=2)");
        assert_eq!(K1Family::GammaReg { a: 1.0 }.tag(), "gamma");
        assert!(k(K1Family::Rational { a: 1.0 }).has_closed_form_inverse());
        assert!(!k(K1Family::GammaReg { a: 1.0 }).has_closed_form_inverse());
    }
}
