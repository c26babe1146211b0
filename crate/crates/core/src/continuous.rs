//! Closed-form solution of the continuous-time predefined-time system
//!
//! ```text
//! ẋ = -1 / (ρ₁ (1 - ρ₂)) · κ(|x|)^ρ₂ / κ'(|x|) · sign(x)
//! ```
//!
//! and its settling-time function `T(x₀) = ρ₁ κ(|x₀|)^(1-ρ₂)`, which is
//! bounded by `ρ₁` for every initial condition.

use crate::error::{Error, Result};
use crate::k1::K1Function;

/// Single-valued signum with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Parameters of the unperturbed system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    rho1: f64,
    rho2: f64,
    kappa: K1Function,
}

impl SystemParams {
    /// `rho1 > 0` is the predefined bound on the settling time, `0 <= rho2 < 1`.
    pub fn new(rho1: f64, rho2: f64, kappa: K1Function) -> Result<Self> {
        if !(rho1 > 0.0 && rho1.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "rho1",
                value: rho1,
                reason: "must be positive and finite",
            });
        }
        if !(0.0..1.0).contains(&rho2) {
            return Err(Error::ParameterDomain {
                name: "rho2",
                value: rho2,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(Self { rho1, rho2, kappa })
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    pub fn kappa(&self) -> &K1Function {
        &self.kappa
    }

    /// `1 - ρ₂`, the exponent of the transformed coordinate.
    pub(crate) fn exponent(&self) -> f64 {
        1.0 - self.rho2
    }
}

pub(crate) fn check_state(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("state must be finite, got {x}")))
    }
}

/// Right-hand side of the system; zero at the origin.
pub fn vector_field(p: &SystemParams, x: f64) -> Result<f64> {
    check_state(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let r = x.abs();
    let d = p.kappa.deriv(r);
    if d == 0.0 {
        return Err(Error::SingularField { x });
    }
    let gain = 1.0 / (p.rho1 * p.exponent());
    Ok(-gain * p.kappa.eval(r).powf(p.rho2) / d * sign(x))
}

/// The solution `x(t)` from `x(0) = x0`; exactly zero from the settling time on.
pub fn exact_solution(p: &SystemParams, x0: f64, t: f64) -> Result<f64> {
    check_state(x0)?;
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!("time must be nonnegative, got {t}")));
    }
    if x0 == 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(x0);
    }
    let e = p.exponent();
    let remaining = p.kappa.eval(x0.abs()).powf(e) - t / p.rho1;
    if remaining <= 0.0 {
        return Ok(0.0);
    }
    Ok(p.kappa.inverse(remaining.powf(1.0 / e))? * sign(x0))
}

/// `T(x0) = ρ₁ κ(|x0|)^(1-ρ₂)`.
pub fn settling_time(p: &SystemParams, x0: f64) -> Result<f64> {
    check_state(x0)?;
    Ok(p.rho1 * p.kappa.eval(x0.abs()).powf(p.exponent()))
}
