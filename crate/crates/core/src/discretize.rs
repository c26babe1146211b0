//! Discrete-time maps.
//!
//! * [`exact_step`] samples the continuous solution exactly: in the
//!   transformed coordinate `w = κ(|x|)^(1-ρ₂) sign(x)` the dynamics are
//!   `ẇ = -sign(w) / ρ₁`, whose implicit Euler step is solvable in closed form.
//! * [`exact_step_via_transform`] reaches the same map through that
//!   transformed coordinate explicitly.
//! * [`consistent_perturbed_step`] is the implicit Euler map of the perturbed
//!   closed loop in `z = κ(|x|) sign(x)`.
//! * [`euler_step`] and [`euler_perturbed_step`] are the explicit baselines.
//!
//! All consistent maps clamp the transformed magnitude at zero before
//! inverting, so a settled state is bitwise `0.0`.

use std::fmt;
use std::sync::Arc;

use crate::continuous::{check_state, sign, vector_field, SystemParams};
use crate::error::{Error, Result};
use crate::k1::K1Function;

/// Rounding allowance, in ulps of a unit-sized transformed state, per step.
const ZERO_BAND_ULPS: f64 = 4.0;

/// Width of the band around zero inside which a transformed residual counts
/// as exactly zero.
///
/// Draining a transformed state of magnitude at most one takes about
/// `1 / decrement` steps, each of which re-enters the transformed coordinate
/// through `κ ∘ κ⁻¹` and picks up a few ulps. Residuals below that
/// accumulated noise are indistinguishable from zero. The band never exceeds
/// half a decrement.
fn zero_band(decrement: f64) -> f64 {
    (ZERO_BAND_ULPS * f64::EPSILON / decrement).min(0.5 * decrement)
}

/// `max{residual, 0}` with the rounding band folded into zero.
fn clamp_residual(residual: f64, decrement: f64) -> f64 {
    if residual <= zero_band(decrement) {
        0.0
    } else {
        residual
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name: "h",
            value: h,
            reason: "step size must be positive and finite",
        })
    }
}

/// Exact discretization of the unperturbed system.
pub fn exact_step(p: &SystemParams, h: f64, xk: f64) -> Result<f64> {
    check_step(h)?;
    check_state(xk)?;
    if xk == 0.0 {
        return Ok(0.0);
    }
    let e = p.exponent();
    let decrement = h / p.rho1();
    let residual = clamp_residual(p.kappa().eval(xk.abs()).powf(e) - decrement, decrement);
    if residual == 0.0 {
        return Ok(0.0);
    }
    Ok(p.kappa().inverse(residual.powf(1.0 / e))? * sign(xk))
}

/// `y(x) = κ(|x|)^(1-ρ₂) sign(x)`, mapping the state line onto `(-1, 1)`.
pub fn transform(p: &SystemParams, x: f64) -> f64 {
    p.kappa().eval(x.abs()).powf(p.exponent()) * sign(x)
}

/// Inverse of [`transform`]: `κ⁻¹(|w|^{1/(1-ρ₂)}) sign(w)`.
pub fn inverse_transform(p: &SystemParams, w: f64) -> Result<f64> {
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(p.kappa().inverse(w.abs().powf(1.0 / p.exponent()))? * sign(w))
}

/// Solves `w' = w - gain · sign(w')` for `w'`.
///
/// The relation is single-valued: if `|w| <= gain` the only solution is
/// `w' = 0` (with `sign(0)` taking the value `w / gain`), otherwise `w'` keeps
/// the sign of `w` and its magnitude shrinks by `gain`.
pub fn implicit_sign_step(w: f64, gain: f64) -> f64 {
    let magnitude = clamp_residual(w.abs() - gain, gain);
    if magnitude == 0.0 {
        0.0
    } else {
        w - gain * sign(w)
    }
}

/// Exact discretization built as implicit Euler on the transformed system.
pub fn exact_step_via_transform(p: &SystemParams, h: f64, xk: f64) -> Result<f64> {
    check_step(h)?;
    check_state(xk)?;
    let w = transform(p, xk);
    let w_next = implicit_sign_step(w, h / p.rho1());
    inverse_transform(p, w_next)
}

/// Explicit (forward) Euler step of the unperturbed system.
pub fn euler_step(p: &SystemParams, h: f64, xk: f64) -> Result<f64> {
    check_step(h)?;
    Ok(xk + h * vector_field(p, xk)?)
}

/// Parameters of the perturbed closed loop `ẋ = u + Δ(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    rho1: f64,
    rho3: f64,
    delta: f64,
    kappa: K1Function,
    kappa0: f64,
    beta: f64,
}

impl ControlParams {
    /// Validates the parameters and derives `β = 1/ρ₁ + ρ₃ κ'(0)`.
    ///
    /// `κ'(0)` comes from the catalog metadata and must be finite, positive
    /// and dominate `κ'(r)` on a log grid over `[1e-8, 1e8]`. `ρ₃ < δ` is
    /// accepted but reported by [`ControlParams::gain_below_bound`].
    pub fn new(rho1: f64, rho3: f64, delta: f64, kappa: K1Function) -> Result<Self> {
        if !(rho1 > 0.0 && rho1.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "rho1",
                value: rho1,
                reason: "must be positive and finite",
            });
        }
        if !(rho3 >= 0.0 && rho3.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "rho3",
                value: rho3,
                reason: "must be nonnegative and finite",
            });
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "delta",
                value: delta,
                reason: "must be nonnegative and finite",
            });
        }
        let kappa0 = kappa.deriv_at_zero();
        if !kappa0.is_finite() {
            return Err(Error::ParameterDomain {
                name: "kappa'(0)",
                value: kappa0,
                reason: "derivative at zero must be finite",
            });
        }
        if kappa0 <= 0.0 {
            return Err(Error::ParameterDomain {
                name: "kappa'(0)",
                value: kappa0,
                reason: "derivative at zero must be strictly positive",
            });
        }
        if !dominates_on_log_grid(kappa0, |r| kappa.deriv(r)) {
            return Err(Error::ParameterDomain {
                name: "kappa'(0)",
                value: kappa0,
                reason: "derivative at zero must dominate kappa'(r) for all r >= 0",
            });
        }
        let beta = 1.0 / rho1 + rho3 * kappa0;
        Ok(Self {
            rho1,
            rho3,
            delta,
            kappa,
            kappa0,
            beta,
        })
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho3(&self) -> f64 {
        self.rho3
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> &K1Function {
        &self.kappa
    }

    pub fn kappa_prime_zero(&self) -> f64 {
        self.kappa0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ρ₃ < δ`: no settling guarantee.
    pub fn gain_below_bound(&self) -> bool {
        self.rho3 < self.delta
    }

    /// The unperturbed system with `ρ₂ = 0` that majorizes this loop.
    pub fn majorant(&self) -> SystemParams {
        SystemParams::new(self.rho1, 0.0, self.kappa.clone()).expect("rho1 validated")
    }
}

/// `κ'(0) >= κ'(r)` on a quarter-decade grid over `[1e-8, 1e8]`.
fn dominates_on_log_grid(kappa0: f64, deriv: impl Fn(f64) -> f64) -> bool {
    (-32..=32)
        .map(|i| 10f64.powf(i as f64 / 4.0))
        .all(|r| deriv(r) <= kappa0 * (1.0 + 1e-12))
}

/// Shape of a bounded disturbance signal.
#[derive(Clone)]
pub enum PerturbationKind {
    Zero,
    Constant(f64),
    /// `amp · sin(omega · t)`.
    Sine { amp: f64, omega: f64 },
    /// `-δ · sign(x)`, pushing the state toward the origin at full strength.
    Adversarial,
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationKind::Zero => write!(f, "Zero"),
            PerturbationKind::Constant(c) => write!(f, "Constant({c})"),
            PerturbationKind::Sine { amp, omega } => write!(f, "Sine {{ amp: {amp}, omega: {omega} }}"),
            PerturbationKind::Adversarial => write!(f, "Adversarial"),
            PerturbationKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A deterministic disturbance `Δ(t, x)` with declared bound `|Δ| <= δ`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    kind: PerturbationKind,
    bound: f64,
}

impl Perturbation {
    pub fn zero() -> Self {
        Self {
            kind: PerturbationKind::Zero,
            bound: 0.0,
        }
    }

    pub fn constant(value: f64, bound: f64) -> Result<Self> {
        check_bound(bound)?;
        if !(value.abs() <= bound) {
            return Err(Error::ParameterDomain {
                name: "pert.amp",
                value,
                reason: "constant perturbation exceeds its bound",
            });
        }
        Ok(Self {
            kind: PerturbationKind::Constant(value),
            bound,
        })
    }

    pub fn sine(amp: f64, omega: f64, bound: f64) -> Result<Self> {
        check_bound(bound)?;
        if !(amp.abs() <= bound) {
            return Err(Error::ParameterDomain {
                name: "pert.amp",
                value: amp,
                reason: "sinusoid amplitude exceeds its bound",
            });
        }
        if !omega.is_finite() {
            return Err(Error::ParameterDomain {
                name: "pert.omega",
                value: omega,
                reason: "must be finite",
            });
        }
        Ok(Self {
            kind: PerturbationKind::Sine { amp, omega },
            bound,
        })
    }

    pub fn adversarial(bound: f64) -> Result<Self> {
        check_bound(bound)?;
        Ok(Self {
            kind: PerturbationKind::Adversarial,
            bound,
        })
    }

    /// A user signal; it must be a pure function of `(t, x)`.
    pub fn custom<F>(signal: F, bound: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        check_bound(bound)?;
        Ok(Self {
            kind: PerturbationKind::Custom(Arc::new(signal)),
            bound,
        })
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `Δ(t, x)`, checked against the declared bound.
    pub fn evaluate(&self, t: f64, x: f64) -> Result<f64> {
        let value = match &self.kind {
            PerturbationKind::Zero => 0.0,
            PerturbationKind::Constant(c) => *c,
            PerturbationKind::Sine { amp, omega } => amp * (omega * t).sin(),
            PerturbationKind::Adversarial => -self.bound * sign(x),
            PerturbationKind::Custom(f) => f(t, x),
        };
        if value.abs() <= self.bound {
            Ok(value)
        } else {
            Err(Error::BoundViolation {
                t,
                x,
                value,
                bound: self.bound,
            })
        }
    }
}

fn check_bound(bound: f64) -> Result<()> {
    if bound >= 0.0 && bound.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name: "delta",
            value: bound,
            reason: "perturbation bound must be nonnegative and finite",
        })
    }
}

/// Implicit Euler map of the perturbed closed loop, sampled at `t = k h`.
pub fn consistent_perturbed_step(
    c: &ControlParams,
    h: f64,
    k: usize,
    xk: f64,
    pert: &Perturbation,
) -> Result<f64> {
    check_step(h)?;
    check_state(xk)?;
    let r = xk.abs();
    let disturbance = pert.evaluate(k as f64 * h, xk)?;
    let z = c.kappa.eval(r) * sign(xk) + h * c.kappa.deriv(r) * disturbance;
    let decrement = h * c.beta;
    let residual = clamp_residual(z.abs() - decrement, decrement);
    if residual == 0.0 {
        return Ok(0.0);
    }
    if residual >= 1.0 {
        return Err(Error::Internal(format!(
            "transformed magnitude {residual} left [0, 1); is rho3 < delta?"
        )));
    }
    Ok(c.kappa.inverse(residual)? * sign(z))
}

/// The feedback `u = -(1/ρ₁ + ρ₃ κ'(0)) / κ'(|x|) · sign(x)`.
pub fn controller_u(c: &ControlParams, x: f64) -> Result<f64> {
    check_state(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let d = c.kappa.deriv(x.abs());
    if d == 0.0 {
        return Err(Error::SingularField { x });
    }
    Ok(-c.beta / d * sign(x))
}

/// Explicit Euler step of the perturbed closed loop, sampled at `t = k h`.
pub fn euler_perturbed_step(
    c: &ControlParams,
    h: f64,
    k: usize,
    xk: f64,
    pert: &Perturbation,
) -> Result<f64> {
    check_step(h)?;
    let u = controller_u(c, xk)?;
    let disturbance = pert.evaluate(k as f64 * h, xk)?;
    Ok(xk + h * (u + disturbance))
}
