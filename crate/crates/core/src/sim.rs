//! Fixed-step simulation, trajectory metrics and the discrete comparison lemma.

use std::fmt;
use std::str::FromStr;

use crate::continuous::{sign, SystemParams};
use crate::discretize::{
    consistent_perturbed_step, controller_u, euler_perturbed_step, euler_step, exact_step,
    exact_step_via_transform, ControlParams, Perturbation,
};
use crate::error::{Error, Result};

/// A run stops as diverged once `|x| > BLOW_UP_FACTOR · max(1, |x0|)`.
pub const BLOW_UP_FACTOR: f64 = 1e6;

/// Default settling tolerance for the explicit schemes.
pub const DEFAULT_EULER_TOL: f64 = 1e-6;

/// Fraction of the horizon over which the tail oscillation is measured.
pub const TAIL_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Exact,
    ExactTransform,
    Euler,
    ConsistentPerturbed,
    EulerPerturbed,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Exact,
        Scheme::ExactTransform,
        Scheme::Euler,
        Scheme::ConsistentPerturbed,
        Scheme::EulerPerturbed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Exact => "exact",
            Scheme::ExactTransform => "exact_transform",
            Scheme::Euler => "euler",
            Scheme::ConsistentPerturbed => "consistent_perturbed",
            Scheme::EulerPerturbed => "euler_perturbed",
        }
    }

    /// Schemes driven by [`ControlParams`] and a [`Perturbation`].
    pub fn is_perturbed(self) -> bool {
        matches!(self, Scheme::ConsistentPerturbed | Scheme::EulerPerturbed)
    }

    /// Schemes that reach the origin exactly rather than up to a tolerance.
    pub fn is_consistent(self) -> bool {
        !matches!(self, Scheme::Euler | Scheme::EulerPerturbed)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown scheme `{s}`")))
    }
}

/// Parameters for either family of schemes.
#[derive(Debug, Clone)]
pub enum Model {
    Unperturbed(SystemParams),
    Perturbed(ControlParams),
}

impl Model {
    pub fn rho1(&self) -> f64 {
        match self {
            Model::Unperturbed(p) => p.rho1(),
            Model::Perturbed(c) => c.rho1(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Horizon,
    Settled,
    BlowUp,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::Settled => "settled",
            Termination::BlowUp => "blow_up",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One recorded step. For perturbed schemes `u` is the control applied over
/// `[kh, (k+1)h)` and `delta` the sampled disturbance `Δ(kh, x_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub k: usize,
    pub t: f64,
    pub x: f64,
    pub u: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub h: f64,
    pub x0: f64,
    pub horizon_steps: usize,
    pub samples: Vec<Sample>,
    pub terminated_by: Termination,
}

/// `⌈ρ₁ / h⌉`, the step by which consistent schemes are guaranteed to settle.
pub fn settling_bound(rho1: f64, h: f64) -> usize {
    (rho1 / h).ceil() as usize
}

/// `⌈2ρ₁ / h⌉`.
pub fn default_horizon(rho1: f64, h: f64) -> usize {
    (2.0 * rho1 / h).ceil() as usize
}

/// Iterates `scheme` from `x0` for at most `horizon_steps` steps.
///
/// The run ends early once two consecutive states are exactly zero (the
/// second being the confirming step) or once the state leaves the blow-up
/// cutoff.
pub fn run(
    scheme: Scheme,
    model: &Model,
    h: f64,
    x0: f64,
    horizon_steps: usize,
    pert: Option<&Perturbation>,
) -> Result<Trajectory> {
    if horizon_steps == 0 {
        return Err(Error::Configuration("horizon_steps must be at least 1".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Configuration(format!("step size must be positive, got {h}")));
    }
    if !x0.is_finite() {
        return Err(Error::Configuration(format!("initial state must be finite, got {x0}")));
    }
    let stepper = Stepper::new(scheme, model, h, pert)?;
    let cutoff = BLOW_UP_FACTOR * x0.abs().max(1.0);

    let mut samples = Vec::with_capacity(horizon_steps.min(1 << 16) + 1);
    let mut record = |k: usize, x: f64, note: Option<(Option<f64>, Option<f64>)>| {
        let (u, delta) = note.unwrap_or((None, None));
        samples.push(Sample {
            k,
            t: k as f64 * h,
            x,
            u,
            delta,
        });
    };

    let mut k = 0;
    let mut x = x0;
    let terminated_by = loop {
        if k == horizon_steps {
            record(k, x, stepper.annotate(k, x));
            break Termination::Horizon;
        }
        let (next, u, delta) = stepper.advance(k, x)?;
        record(k, x, Some((u, delta)));
        if !next.is_finite() || next.abs() > cutoff {
            record(k + 1, next, stepper.annotate(k + 1, next));
            break Termination::BlowUp;
        }
        if x == 0.0 && next == 0.0 {
            record(k + 1, next, stepper.annotate(k + 1, next));
            break Termination::Settled;
        }
        x = next;
        k += 1;
    };

    Ok(Trajectory {
        scheme,
        h,
        x0,
        horizon_steps,
        samples,
        terminated_by,
    })
}

enum Stepper<'a> {
    Unperturbed {
        scheme: Scheme,
        p: &'a SystemParams,
        h: f64,
    },
    Perturbed {
        scheme: Scheme,
        c: &'a ControlParams,
        pert: &'a Perturbation,
        h: f64,
    },
}

impl<'a> Stepper<'a> {
    fn new(
        scheme: Scheme,
        model: &'a Model,
        h: f64,
        pert: Option<&'a Perturbation>,
    ) -> Result<Self> {
        match (scheme.is_perturbed(), model, pert) {
            (false, Model::Unperturbed(p), None) => Ok(Stepper::Unperturbed { scheme, p, h }),
            (true, Model::Perturbed(c), Some(pert)) => Ok(Stepper::Perturbed { scheme, c, pert, h }),
            (false, Model::Perturbed(_), _) => Err(Error::Configuration(format!(
                "scheme `{scheme}` needs unperturbed system parameters"
            ))),
            (false, _, Some(_)) => Err(Error::Configuration(format!(
                "scheme `{scheme}` does not take a perturbation"
            ))),
            (true, Model::Unperturbed(_), _) => Err(Error::Configuration(format!(
                "scheme `{scheme}` needs control parameters"
            ))),
            (true, _, None) => Err(Error::Configuration(format!(
                "scheme `{scheme}` needs a perturbation"
            ))),
        }
    }

    /// Next state together with the applied control and disturbance.
    fn advance(&self, k: usize, x: f64) -> Result<(f64, Option<f64>, Option<f64>)> {
        match *self {
            Stepper::Unperturbed { scheme, p, h } => {
                let next = match scheme {
                    Scheme::Exact => exact_step(p, h, x)?,
                    Scheme::ExactTransform => exact_step_via_transform(p, h, x)?,
                    Scheme::Euler => diverge_if_singular(euler_step(p, h, x), x)?,
                    _ => unreachable!("perturbed scheme with unperturbed stepper"),
                };
                Ok((next, None, None))
            }
            Stepper::Perturbed { scheme, c, pert, h } => {
                let disturbance = pert.evaluate(k as f64 * h, x)?;
                match scheme {
                    Scheme::ConsistentPerturbed => {
                        let next = consistent_perturbed_step(c, h, k, x, pert)?;
                        // Average control that reproduces the step under the sampled disturbance.
                        let u = (next - x) / h - disturbance;
                        Ok((next, Some(u), Some(disturbance)))
                    }
                    Scheme::EulerPerturbed => {
                        let next = diverge_if_singular(euler_perturbed_step(c, h, k, x, pert), x)?;
                        let u = diverge_if_singular(controller_u(c, x), x)?;
                        Ok((next, Some(u), Some(disturbance)))
                    }
                    _ => unreachable!("unperturbed scheme with perturbed stepper"),
                }
            }
        }
    }

    /// Control and disturbance for a final sample that is not stepped from.
    fn annotate(&self, k: usize, x: f64) -> Option<(Option<f64>, Option<f64>)> {
        match self {
            Stepper::Unperturbed { .. } => None,
            Stepper::Perturbed { .. } => self.advance(k, x).ok().map(|(_, u, d)| (u, d)),
        }
    }
}

/// An explicit update through a field whose `κ'` underflowed is unbounded;
/// it becomes an infinite state so the run ends as a blow-up.
fn diverge_if_singular(step: Result<f64>, x: f64) -> Result<f64> {
    match step {
        Err(Error::SingularField { .. }) => Ok(-sign(x) * f64::INFINITY),
        other => other,
    }
}

/// Summary statistics of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// First step from which the state stays at zero (exactly for consistent
    /// schemes, within `tol` for explicit ones).
    pub settling_step: Option<usize>,
    /// `max |x_k|` over the final quarter of the horizon.
    pub tail_oscillation_amplitude: f64,
    pub max_abs_state: f64,
    pub blew_up: bool,
}

/// Computes [`Metrics`]; `tol` is used only by the explicit schemes.
pub fn compute_metrics(tr: &Trajectory, tol: f64) -> Metrics {
    let settled = |x: f64| {
        if tr.scheme.is_consistent() {
            x == 0.0
        } else {
            x.abs() <= tol
        }
    };
    let blew_up = tr.terminated_by == Termination::BlowUp;

    let settling_step = if blew_up {
        None
    } else {
        match tr.samples.iter().rposition(|s| !settled(s.x)) {
            None => tr.samples.first().map(|s| s.k),
            Some(i) => tr.samples.get(i + 1).map(|s| s.k),
        }
    };

    let tail: &[Sample] = if blew_up {
        let n = tr.samples.len();
        let len = ((n as f64 * TAIL_FRACTION).ceil() as usize).max(1).min(n);
        &tr.samples[n - len..]
    } else {
        let start = tr.horizon_steps - (tr.horizon_steps as f64 * TAIL_FRACTION).floor() as usize;
        let first = tr.samples.partition_point(|s| s.k < start);
        &tr.samples[first..]
    };

    Metrics {
        settling_step,
        tail_oscillation_amplitude: tail.iter().map(|s| abs_or_inf(s.x)).fold(0.0, f64::max),
        max_abs_state: tr.samples.iter().map(|s| abs_or_inf(s.x)).fold(0.0, f64::max),
        blew_up,
    }
}

fn abs_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.abs()
    }
}

/// Discrete comparison lemma as an executable check.
///
/// With `u_{k+1} = f(u_k)` for a non-decreasing `f`, any sequence satisfying
/// `v_{k+1} <= f(v_k)` and `v_0 <= u_0` stays below `u_k`. The hypotheses are
/// verified first; a violated hypothesis is an error, distinct from a
/// `false` result. Comparisons are exact.
pub fn comparison_lemma_check<F>(f: F, u0: f64, v_seq: &[f64], n: usize) -> Result<bool>
where
    F: Fn(f64) -> f64,
{
    comparison_lemma_check_tol(f, u0, v_seq, n, 0.0)
}

/// [`comparison_lemma_check`] where every inequality `a <= b` is relaxed to
/// `a <= b + rtol · |b|`, to absorb rounding in `f`.
pub fn comparison_lemma_check_tol<F>(f: F, u0: f64, v_seq: &[f64], n: usize, rtol: f64) -> Result<bool>
where
    F: Fn(f64) -> f64,
{
    let le = |a: f64, b: f64| a <= b + rtol * b.abs();
    if v_seq.len() <= n {
        return Err(Error::Precondition(format!(
            "need v_0..=v_{n}, got {} values",
            v_seq.len()
        )));
    }
    if !le(v_seq[0], u0) {
        return Err(Error::Precondition(format!(
            "v_0 = {} exceeds u_0 = {u0}",
            v_seq[0]
        )));
    }
    for k in 0..n {
        let bound = f(v_seq[k]);
        if !le(v_seq[k + 1], bound) {
            return Err(Error::Precondition(format!(
                "v_{} = {} exceeds f(v_{k}) = {bound}",
                k + 1,
                v_seq[k + 1]
            )));
        }
    }
    let mut u = u0;
    for (k, &v) in v_seq.iter().enumerate().take(n + 1) {
        if k > 0 {
            u = f(u);
        }
        if !le(v, u) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rounding allowance for the majorization check, in the `κ` coordinate.
const MAJORIZATION_SLACK: f64 = 16.0 * f64::EPSILON;

/// First step `k` at which `|x_{k+1}| <= κ⁻¹(max{κ(|x_k|) - h/ρ₁, 0})` fails.
///
/// The inequality is checked after applying `κ` to both sides, where it
/// reads `κ(|x_{k+1}|) <= max{κ(|x_k|) - h/ρ₁, 0}` and rounding stays at the
/// ulp level for every state magnitude.
pub fn first_majorization_violation(c: &ControlParams, tr: &Trajectory) -> Option<usize> {
    let kappa = c.kappa();
    let decrement = tr.h / c.rho1();
    tr.samples.windows(2).find_map(|w| {
        let (a, b) = (w[0].x, w[1].x);
        if !a.is_finite() || !b.is_finite() {
            return Some(w[0].k);
        }
        let bound = (kappa.eval(a.abs()) - decrement).max(0.0);
        (kappa.eval(b.abs()) > bound + MAJORIZATION_SLACK).then_some(w[0].k)
    })
}
