//! Randomized property suites behind `ptd verify`.
//!
//! Trial `i` of a suite draws its parameters from a ChaCha8 generator seeded
//! with the suite seed on stream `i`, so each trial is reproducible on its
//! own and independent of the trial count.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptd_core::quad::tanh_sinh;
use ptd_core::sim::{comparison_lemma_check_tol, first_majorization_violation, settling_bound};
use ptd_core::{
    compute_metrics, exact_solution, exact_step, make_k1, run, ControlParams, K1Family, Model,
    Perturbation, Scheme, SystemParams, Termination,
};

use crate::output::{float, Report};

/// Relative slack for the comparison-lemma inequalities, which compare
/// magnitudes recomputed through `κ` and `κ⁻¹`.
pub const LEMMA_RTOL: f64 = 1e-12;
pub const THEOREM1_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    Corollary,
    Proposition,
    K1,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Theorem1, Suite::Corollary, Suite::Proposition, Suite::K1];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Corollary => "corollary",
            Suite::Proposition => "proposition",
            Suite::K1 => "k1",
        }
    }

    fn error_metric(self) -> &'static str {
        match self {
            Suite::Theorem1 => "max |x_k - x(kh)| / max(1, |x(kh)|)",
            Suite::Corollary | Suite::Proposition => "steps past ceil(rho1/h) before settling",
            Suite::K1 => "max round-trip error, relative in r and absolute in y",
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            Suite::Theorem1 => THEOREM1_TOL,
            Suite::Corollary | Suite::Proposition => 0.0,
            Suite::K1 => ROUND_TRIP_TOL,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected theorem1, corollary, proposition or k1)"))
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub index: usize,
    pub case: String,
    pub passed: bool,
    pub error: f64,
    /// Why the trial failed, when it did.
    pub detail: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub outcomes: Vec<TrialOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    /// The trial with the largest error; NaN counts as largest.
    pub fn worst(&self) -> Option<&TrialOutcome> {
        self.outcomes.iter().max_by(|a, b| {
            let key = |e: f64| if e.is_nan() { f64::INFINITY } else { e };
            key(a.error).total_cmp(&key(b.error))
        })
    }

    pub fn worst_error(&self) -> f64 {
        self.worst().map_or(0.0, |o| o.error)
    }

    pub fn render(&self) -> String {
        let mut r = Report::new();
        let failed = self.failures().count();
        r.section("summary")
            .kv("suite", self.suite)
            .kv("seed", self.seed)
            .kv("trials", self.outcomes.len())
            .kv("error_metric", self.suite.error_metric())
            .num("tolerance", self.suite.tolerance())
            .kv("passed", self.outcomes.len() - failed)
            .kv("failed", failed)
            .num("worst_case_error", self.worst_error())
            .kv("worst_trial", self.worst().map_or_else(|| "none".into(), |o| o.index.to_string()))
            .kv("result", if failed == 0 { "pass" } else { "fail" });
        r.section("trials");
        for o in &self.outcomes {
            let verdict = if o.passed { "pass" } else { "fail" };
            let detail = o.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default();
            r.kv(
                &format!("trial.{}", o.index),
                format_args!("{verdict} error={}{detail} {}", float(o.error), o.case),
            );
        }
        r.into_string()
    }
}

pub fn run_suite(suite: Suite, seed: u64, trials: usize) -> SuiteReport {
    let outcomes = (0..trials)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (case, result) = match suite {
                Suite::Theorem1 => theorem1_trial(&mut rng),
                Suite::Corollary => corollary_trial(&mut rng),
                Suite::Proposition => proposition_trial(&mut rng),
                Suite::K1 => k1_trial(&mut rng),
            };
            let (passed, error, detail) = match result {
                Ok((error, None)) => (true, error, None),
                Ok((error, Some(why))) => (false, error, Some(why)),
                Err(e) => (false, f64::INFINITY, Some(e.to_string())),
            };
            TrialOutcome {
                index: i,
                case,
                passed,
                error,
                detail,
            }
        })
        .collect();
    SuiteReport {
        suite,
        seed,
        outcomes,
    }
}

/// Trial error and, for a failed trial, the reason.
type TrialResult = ptd_core::Result<(f64, Option<String>)>;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..=hi.log10()))
}

fn signed_log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = log_uniform(rng, lo, hi);
    if rng.random_bool(0.5) {
        -m
    } else {
        m
    }
}

fn closed_form_family(rng: &mut ChaCha8Rng) -> K1Family {
    match rng.random_range(0..3) {
        0 => K1Family::Atan { a: log_uniform(rng, 0.1, 10.0) },
        1 => K1Family::Rational { a: log_uniform(rng, 0.1, 10.0) },
        _ => K1Family::Exponential { a: rng.random_range(1.5..=10.0) },
    }
}

fn any_family(rng: &mut ChaCha8Rng) -> K1Family {
    match rng.random_range(0..5) {
        0 => K1Family::Atan { a: log_uniform(rng, 1e-2, 1e2) },
        1 => K1Family::Rational { a: log_uniform(rng, 1e-2, 1e2) },
        2 => K1Family::Exponential { a: rng.random_range(1.05..=10.0) },
        3 => K1Family::GammaReg { a: log_uniform(rng, 0.2, 20.0) },
        _ => K1Family::BetaReg {
            a1: log_uniform(rng, 0.2, 20.0),
            a2: log_uniform(rng, 0.2, 20.0),
        },
    }
}

/// Iterated exact steps against the closed-form solution at every sample.
fn theorem1_trial(rng: &mut ChaCha8Rng) -> (String, TrialResult) {
    let fam = closed_form_family(rng);
    let rho1 = rng.random_range(0.1..=10.0);
    let rho2 = [0.0, 0.3, 0.7][rng.random_range(0..3)];
    let h = [1e-3, 1e-2, 1e-1][rng.random_range(0..3)];
    let x0 = signed_log_uniform(rng, 1e-6, 1e8);
    let case = format!("family={fam} rho1={rho1} rho2={rho2} h={h} x0={x0}");
    let result = (|| {
        let p = SystemParams::new(rho1, rho2, make_k1(fam)?)?;
        let tr = run(Scheme::Exact, &Model::Unperturbed(p.clone()), h, x0, settling_bound(rho1, h) + 1, None)?;
        let mut worst = 0.0f64;
        for s in &tr.samples {
            let truth = exact_solution(&p, x0, s.t)?;
            worst = worst.max((s.x - truth).abs() / truth.abs().max(1.0));
        }
        let why = (!(worst <= THEOREM1_TOL)).then(|| "solution mismatch".to_string());
        Ok((worst, why))
    })();
    (case, result)
}

/// Settling step of an exact or consistent run against `⌈ρ₁/h⌉`.
fn settling_verdict(tr: &ptd_core::Trajectory, bound: usize) -> (f64, Option<String>) {
    let m = compute_metrics(tr, ptd_core::sim::DEFAULT_EULER_TOL);
    match (tr.terminated_by, m.settling_step) {
        (Termination::Settled, Some(k)) if k <= bound => (0.0, None),
        (Termination::Settled, Some(k)) => ((k - bound) as f64, Some(format!("settled at {k} > {bound}"))),
        (t, _) => (f64::INFINITY, Some(format!("did not settle (terminated by {})", t.as_str()))),
    }
}

fn corollary_trial(rng: &mut ChaCha8Rng) -> (String, TrialResult) {
    let fam = closed_form_family(rng);
    let rho1 = rng.random_range(0.1..=10.0);
    let rho2 = rng.random_range(0.0..=0.9);
    let h = log_uniform(rng, 1e-3, 0.5);
    let x0 = signed_log_uniform(rng, 1e-6, 1e8);
    let scheme = if rng.random_bool(0.5) { Scheme::Exact } else { Scheme::ExactTransform };
    let case = format!("scheme={scheme} family={fam} rho1={rho1} rho2={rho2} h={h} x0={x0}");
    let result = (|| {
        let p = SystemParams::new(rho1, rho2, make_k1(fam)?)?;
        let n = settling_bound(rho1, h);
        let tr = run(scheme, &Model::Unperturbed(p), h, x0, 2 * n + 2, None)?;
        Ok(settling_verdict(&tr, n))
    })();
    (case, result)
}

fn proposition_trial(rng: &mut ChaCha8Rng) -> (String, TrialResult) {
    let fam = closed_form_family(rng);
    let rho1 = rng.random_range(0.1..=10.0);
    let delta = rng.random_range(0.0..=2.0);
    let surplus = if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..=1.0) };
    let rho3 = delta * (1.0 + surplus);
    let h = log_uniform(rng, 1e-3, 0.5);
    let x0 = signed_log_uniform(rng, 1e-6, 1e8);
    let kind = rng.random_range(0..4);
    let value = rng.random_range(-1.0..=1.0) * delta;
    let omega = rng.random_range(0.0..=20.0 * PI);
    let pert = match kind {
        0 => Ok(Perturbation::zero()),
        1 => Perturbation::constant(value, delta),
        2 => Perturbation::sine(value.abs(), omega, delta),
        _ => Perturbation::adversarial(delta),
    };
    let pert_desc = match kind {
        0 => "zero".to_string(),
        1 => format!("constant({value})"),
        2 => format!("sine(amp={}, omega={omega})", value.abs()),
        _ => "adversarial".to_string(),
    };
    let case = format!("family={fam} rho1={rho1} rho3={rho3} delta={delta} pert={pert_desc} h={h} x0={x0}");
    let result = (|| {
        let pert = pert?;
        let c = ControlParams::new(rho1, rho3, delta, make_k1(fam)?)?;
        let n = settling_bound(rho1, h);
        let tr = run(Scheme::ConsistentPerturbed, &Model::Perturbed(c.clone()), h, x0, 2 * n + 2, Some(&pert))?;
        let (err, why) = settling_verdict(&tr, n);
        if why.is_some() {
            return Ok((err, why));
        }
        if let Some(k) = first_majorization_violation(&c, &tr) {
            return Ok((err, Some(format!("majorization fails at step {k}"))));
        }
        let majorant = c.majorant();
        let f = |u: f64| exact_step(&majorant, h, u).map_or(f64::NAN, f64::abs);
        let v: Vec<f64> = tr.samples.iter().map(|s| s.x.abs()).collect();
        if !comparison_lemma_check_tol(f, x0.abs(), &v, v.len() - 1, LEMMA_RTOL)? {
            return Ok((err, Some("comparison lemma returned false".into())));
        }
        Ok((err, None))
    })();
    (case, result)
}

/// Round trips, monotonicity and normalization of one random catalog member.
fn k1_trial(rng: &mut ChaCha8Rng) -> (String, TrialResult) {
    let fam = any_family(rng);
    let ys: Vec<f64> = (0..8).map(|_| log_uniform(rng, 1e-6, 0.999)).collect();
    let rs: Vec<f64> = (0..8).map(|_| log_uniform(rng, 1e-6, 1e6)).collect();
    let pairs: Vec<(f64, f64)> = (0..32)
        .map(|_| {
            let a = log_uniform(rng, 1e-8, 1e8);
            let b = log_uniform(rng, 1e-8, 1e8);
            (a.min(b), a.max(b))
        })
        .collect();
    let big_r = log_uniform(rng, 0.1, 100.0);
    let case = format!("family={fam} R={big_r}");
    let result = (|| {
        let kf = make_k1(fam)?;
        let mut worst = 0.0f64;
        let mut why = None;
        for &y in &ys {
            let e = (kf.eval(kf.inverse(y)?) - y).abs();
            worst = worst.max(e);
            if !(e <= ROUND_TRIP_TOL) {
                why.get_or_insert(format!("y round trip at {y}"));
            }
        }
        for &r in &rs {
            let y = kf.eval(r);
            // skip arguments where κ has saturated in double precision
            if !(y > f64::MIN_POSITIVE && y < 0.99) {
                continue;
            }
            let e = (kf.inverse(y)? - r).abs() / r;
            worst = worst.max(e);
            if !(e <= ROUND_TRIP_TOL) {
                why.get_or_insert(format!("r round trip at {r}"));
            }
        }
        for &(a, b) in &pairs {
            if b / a < 1.0 + 1e-6 {
                continue;
            }
            let (ka, kb) = (kf.eval(a), kf.eval(b));
            let strict = ka > f64::MIN_POSITIVE && kb < 1.0 - 1e-12;
            if ka > kb || (strict && ka >= kb) {
                why.get_or_insert(format!("not increasing on [{a}, {b}]"));
            }
        }
        let q = tanh_sinh(|r| kf.deriv(r), 0.0, big_r, 1e-14);
        if !((q.value - kf.eval(big_r)).abs() <= NORMALIZATION_TOL) {
            why.get_or_insert("density does not integrate to kappa".into());
        }
        Ok((worst, why))
    })();
    (case, result)
}
