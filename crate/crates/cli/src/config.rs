//! Run configuration.
//!
//! A config is a flat `key = value` text file. Keys may be scoped to one
//! scheme either with a `[scheme]` section header or a `scheme.` prefix
//! (`euler.h = 0.01`); scoped values override the unscoped ones for that
//! scheme only. `#` starts a comment.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use ptd_core::sim::default_horizon;
use ptd_core::{ControlParams, Error as CoreError, K1Family, Model, Perturbation, Scheme, SystemParams};

/// Every key the parser accepts.
pub const KEYS: [&str; 19] = [
    "kappa.family",
    "kappa.a",
    "kappa.a1",
    "kappa.a2",
    "rho1",
    "rho2",
    "rho3",
    "delta",
    "pert.kind",
    "pert.amp",
    "pert.omega",
    "h",
    "x0",
    "steps",
    "schemes",
    "out",
    "seed",
    "sweep.min",
    "sweep.max",
];

/// Keys that describe the whole invocation and cannot be scoped to a scheme.
const GLOBAL_ONLY: [&str; 5] = ["schemes", "out", "seed", "sweep.min", "sweep.max"];

const PERTURBED_ONLY: [&str; 5] = ["rho3", "delta", "pert.kind", "pert.amp", "pert.omega"];
const UNPERTURBED_ONLY: [&str; 1] = ["rho2"];

pub const DEFAULT_OUT: &str = "ptd";
pub const DEFAULT_SWEEP_RANGE: (f64, f64) = (1e-6, 1e8);

/// A validation failure, naming the offending key when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn key(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "invalid config key `{k}`: {}", self.message),
            None => write!(f, "invalid config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Key/value pairs before interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    base: BTreeMap<String, String>,
    scoped: BTreeMap<&'static str, BTreeMap<String, String>>,
}

/// Splits `scheme.key` into its scope and key.
fn split_scope(key: &str) -> Result<(Option<Scheme>, &str), ConfigError> {
    if KEYS.contains(&key) {
        return Ok((None, key));
    }
    if let Some((head, rest)) = key.split_once('.') {
        if let Ok(scheme) = head.parse::<Scheme>() {
            if KEYS.contains(&rest) {
                return Ok((Some(scheme), rest));
            }
        }
    }
    Err(ConfigError::key(key, "unknown key"))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<Scheme> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(name.parse().map_err(|_| {
                    ConfigError::key(format!("[{name}]"), "section name is not a scheme")
                })?);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::general(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    i + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let (scope, bare) = split_scope(key)?;
            let scope = match (section, scope) {
                (Some(s), None) => Some(s),
                (Some(_), Some(_)) => {
                    return Err(ConfigError::key(key, "scheme prefix inside a section"))
                }
                (None, s) => s,
            };
            if raw.insert(scope, bare, value) {
                return Err(ConfigError::key(key, format!("duplicate key on line {}", i + 1)));
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::general(format!("cannot read `{}`: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override, replacing any earlier value.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::general(format!(
                "override `{assignment}` is not of the form key=value"
            )));
        };
        let (scope, bare) = split_scope(key.trim())?;
        self.insert(scope, bare, value.trim());
        Ok(())
    }

    /// Returns whether a value was already present.
    fn insert(&mut self, scope: Option<Scheme>, key: &str, value: &str) -> bool {
        let map = match scope {
            None => &mut self.base,
            Some(s) => self.scoped.entry(s.as_str()).or_default(),
        };
        map.insert(key.to_string(), value.to_string()).is_some()
    }

    fn lookup(&self, scheme: Scheme, key: &str) -> Option<&str> {
        self.scoped
            .get(scheme.as_str())
            .and_then(|m| m.get(key))
            .or_else(|| self.base.get(key))
            .map(String::as_str)
    }

    /// Interprets and validates the configuration.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        for (scope, map) in &self.scoped {
            if let Some(k) = map.keys().find(|k| GLOBAL_ONLY.contains(&k.as_str())) {
                return Err(ConfigError::key(
                    format!("{scope}.{k}"),
                    "cannot be scoped to a scheme",
                ));
            }
        }

        let schemes = parse_schemes(self.base.get("schemes").map(String::as_str))?;
        for scope in self.scoped.keys() {
            if !schemes.iter().any(|s| s.as_str() == *scope) {
                return Err(ConfigError::key(
                    format!("[{scope}]"),
                    "settings given for a scheme not listed in `schemes`",
                ));
            }
        }

        let perturbed = schemes[0].is_perturbed();
        let forbidden: &[&str] = if perturbed { &UNPERTURBED_ONLY } else { &PERTURBED_ONLY };
        for s in &schemes {
            if let Some(k) = forbidden.iter().find(|k| self.lookup(*s, k).is_some()) {
                let kind = if perturbed { "unperturbed" } else { "perturbed" };
                return Err(ConfigError::key(*k, format!("only applies to {kind} schemes")));
            }
        }

        let runs = schemes
            .iter()
            .map(|&s| self.resolve_scheme(s))
            .collect::<Result<Vec<_>, _>>()?;

        let out = self.base.get("out").cloned().unwrap_or_else(|| DEFAULT_OUT.to_string());
        if out.is_empty() {
            return Err(ConfigError::key("out", "must not be empty"));
        }
        let seed = match self.base.get("seed") {
            None => 0,
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| ConfigError::key("seed", format!("expected a nonnegative integer, got `{v}`")))?,
        };
        let lo = opt_number(self.base.get("sweep.min").map(String::as_str), "sweep.min")?
            .unwrap_or(DEFAULT_SWEEP_RANGE.0);
        let hi = opt_number(self.base.get("sweep.max").map(String::as_str), "sweep.max")?
            .unwrap_or(DEFAULT_SWEEP_RANGE.1);
        if lo <= 0.0 {
            return Err(ConfigError::key("sweep.min", "must be positive"));
        }
        if hi < lo {
            return Err(ConfigError::key("sweep.max", "must not be below sweep.min"));
        }

        Ok(RunConfig {
            runs,
            out,
            seed,
            sweep_range: (lo, hi),
        })
    }

    fn resolve_scheme(&self, scheme: Scheme) -> Result<SchemeRun, ConfigError> {
        let get = |k: &str| self.lookup(scheme, k);
        let num = |k: &'static str| opt_number(get(k), k);
        let require = |k: &'static str| {
            num(k)?.ok_or_else(|| ConfigError::key(k, format!("required by scheme `{scheme}`")))
        };

        let kappa = resolve_family(&get)?;
        let h = require("h")?;
        if h <= 0.0 {
            return Err(ConfigError::key("h", "must be positive"));
        }
        let x0 = require("x0")?;
        let rho1 = num("rho1")?.unwrap_or(1.0);

        let kf = ptd_core::make_k1(kappa).map_err(keyed)?;
        let (model, pert) = if scheme.is_perturbed() {
            let rho3 = require("rho3")?;
            let delta = require("delta")?;
            let c = ControlParams::new(rho1, rho3, delta, kf).map_err(keyed)?;
            let pert = resolve_perturbation(&get, delta)?;
            (Model::Perturbed(c), Some(pert))
        } else {
            let rho2 = num("rho2")?.unwrap_or(0.0);
            (Model::Unperturbed(SystemParams::new(rho1, rho2, kf).map_err(keyed)?), None)
        };

        let steps = match get("steps") {
            None => default_horizon(rho1, h),
            Some(v) => match v.parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => return Err(ConfigError::key("steps", format!("expected a positive integer, got `{v}`"))),
            },
        };

        Ok(SchemeRun {
            scheme,
            kappa,
            model,
            pert,
            h,
            x0,
            steps,
        })
    }
}

fn parse_schemes(value: Option<&str>) -> Result<Vec<Scheme>, ConfigError> {
    let value = value.ok_or_else(|| ConfigError::key("schemes", "required"))?;
    let mut schemes = Vec::new();
    for name in value.split(|c: char| c == ',' || c.is_whitespace()).filter(|n| !n.is_empty()) {
        let s: Scheme = name
            .parse()
            .map_err(|_| ConfigError::key("schemes", format!("unknown scheme `{name}`")))?;
        if schemes.contains(&s) {
            return Err(ConfigError::key("schemes", format!("`{name}` listed twice")));
        }
        schemes.push(s);
    }
    if schemes.is_empty() {
        return Err(ConfigError::key("schemes", "no scheme listed"));
    }
    if schemes.iter().any(|s| s.is_perturbed() != schemes[0].is_perturbed()) {
        return Err(ConfigError::key(
            "schemes",
            "perturbed and unperturbed schemes cannot share one config",
        ));
    }
    Ok(schemes)
}

fn opt_number(value: Option<&str>, key: &str) -> Result<Option<f64>, ConfigError> {
    let Some(v) = value else { return Ok(None) };
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Some(x)),
        Ok(_) => Err(ConfigError::key(key, "must be finite")),
        Err(_) => Err(ConfigError::key(key, format!("expected a number, got `{v}`"))),
    }
}

fn resolve_family<'a>(get: &impl Fn(&str) -> Option<&'a str>) -> Result<K1Family, ConfigError> {
    let num = |k: &'static str| opt_number(get(k), k);
    let family = get("kappa.family").unwrap_or("atan");
    let is_beta = family == "beta";
    let stray = if is_beta { ["kappa.a"].as_slice() } else { ["kappa.a1", "kappa.a2"].as_slice() };
    if let Some(k) = stray.iter().find(|k| get(k).is_some()) {
        return Err(ConfigError::key(*k, format!("not a parameter of the `{family}` family")));
    }
    let required = |k: &'static str| {
        num(k)?.ok_or_else(|| ConfigError::key(k, format!("required by the `{family}` family")))
    };
    Ok(match family {
        "atan" => K1Family::Atan { a: num("kappa.a")?.unwrap_or(1.0) },
        "rational" => K1Family::Rational { a: num("kappa.a")?.unwrap_or(1.0) },
        "exponential" => K1Family::Exponential { a: required("kappa.a")? },
        "gamma" => K1Family::GammaReg { a: required("kappa.a")? },
        "beta" => K1Family::BetaReg {
            a1: required("kappa.a1")?,
            a2: required("kappa.a2")?,
        },
        other => {
            return Err(ConfigError::key(
                "kappa.family",
                format!("unknown family `{other}` (expected atan, rational, exponential, gamma or beta)"),
            ))
        }
    })
}

fn resolve_perturbation<'a>(
    get: &impl Fn(&str) -> Option<&'a str>,
    delta: f64,
) -> Result<Perturbation, ConfigError> {
    let kind = get("pert.kind").ok_or_else(|| ConfigError::key("pert.kind", "required by perturbed schemes"))?;
    let amp = opt_number(get("pert.amp"), "pert.amp")?;
    let omega = opt_number(get("pert.omega"), "pert.omega")?;
    if kind != "sine" && omega.is_some() {
        return Err(ConfigError::key("pert.omega", format!("not used by `{kind}` perturbations")));
    }
    if matches!(kind, "zero" | "adversarial") && amp.is_some() {
        return Err(ConfigError::key("pert.amp", format!("not used by `{kind}` perturbations")));
    }
    let p = match kind {
        "zero" => Ok(Perturbation::zero()),
        "constant" => Perturbation::constant(amp.unwrap_or(delta), delta),
        "sine" => Perturbation::sine(amp.unwrap_or(delta), omega.unwrap_or(10.0 * PI), delta),
        "adversarial" => Perturbation::adversarial(delta),
        other => {
            return Err(ConfigError::key(
                "pert.kind",
                format!("unknown kind `{other}` (expected zero, constant, sine or adversarial)"),
            ))
        }
    };
    p.map_err(keyed)
}

/// Attaches the config key that corresponds to a core parameter error.
fn keyed(e: CoreError) -> ConfigError {
    match &e {
        CoreError::ParameterDomain { name, .. } => {
            let key = match *name {
                "a" => "kappa.a",
                "a1" => "kappa.a1",
                "a2" => "kappa.a2",
                "kappa'(0)" => "kappa.family",
                other => other,
            };
            ConfigError::key(key, e.to_string())
        }
        _ => ConfigError::general(e.to_string()),
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub runs: Vec<SchemeRun>,
    pub out: String,
    pub seed: u64,
    /// Magnitude range of the initial conditions drawn by `sweep`.
    pub sweep_range: (f64, f64),
}

/// One scheme with its resolved parameters.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub kappa: K1Family,
    pub model: Model,
    pub pert: Option<Perturbation>,
    pub h: f64,
    pub x0: f64,
    pub steps: usize,
}

impl SchemeRun {
    pub fn rho1(&self) -> f64 {
        self.model.rho1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT_VS_EULER: &str = "
        # atan, exact vs euler
        kappa.family = atan
        kappa.a = 1
        rho1 = 1
        rho2 = 0.5
        h = 0.02
        x0 = 10
        schemes = exact, euler
    ";

    fn err_key(text: &str) -> Option<String> {
        RawConfig::parse(text).and_then(|r| r.resolve()).unwrap_err().key
    }

    #[test]
    fn exact_vs_euler_resolves_with_default_horizon() {
        let cfg = RawConfig::parse(EXACT_VS_EULER).unwrap().resolve().unwrap();
        assert_eq!(cfg.runs.len(), 2);
        assert_eq!(cfg.runs[0].scheme, Scheme::Exact);
        assert_eq!(cfg.runs[1].steps, 100);
        assert_eq!(cfg.out, DEFAULT_OUT);
        assert!(cfg.runs[0].pert.is_none());
    }

    #[test]
    fn sections_and_prefixes_override_per_scheme() {
        let text = format!("{EXACT_VS_EULER}\n[euler]\nh = 0.05\n");
        let cfg = RawConfig::parse(&text).unwrap().resolve().unwrap();
        assert_eq!(cfg.runs[0].h, 0.02);
        assert_eq!(cfg.runs[1].h, 0.05);

        let mut raw = RawConfig::parse(EXACT_VS_EULER).unwrap();
        raw.set("exact.x0=3").unwrap();
        raw.set("steps = 7").unwrap();
        let cfg = raw.resolve().unwrap();
        assert_eq!((cfg.runs[0].x0, cfg.runs[1].x0), (3.0, 10.0));
        assert_eq!(cfg.runs[1].steps, 7);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(err_key(&format!("{EXACT_VS_EULER}\nbogus = 1")), Some("bogus".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("0.02", "-1")), Some("h".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("0.02", "abc")), Some("h".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("rho2 = 0.5", "rho2 = 1.5")), Some("rho2".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("kappa.a = 1", "kappa.a = 0")), Some("kappa.a".into()));
        assert_eq!(err_key(&format!("{EXACT_VS_EULER}\ndelta = 1")), Some("delta".into()));
        assert_eq!(err_key(&format!("{EXACT_VS_EULER}\nx0 = 2")), Some("x0".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("exact, euler", "exact, euler_perturbed")), Some("schemes".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("atan", "beta")), Some("kappa.a".into()));
        assert_eq!(err_key(&format!("{EXACT_VS_EULER}\n[euler]\nseed = 3")), Some("euler.seed".into()));
        assert_eq!(err_key(&format!("{EXACT_VS_EULER}\n[consistent_perturbed]\nh = 1")), Some("[consistent_perturbed]".into()));
        assert_eq!(err_key(&EXACT_VS_EULER.replace("x0 = 10", "")), Some("x0".into()));
    }

    #[test]
    fn perturbed_config() {
        let text = "
            schemes = consistent_perturbed euler_perturbed
            rho1 = 1
            rho3 = 1.1
            delta = 1
            pert.kind = sine
            h = 0.05
            x0 = 10
        ";
        let cfg = RawConfig::parse(text).unwrap().resolve().unwrap();
        match cfg.runs[0].pert.as_ref().unwrap().kind() {
            ptd_core::PerturbationKind::Sine { amp, omega } => {
                assert_eq!(*amp, 1.0);
                assert_eq!(*omega, 10.0 * PI);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(err_key(&format!("{text}\nrho2 = 0.5")), Some("rho2".into()));
        assert_eq!(err_key(&text.replace("sine", "square")), Some("pert.kind".into()));
        assert_eq!(err_key(&format!("{text}\npert.amp = 2")), Some("pert.amp".into()));
        assert_eq!(err_key(&text.replace("delta = 1", "")), Some("delta".into()));
        // κ'(0) is unbounded for gamma with a < 1, so the controller is undefined
        assert_eq!(
            err_key(&format!("{text}\nkappa.family = gamma\nkappa.a = 0.5")),
            Some("kappa.family".into())
        );
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert_eq!(err_key(&format!("{EXACT_VS_EULER}\nh = 0.1")), Some("h".into()));
        let e = RawConfig::parse("just words").unwrap_err();
        assert!(e.key.is_none() && e.message.contains("line 1"));
    }
}
