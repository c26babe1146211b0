//! Command-line front end for `ptd-core`.
//!
//! `ptd simulate` runs the schemes of a config and writes one CSV per scheme
//! plus a report, `ptd verify` runs a randomized property suite and
//! `ptd sweep` repeats a config over random initial conditions.

pub mod config;
pub mod output;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptd_core::sim::{settling_bound, DEFAULT_EULER_TOL};
use ptd_core::{compute_metrics, run, Metrics, Model, Trajectory};

use config::{ConfigError, RawConfig, RunConfig, SchemeRun};
use output::{float, opt_index, resolve_prefix, trajectory_csv, with_suffix, write_file, Report};
use suites::Suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SUITE_FAILED: i32 = 2;

/// Environment variable that redirects every output file to a directory.
pub const OUT_DIR_ENV: &str = "PTD_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ptd", version, about = "Exact and consistent discretization of predefined-time stable systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every scheme of a config once; write CSV trajectories and a report.
    Simulate(RunArgs),
    /// Run a randomized property suite: theorem1, corollary, proposition or k1.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Also write the full report to `<PREFIX>_verify_<suite>.txt`.
        #[arg(long, value_name = "PREFIX")]
        out: Option<String>,
    },
    /// Repeat a config over random initial conditions.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PREFIX")]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config key; repeatable. `scheme.key=value` scopes it.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    SuiteFailed(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<ptd_core::Error> for Failure {
    fn from(e: ptd_core::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command, reading
/// the output-directory override from the environment.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from);
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    execute(args, dir.as_deref(), &mut stdout, &mut stderr)
}

/// As [`main_with_args`] with explicit output directory and streams.
pub fn execute<I, T>(args: I, out_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            let _ = write!(stderr, "{}", e.render());
            return EXIT_INVALID;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => load(&a).and_then(|c| simulate(&c, out_dir, stdout)),
        Command::Verify { suite, seed, trials, out } => verify(&suite, seed, trials, out.as_deref(), out_dir, stdout),
        Command::Sweep { run, trials } => load(&run).and_then(|c| sweep(&c, trials, out_dir, stdout)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::SuiteFailed(msg)) => {
            let _ = writeln!(stderr, "failed: {msg}");
            EXIT_SUITE_FAILED
        }
    }
}

fn load(a: &RunArgs) -> Result<RunConfig, Failure> {
    let mut raw = match &a.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    for s in &a.set {
        raw.set(s)?;
    }
    if let Some(out) = &a.out {
        raw.set(&format!("out={out}"))?;
    }
    if let Some(seed) = a.seed {
        raw.set(&format!("seed={seed}"))?;
    }
    Ok(raw.resolve()?)
}

fn write(path: &Path, contents: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    write_file(path, contents).map_err(|e| Failure::Invalid(format!("cannot write `{}`: {e}", path.display())))?;
    let _ = writeln!(stdout, "wrote {}", path.display());
    Ok(())
}

fn simulate_one(r: &SchemeRun, x0: f64) -> Result<(Trajectory, Metrics), Failure> {
    let tr = run(r.scheme, &r.model, r.h, x0, r.steps, r.pert.as_ref())?;
    let m = compute_metrics(&tr, DEFAULT_EULER_TOL);
    Ok((tr, m))
}

fn gain_below_bound(r: &SchemeRun) -> Option<bool> {
    match &r.model {
        Model::Perturbed(c) => Some(c.gain_below_bound()),
        Model::Unperturbed(_) => None,
    }
}

/// Runs every scheme of `cfg`; writes `<out>_<scheme>.csv` and `<out>_report.txt`.
fn simulate(cfg: &RunConfig, out_dir: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let prefix = resolve_prefix(&cfg.out, out_dir);
    let mut report = Report::new();
    report.section("run").kv("seed", cfg.seed).kv("schemes", cfg.runs.len());
    let mut files = Vec::new();
    for r in &cfg.runs {
        let (tr, m) = simulate_one(r, r.x0)?;
        report
            .section(r.scheme.as_str())
            .kv("scheme", r.scheme)
            .kv("kappa", r.kappa)
            .num("rho1", r.rho1())
            .num("h", r.h)
            .num("x0", r.x0)
            .kv("steps", r.steps)
            .kv("settling_bound", settling_bound(r.rho1(), r.h));
        if let Some(flag) = gain_below_bound(r) {
            report.kv("gain_below_bound", flag);
        }
        report.kv("terminated_by", tr.terminated_by.as_str()).metrics(&m);
        files.push((with_suffix(&prefix, &format!("_{}.csv", r.scheme)), trajectory_csv(&tr)));
    }
    files.push((with_suffix(&prefix, "_report.txt"), report.into_string()));
    for (path, contents) in &files {
        write(path, contents, stdout)?;
    }
    Ok(())
}

fn verify(
    suite: &str,
    seed: u64,
    trials: usize,
    out: Option<&str>,
    out_dir: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let suite: Suite = suite.parse().map_err(Failure::Invalid)?;
    if trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    let rep = suites::run_suite(suite, seed, trials);
    let text = rep.render();
    let target = match (out, out_dir) {
        (Some(p), d) => Some(resolve_prefix(p, d)),
        (None, Some(d)) => Some(d.join("ptd")),
        (None, None) => None,
    };
    match target {
        Some(prefix) => {
            let summary = text.split("\n[trials]").next().unwrap_or(&text);
            let _ = writeln!(stdout, "{summary}");
            write(&with_suffix(&prefix, &format!("_verify_{suite}.txt")), &text, stdout)?;
        }
        None => {
            let _ = write!(stdout, "{text}");
        }
    }
    if rep.passed() {
        Ok(())
    } else {
        let n = rep.failures().count();
        Err(Failure::SuiteFailed(format!("{n} of {trials} {suite} trials failed")))
    }
}

const SWEEP_HEADER: &str = "trial,scheme,x0,terminated_by,settling_step,tail_oscillation_amplitude,max_abs_state,blew_up";

/// Runs every scheme from `trials` initial conditions with magnitudes
/// log-uniform over the config's sweep range and random signs.
///
/// Fails with the suite status when an exact or consistent run (with
/// `ρ₃ >= δ`) does not settle by `⌈ρ₁/h⌉`.
fn sweep(cfg: &RunConfig, trials: usize, out_dir: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    if trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.sweep_range.0.log10(), cfg.sweep_range.1.log10());
    let x0s: Vec<f64> = (0..trials)
        .map(|_| {
            let m = 10f64.powf(if hi > lo { rng.random_range(lo..=hi) } else { lo });
            if rng.random_bool(0.5) {
                -m
            } else {
                m
            }
        })
        .collect();

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    let mut report = Report::new();
    report
        .section("sweep")
        .kv("seed", cfg.seed)
        .kv("trials", trials)
        .num("sweep.min", cfg.sweep_range.0)
        .num("sweep.max", cfg.sweep_range.1);
    let mut violations = 0;
    for r in &cfg.runs {
        let bound = settling_bound(r.rho1(), r.h);
        let guaranteed = r.scheme.is_consistent() && gain_below_bound(r) != Some(true);
        let (mut settled, mut blew_up, mut worst, mut late) = (0, 0, None::<usize>, 0);
        let mut max_tail = 0.0f64;
        for (i, &x0) in x0s.iter().enumerate() {
            let (tr, m) = simulate_one(r, x0)?;
            csv.push_str(&format!(
                "{i},{},{},{},{},{},{},{}\n",
                r.scheme,
                float(x0),
                tr.terminated_by.as_str(),
                opt_index(m.settling_step),
                float(m.tail_oscillation_amplitude),
                float(m.max_abs_state),
                m.blew_up
            ));
            settled += m.settling_step.is_some() as usize;
            blew_up += m.blew_up as usize;
            max_tail = max_tail.max(m.tail_oscillation_amplitude);
            worst = worst.max(m.settling_step);
            if guaranteed && !m.settling_step.is_some_and(|k| k <= bound) {
                late += 1;
            }
        }
        violations += late;
        report
            .section(r.scheme.as_str())
            .kv("scheme", r.scheme)
            .kv("kappa", r.kappa)
            .num("h", r.h)
            .kv("steps", r.steps)
            .kv("settling_bound", bound)
            .kv("settled_runs", settled)
            .kv("blew_up_runs", blew_up)
            .kv("max_settling_step", opt_index(worst))
            .num("max_tail_oscillation_amplitude", max_tail);
        if guaranteed {
            report.kv("bound_violations", late);
        }
    }
    let prefix = resolve_prefix(&cfg.out, out_dir);
    write(&with_suffix(&prefix, "_sweep.csv"), &csv, stdout)?;
    write(&with_suffix(&prefix, "_sweep_report.txt"), report.as_str(), stdout)?;
    if violations > 0 {
        return Err(Failure::SuiteFailed(format!("{violations} runs exceeded their settling bound")));
    }
    Ok(())
}
