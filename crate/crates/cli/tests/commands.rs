use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ptd_cli::{execute, EXIT_INVALID, EXIT_OK};

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Runs the command in-process; returns (status, stdout, stderr).
fn ptd(args: &[&str], dir: &Path) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("ptd").chain(args.iter().copied());
    let code = execute(argv, Some(dir), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Rows of a CSV as (k, x, u, delta_val) with empty fields as `None`.
fn rows(path: &Path) -> Vec<(usize, f64, Option<f64>, Option<f64>)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,t,x,u,delta_val"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 5, "{l}");
            let opt = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
            (f[0].parse().unwrap(), f[2].parse().unwrap(), opt(f[3]), opt(f[4]))
        })
        .collect()
}

/// `key = value` pairs of one report section.
fn section(report: &str, name: &str) -> Vec<(String, String)> {
    report
        .split(&format!("[{name}]\n"))
        .nth(1)
        .unwrap_or_else(|| panic!("no section {name}"))
        .lines()
        .take_while(|l| !l.is_empty())
        .map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn get<'a>(sec: &'a [(String, String)], key: &str) -> &'a str {
    &sec.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no key {key}")).1
}

fn file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn exact_against_euler_writes_two_csvs_and_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = ptd(&["simulate", "--config", &config("exact_vs_euler.conf")], dir.path());
    assert_eq!(code, EXIT_OK);
    assert_eq!(stdout.lines().count(), 3);

    let exact = rows(&file(dir.path(), "exact_vs_euler_exact.csv"));
    assert!(exact.iter().filter(|r| r.0 >= 50).all(|r| r.1 == 0.0));
    assert!(exact.iter().all(|r| r.2.is_none() && r.3.is_none()));
    assert_eq!(exact[0].1, 10.0);
    let euler = rows(&file(dir.path(), "exact_vs_euler_euler.csv"));
    assert_eq!(euler.len(), 101);

    let report = fs::read_to_string(file(dir.path(), "exact_vs_euler_report.txt")).unwrap();
    let s = section(&report, "exact");
    assert_eq!(get(&s, "terminated_by"), "settled");
    assert!(get(&s, "settling_step").parse::<usize>().unwrap() <= 50);
    assert_eq!(get(&s, "settling_bound"), "50");
    for key in ["scheme", "terminated_by", "settling_step", "tail_oscillation_amplitude", "max_abs_state", "blew_up"] {
        get(&section(&report, "euler"), key);
    }
}

#[test]
fn unstable_step_flags_euler() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = ptd(&["simulate", "--config", &config("euler_unstable.conf")], dir.path());
    assert_eq!(code, EXIT_OK);
    let report = fs::read_to_string(file(dir.path(), "euler_unstable_report.txt")).unwrap();
    let e = section(&report, "euler");
    let amp: f64 = get(&e, "tail_oscillation_amplitude").parse().unwrap();
    assert!(get(&e, "blew_up") == "true" || amp > 0.1);
    let x = section(&report, "exact");
    assert!(get(&x, "settling_step").parse::<usize>().unwrap() <= 16);
}

#[test]
fn perturbed_sine_records_control_and_disturbance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = ptd(&["simulate", "--config", &config("perturbed_sine.conf")], dir.path());
    assert_eq!(code, EXIT_OK);
    let cons = rows(&file(dir.path(), "perturbed_sine_consistent_perturbed.csv"));
    // the run stops one confirming step after settling
    let n = cons.len();
    assert!(cons[n - 1].1 == 0.0 && cons[n - 2].1 == 0.0);
    assert!(cons[n - 2].0 <= 20);
    assert!(cons.iter().filter(|r| r.0 >= 20).all(|r| r.1 == 0.0));
    assert!(cons.iter().all(|r| r.2.is_some() && r.3.is_some_and(|d| d.abs() <= 1.0)));
    let eul = rows(&file(dir.path(), "perturbed_sine_euler_perturbed.csv"));
    assert_eq!(eul.len(), 201);
    assert!(eul.iter().all(|r| r.1 != 0.0));

    let report = fs::read_to_string(file(dir.path(), "perturbed_sine_report.txt")).unwrap();
    assert_eq!(get(&section(&report, "consistent_perturbed"), "gain_below_bound"), "false");
}

#[test]
fn overrides_and_output_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("exact_vs_euler.conf");
    let args = ["simulate", "--config", &cfg, "--set", "x0=-3", "--set", "euler.h=0.01", "--out", "sub/run"];
    let (code, _, err) = ptd(&args, dir.path());
    assert_eq!(code, EXIT_OK, "{err}");
    // with an output directory only the last prefix component is kept
    let exact = rows(&file(dir.path(), "run_exact.csv"));
    assert_eq!(exact[0].1, -3.0);
    let report = fs::read_to_string(file(dir.path(), "run_report.txt")).unwrap();
    assert_eq!(get(&section(&report, "euler"), "h"), "1.0000000000000000e-2");
    assert_eq!(get(&section(&report, "exact"), "h"), "2.0000000000000000e-2");
}

#[test]
fn validation_errors_name_the_key_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("exact_vs_euler.conf");
    let cases = [
        ("h=0", "`h`"),
        ("rho2=2", "`rho2`"),
        ("kappa.family=weibull", "`kappa.family`"),
        ("delta=1", "`delta`"),
        ("schemes=exact,consistent_perturbed", "`schemes`"),
        ("steps=0", "`steps`"),
        ("colour=red", "`colour`"),
    ];
    for (set, key) in cases {
        let (code, _, err) = ptd(&["simulate", "--config", &cfg, "--set", set], dir.path());
        assert_eq!(code, EXIT_INVALID, "{set}");
        assert!(err.contains(key), "{set}: {err}");
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

    let (code, _, err) = ptd(&["simulate", "--config", "/nonexistent/x.conf"], dir.path());
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("cannot read"));
    let (code, _, _) = ptd(&["simulate", "--bogus-flag"], dir.path());
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = ptd(&["verify", "k1", "--seed", "1", "--trials", "100"], dir.path());
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("result = pass"));
    let full = fs::read_to_string(file(dir.path(), "ptd_verify_k1.txt")).unwrap();
    assert_eq!(full.lines().filter(|l| l.starts_with("trial.")).count(), 100);
    assert!(full.lines().any(|l| l.starts_with("worst_case_error = ")));

    let (code, _, err) = ptd(&["verify", "lemma9"], dir.path());
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("unknown suite"));
    let (code, _, _) = ptd(&["verify", "k1", "--trials", "0"], dir.path());
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn sweep_writes_per_trial_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--config", &config("sweep_gamma.conf"), "--trials", "50"];
    let (code, _, err) = ptd(&args, dir.path());
    assert_eq!(code, EXIT_OK, "{err}");
    let csv = fs::read_to_string(file(dir.path(), "sweep_gamma_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 50);
    let report = fs::read_to_string(file(dir.path(), "sweep_gamma_sweep_report.txt")).unwrap();
    let exact = section(&report, "exact");
    assert_eq!(get(&exact, "bound_violations"), "0");
    assert_eq!(get(&exact, "settled_runs"), "50");

    let again = tempfile::tempdir().unwrap();
    ptd(&args, again.path());
    assert_eq!(csv, fs::read_to_string(file(again.path(), "sweep_gamma_sweep.csv")).unwrap());
}

#[test]
fn binary_honours_out_dir_env_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ptd");
    let ok = Command::new(bin)
        .args(["simulate", "--config", &config("exact_vs_euler.conf")])
        .env("PTD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(dir.path().join("exact_vs_euler_exact.csv").is_file());

    let bad = Command::new(bin)
        .args(["simulate", "--config", &config("exact_vs_euler.conf"), "--set", "x0=nan"])
        .env("PTD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("`x0`"));

    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
