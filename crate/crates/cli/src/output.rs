//! CSV trajectories, key/value reports and output paths.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ptd_core::{Metrics, Trajectory};

pub const CSV_HEADER: &str = "k,t,x,u,delta_val";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut s = String::with_capacity(64 * (tr.samples.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for sm in &tr.samples {
        let opt = |v: Option<f64>| v.map(float).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            sm.k,
            float(sm.t),
            float(sm.x),
            opt(sm.u),
            opt(sm.delta)
        );
    }
    s
}

/// Accumulates a flat `key = value` document with `[section]` headers.
#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let _ = writeln!(self.text, "[{name}]");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, float(value))
    }

    pub fn metrics(&mut self, m: &Metrics) -> &mut Self {
        self.kv("settling_step", opt_index(m.settling_step))
            .num("tail_oscillation_amplitude", m.tail_oscillation_amplitude)
            .num("max_abs_state", m.max_abs_state)
            .kv("blew_up", m.blew_up)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn opt_index(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |k| k.to_string())
}

/// Resolves an output prefix. With `dir` set, only the final component of
/// `prefix` is kept and placed under `dir`.
pub fn resolve_prefix(prefix: &str, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) => d.join(Path::new(prefix).file_name().unwrap_or(prefix.as_ref())),
        None => PathBuf::from(prefix),
    }
}

/// `<prefix><suffix>`, e.g. `runs/atan` + `_exact.csv`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ptd_core::{Sample, Scheme, Termination};

    #[test]
    fn float_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float(10.0), "1.0000000000000000e1");
    }

    #[test]
    fn csv_leaves_control_columns_empty_when_absent() {
        let tr = Trajectory {
            scheme: Scheme::Exact,
            h: 0.5,
            x0: 1.0,
            horizon_steps: 1,
            samples: vec![
                Sample { k: 0, t: 0.0, x: 1.0, u: None, delta: None },
                Sample { k: 1, t: 0.5, x: 0.0, u: Some(-2.0), delta: Some(0.25) },
            ],
            terminated_by: Termination::Horizon,
        };
        let csv = trajectory_csv(&tr);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0.0000000000000000e0,1.0000000000000000e0,,");
        assert_eq!(
            lines[2],
            "1,5.0000000000000000e-1,0.0000000000000000e0,-2.0000000000000000e0,2.5000000000000000e-1"
        );
    }

    #[test]
    fn prefix_resolution() {
        assert_eq!(resolve_prefix("runs/atan", None), PathBuf::from("runs/atan"));
        assert_eq!(
            resolve_prefix("runs/atan", Some(Path::new("/tmp/o"))),
            PathBuf::from("/tmp/o/atan")
        );
        assert_eq!(with_suffix(Path::new("a/b"), "_exact.csv"), PathBuf::from("a/b_exact.csv"));
    }
}
