//! Result files of a sweep.
//!
//! A sweep directory holds `sweep.csv`, `manifest.json` (format tag, time,
//! seed, plan, full configuration echo and the list of files it covers),
//! `run.conf` (the configuration as `key = value` lines, accepted back by
//! `--config`) and optionally a gnuplot script.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ambc_v2x::simulation::{SweepPlan, SweepResult};
use ambc_v2x::Mode;
use serde::Serialize;

/// Version tag of the CSV schema; bumped whenever the columns change.
pub const FORMAT_VERSION: &str = "sweep-csv/1";
pub const CSV_HEADER: &str =
    "param,value,mode,mean_ee_mbpj,stderr_ee,mean_icsi_w,feasibility_rate,mean_iters,n";
pub const CSV_FILE: &str = "sweep.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "run.conf";
pub const GNUPLOT_FILE: &str = "sweep.gp";

#[derive(Debug)]
pub struct OutputError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

impl OutputError {
    pub fn new(path: PathBuf, source: std::io::Error) -> Self {
        Self { path, source }
    }
}

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for OutputError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEcho {
    pub param: String,
    pub values: Vec<f64>,
    pub modes: Vec<String>,
    pub realizations: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub format_version: String,
    /// Seconds since the Unix epoch when the manifest was created.
    pub timestamp: u64,
    pub master_seed: u64,
    pub output_dir: String,
    /// Files written together with this manifest.
    pub files: Vec<String>,
    pub plan: PlanEcho,
    /// Every configuration key with its value, in `--config` syntax.
    pub config: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(plan: &SweepPlan, dir: &Path, gnuplot: bool) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let mut files = vec![CSV_FILE.to_string(), CONFIG_FILE.to_string()];
        if gnuplot {
            files.push(GNUPLOT_FILE.to_string());
        }
        let config = plan
            .base
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
            .collect();
        Self {
            format_version: FORMAT_VERSION.to_string(),
            timestamp,
            master_seed: plan.base.seed,
            output_dir: dir.display().to_string(),
            files,
            plan: PlanEcho {
                param: plan.param.name().to_string(),
                values: plan.values.clone(),
                modes: plan.modes.iter().map(|m| m.name().to_string()).collect(),
                realizations: plan.realizations,
                parallel: plan.parallel,
            },
            config,
        }
    }

    fn wants_gnuplot(&self) -> bool {
        self.files.iter().any(|f| f == GNUPLOT_FILE)
    }
}

/// Shortest round-trip form of `x`, switching to exponent notation outside
/// `[1e-4, 1e7)` so that tiny powers stay readable.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// The CSV table of a sweep. Numbers are printed in shortest round-trip
/// form, so equal results give equal bytes.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::with_capacity(64 * (result.points.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for p in &result.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            result.param.name(),
            num(p.value),
            p.mode.name(),
            num(p.mean_ee_mbpj),
            num(p.stderr_ee),
            num(p.mean_icsi_w),
            num(p.feasibility_rate),
            num(p.mean_iters),
            p.n
        );
    }
    s
}

/// Gnuplot script drawing mean energy efficiency with error bars, one curve
/// per mode.
pub fn gnuplot_script(result: &SweepResult, manifest: &Manifest) -> String {
    let modes: Vec<Mode> = {
        let mut v: Vec<Mode> = Vec::new();
        for p in &result.points {
            if !v.contains(&p.mode) {
                v.push(p.mode);
            }
        }
        v
    };
    let mut s = String::new();
    let _ = writeln!(s, "# {} data, see {MANIFEST_FILE}", manifest.format_version);
    s.push_str("set datafile separator ','\n");
    let _ = writeln!(s, "set xlabel '{}'", result.param.name());
    s.push_str("set ylabel 'energy efficiency (Mb/J)'\n");
    if result.param.name() == "sigma_eps" {
        s.push_str("set logscale x\n");
    }
    let curves: Vec<String> = modes
        .iter()
        .enumerate()
        .map(|(j, m)| {
            format!(
                "'{CSV_FILE}' skip 1 every {}::{j} using 2:4:5 with yerrorlines title '{}'",
                modes.len(),
                m.name()
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), OutputError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| OutputError::new(path, e))
}

/// Writes all files of a sweep into `dir`, creating it if needed. The
/// manifest is written last.
pub fn emit_csv(result: &SweepResult, manifest: &Manifest, dir: &Path) -> Result<(), OutputError> {
    std::fs::create_dir_all(dir).map_err(|e| OutputError::new(dir.to_path_buf(), e))?;
    write_file(dir, CSV_FILE, &sweep_csv(result))?;
    let conf: String = manifest
        .config
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap_or_default()))
        .collect();
    write_file(dir, CONFIG_FILE, &conf)?;
    if manifest.wants_gnuplot() {
        write_file(dir, GNUPLOT_FILE, &gnuplot_script(result, manifest))?;
    }
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_file(dir, MANIFEST_FILE, &(json + "\n"))
}

/// Fixed-width table of the sweep for the terminal.
pub fn summary_table(result: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>12} {:>10} {:>12} {:>10} {:>12} {:>9} {:>9}",
        result.param.name(),
        "mode",
        "EE (Mb/J)",
        "stderr",
        "iCSI (W)",
        "feasible",
        "iters"
    );
    for p in &result.points {
        let _ = writeln!(
            s,
            "{:>12} {:>10} {:>12.5} {:>10.2e} {:>12.3e} {:>9.3} {:>9.1}",
            p.value,
            p.mode.name(),
            p.mean_ee_mbpj,
            p.stderr_ee,
            p.mean_icsi_w,
            p.feasibility_rate,
            p.mean_iters
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.0,
            1e-17,
            4.004211453193051e-17,
            0.588,
            158.1000630933296,
            1e-5,
            2.5e9,
            -3.0,
        ] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1e-5), "1e-5");
        assert_eq!(num(0.001), "0.001");
        assert_eq!(num(f64::NAN), "NaN");
    }
}
