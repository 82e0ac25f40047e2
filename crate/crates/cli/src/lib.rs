//! Command-line front end of `ambc-v2x`: argument parsing, result files and
//! text reports. The binary only forwards `std::env::args` to [`run`].

pub mod args;
pub mod output;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use ambc_v2x::simulation::{realization_seed, run_realization, run_sweep, SweepPlan};
use ambc_v2x::{ChannelRealization, Error, NetworkConfig, Status};
use clap::Parser;

use args::{Cli, Command, ConfigArgs};
use output::{Manifest, OutputError};

/// Environment variable naming the default output directory of `sweep`.
pub const OUT_DIR_ENV: &str = "AMBC_V2X_OUT";

pub mod exit {
    pub const OK: i32 = 0;
    /// `verify` found a solver/oracle disagreement.
    pub const MISMATCH: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const IO: i32 = 4;
    pub const ALL_INFEASIBLE: i32 = 5;
}

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(Error),
    Io(OutputError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Validation(e) => write!(f, "validation error: {e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownKey(_) => CliError::Usage(e.to_string()),
            other => CliError::Validation(other),
        }
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        CliError::Io(e)
    }
}

/// Resolves the configuration: defaults, then the `--config` file, then
/// per-field flags.
pub fn resolve_config(args: &ConfigArgs) -> Result<NetworkConfig, CliError> {
    let mut config = NetworkConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|source| OutputError::new(path.clone(), source))?;
        config.apply_key_values(&text)?;
    }
    for (key, value) in args.overrides() {
        config.set(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

/// Parses `argv` and runs the selected command, writing reports to `out`
/// and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Verify(a) => verify_cmd(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn solve(a: args::SolveArgs, out: &mut impl Write) -> Result<i32, CliError> {
    let config = resolve_config(&a.config)?;
    let seed = realization_seed(config.seed, a.realization);
    let (outcome, _) = run_realization(&config, seed, a.mode)?;
    let ch = ChannelRealization::from_seed(&config, seed)?;
    let text = report::print_solution(&outcome, &ch, &config);
    write!(out, "{text}").map_err(|e| OutputError::new("<stdout>".into(), e))?;
    Ok(if outcome.status == Status::Infeasible {
        exit::ALL_INFEASIBLE
    } else {
        exit::OK
    })
}

fn output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn sweep(a: args::SweepArgs, out: &mut impl Write) -> Result<i32, CliError> {
    let mut base = resolve_config(&a.config)?;
    if let Some(n) = a.realizations {
        base.set("n_realizations", &n.to_string())?;
        base.validate()?;
    }
    let mut plan = SweepPlan::new(a.param, a.values, base);
    if let Some(modes) = a.modes {
        plan.modes = modes;
    }
    plan.parallel = !a.serial;
    plan.validate()?;

    let dir = output_dir(a.out);
    let result = run_sweep(&plan)?;
    let manifest = Manifest::new(&plan, &dir, a.gnuplot);
    output::emit_csv(&result, &manifest, &dir)?;

    let table = output::summary_table(&result);
    write!(out, "{table}").map_err(|e| OutputError::new("<stdout>".into(), e))?;
    writeln!(out, "wrote {}", dir.join(output::CSV_FILE).display())
        .map_err(|e| OutputError::new("<stdout>".into(), e))?;
    let all_infeasible = result.points.iter().all(|p| p.n_converged == 0);
    Ok(if all_infeasible {
        exit::ALL_INFEASIBLE
    } else {
        exit::OK
    })
}

fn verify_cmd(a: args::VerifyArgs, out: &mut impl Write) -> Result<i32, CliError> {
    let config = resolve_config(&a.config)?;
    let spec = verify::VerifySpec {
        seeds: a.seeds,
        p1_resolution: a.p1_resolution,
        p2_resolution: a.p2_resolution,
    };
    if !(spec.p1_resolution > 0.0 && spec.p1_resolution <= 0.5) {
        return Err(CliError::Usage(
            "--p1-resolution must lie in (0, 0.5]".into(),
        ));
    }
    if !(spec.p2_resolution > 0.0 && spec.p2_resolution <= 0.5) {
        return Err(CliError::Usage(
            "--p2-resolution must lie in (0, 0.5]".into(),
        ));
    }
    let summary = verify::run_verify(&config, &spec);
    write!(out, "{}", summary.render()).map_err(|e| OutputError::new("<stdout>".into(), e))?;
    Ok(if summary.passed() {
        exit::OK
    } else {
        exit::MISMATCH
    })
}
