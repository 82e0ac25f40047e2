//! Command-line grammar.

use std::path::PathBuf;

use ambc_v2x::simulation::SweepParam;
use ambc_v2x::Mode;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ambc-v2x",
    version,
    about = "Power allocation and energy-efficiency sweeps for backscatter-assisted NOMA V2X links",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one channel realization and print the allocation and slacks.
    Solve(SolveArgs),
    /// Sweep one parameter and write sweep.csv and manifest.json.
    Sweep(SweepArgs),
    /// Compare the solver against the grid-search references.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Realization index under the master seed.
    #[arg(long, default_value_t = 0)]
    pub realization: u64,
    /// ambc or pure_noma.
    #[arg(long, default_value = "ambc")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// sigma_eps, p_max, rsu_radius or circuit_power.
    #[arg(long)]
    pub param: SweepParam,
    /// Comma-separated, strictly ordered sweep values.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub values: Vec<f64>,
    /// Realizations per point; overrides n_realizations.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Comma-separated modes; both by default.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<Mode>>,
    /// Output directory; defaults to $AMBC_V2X_OUT, then the current directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script plotting the sweep.
    #[arg(long)]
    pub gnuplot: bool,
    /// Run realizations on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of seeded realizations to check.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Coefficient grid step of the stage-1 reference.
    #[arg(long, default_value_t = 1e-3)]
    pub p1_resolution: f64,
    /// Coefficient grid step of the stage-2 reference.
    #[arg(long, default_value_t = 2e-2)]
    pub p2_resolution: f64,
}

macro_rules! config_flags {
    ($($field:ident => $help:literal),* $(,)?) => {
        /// Configuration file plus one flag per configuration key. Values
        /// are kept as text and parsed by the configuration itself, so flags
        /// and file lines accept the same syntax.
        #[derive(Debug, Default, Args)]
        pub struct ConfigArgs {
            /// File of `key = value` lines.
            #[arg(long)]
            pub config: Option<PathBuf>,
            $(
                #[doc = $help]
                #[arg(long, value_name = "VALUE", allow_negative_numbers = true)]
                pub $field: Option<String>,
            )*
        }

        impl ConfigArgs {
            /// `(key, value)` pairs of the flags that were given.
            pub fn overrides(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $(
                    if let Some(value) = &self.$field {
                        v.push((stringify!($field), value.as_str()));
                    }
                )*
                v
            }
        }
    };
}

config_flags! {
    p_max => "BS power budget, dBm.",
    q_max => "Per-RSU power budget, dBm, or `auto` for half the BS budget.",
    sigma_eps => "Standard deviation of the channel estimation error.",
    c_min => "Minimum spectral efficiency per link, bps/Hz.",
    pathloss_exp => "Path-loss exponent.",
    noise_density_dbm => "Noise power spectral density, dBm/Hz.",
    bandwidth_hz => "Bandwidth, Hz.",
    circuit_power_dbm => "Circuit power, dBm.",
    bs_radius_m => "Radius of the BS cell, m.",
    rsu_radius_m => "Radius of each RSU cell, m.",
    n_realizations => "Channel realizations per sweep point.",
    seed => "Master seed.",
    backscatter_tags => "Whether the RSU cells contain backscatter tags (true/false).",
    step_size_initial => "Initial step size.",
    step_warmup => "Iterations before the step size starts to decay.",
    augmentation => "Penalty weight of the augmented Lagrangian.",
    max_iterations => "Iteration limit per stage.",
    convergence_tol => "Convergence tolerance.",
    infeasibility_window => "Window length of the infeasibility test.",
}
