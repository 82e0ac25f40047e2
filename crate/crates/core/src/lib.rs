//! Power allocation and Monte Carlo evaluation for a two-hop cooperative V2X
//! downlink: a BS serves two RSUs by NOMA, each RSU serves two vehicles by
//! NOMA, and an ambient backscatter tag in each RSU cell reflects the RSU
//! signal towards the vehicles. Channel estimates are imperfect.
//!
//! The crate is organised bottom-up:
//!
//! * [`config`], [`units`], [`geometry`], [`channel`]: scenario parameters,
//!   node placement and channel draws,
//! * [`rates`]: SINR, rate, power and energy-efficiency expressions,
//! * [`solver`]: the two-stage primal-dual power allocation,
//! * [`oracle`]: grid-search references and constraint slacks,
//! * [`simulation`]: Monte Carlo realizations and parameter sweeps.

pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod rates;
pub mod simulation;
pub mod solver;
pub mod units;

pub use channel::{generate_realization, ChannelRealization};
pub use config::NetworkConfig;
pub use error::{Error, Result};
pub use rates::{PowerSolution, RateReport};
pub use solver::{solve_algorithm1, Mode, SolveOutcome, SolverSettings, Status};
