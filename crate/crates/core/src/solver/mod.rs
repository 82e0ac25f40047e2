//! Two-stage primal-dual power allocation.
//!
//! Stage 1 allocates the BS power between the two RSUs, stage 2 allocates
//! each RSU's power between its vehicles and sets the tag reflection
//! coefficient. Both stages run projected primal-dual iterations on a
//! log-domain reformulation of the problem:
//!
//! * primal variables are `ln alpha` / `ln beta` (the reflection coefficient
//!   stays in the linear domain, it is a bounded fraction),
//! * the objective is the log of the used power,
//! * each rate constraint is `ln(S / (gamma_th * (I + N))) >= 0`.
//!
//! The optimum sits nine or more orders of magnitude below the starting
//! point `alpha = 0.5`, which a linear-domain sub-gradient step cannot
//! traverse in a bounded number of iterations; in log coordinates every
//! decade costs the same number of steps. The physical Lagrangians and their
//! gradients are exposed separately in [`lagrangian`] and are related to the
//! internal multipliers by [`DualStateP1::to_physical`] and
//! [`DualStateP2::to_physical`].

pub mod lagrangian;
mod stage1;
mod stage2;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::oracle::{feasibility_check, SlackReport};
use crate::rates::PowerSolution;

pub use lagrangian::{grad_p1, grad_p2, lagrangian_p1, lagrangian_p2, CellProblem};
pub use stage1::{solve_p1, step_p1, P1Step};
pub use stage2::{solve_p2, step_p2, P2Step};

/// Coefficients are never allowed below this value so their logarithm stays
/// finite.
pub(crate) const COEFF_FLOOR: f64 = 1e-300;

/// Log-domain constraint values are clamped to this magnitude.
pub(crate) const LOG_CLAMP: f64 = 700.0;

/// Largest change of any `ln alpha` / `ln beta` in the first iteration.
/// Ordinary steps are far smaller; the cap only bites while multipliers are
/// large, e.g. against an infeasible target, where an uncapped step
/// overflows.
pub(crate) const MAX_LOG_STEP: f64 = 2.0;

/// Scales the log-domain step `raw` down, keeping its direction, so no
/// coordinate moves by more than the cap. The cap decays with the step size:
/// a constant cap lets an ill-conditioned problem bounce between the same two
/// points forever once the multipliers have grown.
pub(crate) fn capped_log_step(raw: [f64; 2], t: usize, settings: &SolverSettings) -> [f64; 2] {
    let decay = (settings.step_warmup / (settings.step_warmup + t.max(1) as f64 - 1.0)).sqrt();
    let cap = MAX_LOG_STEP * decay;
    let largest = raw[0].abs().max(raw[1].abs());
    if largest > cap {
        [raw[0] * cap / largest, raw[1] * cap / largest]
    } else {
        raw
    }
}

/// Flags a stage as infeasible when, within one unbroken streak of
/// violating iterations, two consecutive windows each end with
///
/// * a smallest violation no more than 1% below that of the window before,
/// * and a larger sum of multipliers than at the window's start.
///
/// Against an unreachable target the iterate parks (or cycles) at a fixed
/// violation while the multipliers grow without bound. A feasible but
/// ill-conditioned instance can also oscillate at a stubborn violation for a
/// while, but its multipliers are then settling back, not growing. One
/// stalled window alone is not enough: the first window of a streak usually
/// holds the small violations of the iterate just crossing the constraint
/// boundary.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InfeasibilityMonitor {
    window: usize,
    tol: f64,
    count: usize,
    window_min: f64,
    previous_min: f64,
    window_start_mass: f64,
    stalled: usize,
}

impl InfeasibilityMonitor {
    const STALLED_WINDOWS: usize = 2;

    pub(crate) fn new(settings: &SolverSettings) -> Self {
        Self {
            window: settings.infeasibility_window.max(1),
            tol: settings.convergence_tol,
            count: 0,
            window_min: f64::INFINITY,
            previous_min: f64::INFINITY,
            window_start_mass: 0.0,
            stalled: 0,
        }
    }

    /// Records one iteration with its violation and the sum of its
    /// multipliers; `true` when infeasibility is declared.
    pub(crate) fn observe(&mut self, violation: f64, multiplier_mass: f64) -> bool {
        if violation <= self.tol {
            self.count = 0;
            self.window_min = f64::INFINITY;
            self.previous_min = f64::INFINITY;
            self.stalled = 0;
            return false;
        }
        if self.count == 0 {
            self.window_start_mass = multiplier_mass;
        }
        self.window_min = self.window_min.min(violation);
        self.count += 1;
        if self.count < self.window {
            return false;
        }
        let no_progress = self.window_min >= 0.99 * self.previous_min;
        let growing = multiplier_mass > self.window_start_mass;
        if no_progress && growing {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.previous_min = self.window_min;
        self.window_min = f64::INFINITY;
        self.count = 0;
        self.stalled >= Self::STALLED_WINDOWS
    }
}

/// Whether the tags reflect (AmBC) or stay silent (pure NOMA baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Ambc,
    PureNoma,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Ambc, Mode::PureNoma];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ambc => "ambc",
            Mode::PureNoma => "pure_noma",
        }
    }

    pub fn reflects(self) -> bool {
        self == Mode::Ambc
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ambc" => Ok(Mode::Ambc),
            "pure_noma" | "noma" => Ok(Mode::PureNoma),
            other => Err(format!(
                "unknown mode `{other}` (expected ambc or pure_noma)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// `delta_0`.
    pub step_size_initial: f64,
    /// `T` in `delta(t) = delta_0 * sqrt(T / (T + t - 1))`.
    pub step_warmup: f64,
    /// Quadratic penalty weight `rho` of the augmented Lagrangian.
    pub augmentation: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub infeasibility_window: usize,
    /// Upper bound on Gauss-Seidel passes over the two RSUs in stage 2.
    pub max_outer_passes: usize,
    pub mode: Mode,
    /// Keep the per-iteration constraint violation of each stage.
    pub record_trace: bool,
}

impl SolverSettings {
    pub fn from_config(config: &NetworkConfig) -> Self {
        Self {
            step_size_initial: config.step_size_initial,
            step_warmup: config.step_warmup,
            augmentation: config.augmentation,
            max_iterations: config.max_iterations,
            convergence_tol: config.convergence_tol,
            infeasibility_window: config.infeasibility_window,
            max_outer_passes: 100,
            mode: Mode::Ambc,
            record_trace: false,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Step size of iteration `t >= 1`. Positive, decreasing to zero, with a
    /// divergent sum.
    pub fn step_size(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        self.step_size_initial * (self.step_warmup / (self.step_warmup + t - 1.0)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIterations,
    Infeasible,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::Infeasible => "infeasible",
        }
    }

    /// Combines the statuses of two stages: any infeasibility wins, then any
    /// unfinished stage.
    pub fn merge(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Infeasible, _) | (_, Infeasible) => Infeasible,
            (MaxIterations, _) | (_, MaxIterations) => MaxIterations,
            _ => Converged,
        }
    }
}

/// Multipliers of stage 1. Inside the solver they are the multipliers of the
/// log-domain problem; [`to_physical`](Self::to_physical) converts them to
/// those of the Lagrangian in [`lagrangian_p1`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DualStateP1 {
    pub psi1: f64,
    pub psi2: f64,
    /// BS power budget.
    pub lambda1: f64,
    /// `alpha_1 + alpha_2 <= 1`.
    pub lambda2: f64,
    pub iteration: usize,
}

impl DualStateP1 {
    pub fn multipliers(&self) -> [f64; 4] {
        [self.psi1, self.psi2, self.lambda1, self.lambda2]
    }

    /// Rescales log-domain multipliers at the point `alpha` into the
    /// multipliers of the watt-domain Lagrangian. Exact at points where the
    /// rate constraints hold with equality.
    pub fn to_physical(
        &self,
        alpha: [f64; 2],
        ch: &ChannelRealization,
        config: &NetworkConfig,
    ) -> Self {
        let p = config.p_max_w();
        let used = p * (alpha[0] + alpha[1]);
        let signal = [ch.g_bs_rsu[0] * p * alpha[0], ch.g_bs_rsu[1] * p * alpha[1]];
        Self {
            psi1: self.psi1 * used / signal[0],
            psi2: self.psi2 * used / signal[1],
            lambda1: self.lambda1,
            lambda2: self.lambda2 * p,
            iteration: self.iteration,
        }
    }
}

/// Multipliers of one RSU cell in stage 2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellDuals {
    pub eta1: f64,
    pub eta2: f64,
    /// RSU power budget.
    pub mu: f64,
    /// `beta_1 + beta_2 <= 1`. Not to be confused with the pathloss exponent.
    pub zeta_mul: f64,
    /// `xi <= 1`.
    pub upsilon: f64,
}

impl CellDuals {
    pub fn multipliers(&self) -> [f64; 5] {
        [self.eta1, self.eta2, self.mu, self.zeta_mul, self.upsilon]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DualStateP2 {
    pub cells: [CellDuals; 2],
    pub iteration: usize,
}

impl DualStateP2 {
    /// Counterpart of [`DualStateP1::to_physical`] for the stage-2 Lagrangian
    /// in [`lagrangian_p2`].
    pub fn to_physical(&self, sol: &PowerSolution, ch: &ChannelRealization) -> Self {
        let mut out = *self;
        for m in 0..2 {
            let q = sol.q_rsu_w[m];
            let used = sol.rsu_radiated_w(m);
            let xi = sol.xi[m];
            let signal = |i: usize| {
                q * sol.beta[m][i] * (ch.g_rsu_veh[m][i] + xi * ch.backscatter_gain(m, i))
            };
            let d = &self.cells[m];
            out.cells[m] = CellDuals {
                eta1: d.eta1 * used / signal(0),
                eta2: d.eta2 * used / signal(1),
                mu: d.mu,
                zeta_mul: d.zeta_mul * q,
                upsilon: d.upsilon * used,
            };
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub solution: PowerSolution,
    pub converged: bool,
    pub iterations_used: usize,
    pub constraint_slacks: SlackReport,
    pub status: Status,
    /// Watt-domain multipliers of stage 1, when it ran.
    pub duals_p1: Option<DualStateP1>,
    /// Watt-domain multipliers of stage 2, when it ran.
    pub duals_p2: Option<DualStateP2>,
    /// Per-iteration maximum constraint violation (log domain), when
    /// requested. Stage 2 iterations follow stage 1 iterations.
    pub violation_trace: Vec<f64>,
}

impl SolveOutcome {
    /// Demotes a converged outcome whose slacks do not certify it.
    pub(crate) fn certify(mut self, tol: f64) -> Self {
        if self.status == Status::Converged && self.constraint_slacks.worst_value() < -tol {
            self.status = Status::MaxIterations;
        }
        self.converged = self.status == Status::Converged;
        self
    }
}

/// Clamps negative candidates to zero, then rescales proportionally if the
/// sum exceeds one.
pub fn project_coefficients(candidate: [f64; 2]) -> [f64; 2] {
    let c = [candidate[0].max(0.0), candidate[1].max(0.0)];
    let sum = c[0] + c[1];
    if sum > 1.0 {
        [c[0] / sum, c[1] / sum]
    } else {
        c
    }
}

/// RSU powers handed from stage 1 to stage 2: `Q_m = min(P alpha_m, Q_max)`.
pub fn rsu_powers(alpha: [f64; 2], config: &NetworkConfig) -> [f64; 2] {
    let p = config.p_max_w();
    let q_max = config.q_max_w();
    [(p * alpha[0]).min(q_max), (p * alpha[1]).min(q_max)]
}

/// Runs stage 1, hands `Q_m = min(P alpha_m, Q_max)` to stage 2 and runs it.
/// Stage 2 is skipped when stage 1 is infeasible.
pub fn solve_algorithm1(
    ch: &ChannelRealization,
    config: &NetworkConfig,
    settings: &SolverSettings,
) -> SolveOutcome {
    let first = solve_p1(ch, config, settings);
    let q = rsu_powers(first.solution.alpha, config);
    let tol = settings.convergence_tol;

    if first.status == Status::Infeasible {
        let solution = PowerSolution {
            q_rsu_w: q,
            ..first.solution
        };
        let constraint_slacks = feasibility_check(&solution, ch, config, tol);
        return SolveOutcome {
            solution,
            constraint_slacks,
            ..first
        }
        .certify(tol);
    }

    let second = solve_p2(ch, config, settings, q);
    let solution = PowerSolution {
        alpha: first.solution.alpha,
        ..second.solution
    };
    let constraint_slacks = feasibility_check(&solution, ch, config, tol);
    let mut violation_trace = first.violation_trace;
    violation_trace.extend(second.violation_trace);
    let status = first.status.merge(second.status);
    SolveOutcome {
        solution,
        converged: status == Status::Converged,
        iterations_used: first.iterations_used + second.iterations_used,
        constraint_slacks,
        status,
        duals_p1: first.duals_p1,
        duals_p2: second.duals_p2,
        violation_trace,
    }
    .certify(tol)
}
