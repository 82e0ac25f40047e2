//! Stage 2: per-RSU power allocation between the two vehicles and the tag
//! reflection coefficient, coupled across RSUs by inter-RSU interference.

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::oracle::p2_slacks;
use crate::rates::PowerSolution;

use super::{
    capped_log_step, project_coefficients, CellDuals, CellProblem, DualStateP2,
    InfeasibilityMonitor, SolveOutcome, SolverSettings, Status, COEFF_FLOOR, LOG_CLAMP,
};

struct Eval {
    g: [f64; 2],
    /// `jac[k] = (dg_k/d ln beta_1, dg_k/d ln beta_2, dg_k/d xi)`.
    jac: [[f64; 3]; 2],
    h_power: f64,
    h_sum: f64,
    h_xi: f64,
    sum: f64,
}

fn evaluate(cell: &CellProblem, beta: [f64; 2], xi: f64) -> Eval {
    let q = cell.q_w;
    let s2 = cell.sigma_eps_sq;
    let [b1, b2] = beta;
    let [r1, r2] = cell.reflected;
    let u1 = cell.direct[0] + xi * r1;
    let u2 = cell.direct[1] + xi * r2;
    let sum = b1 + b2;
    let csi = s2 * (q * sum + xi);
    let pi2 = q * b1 * u2;
    let in1 = csi + cell.interference[0] + cell.noise_w;
    let in2 = pi2 + csi + cell.interference[1] + cell.noise_w;
    let log_ratio = |num: f64, den: f64| (num / den).ln().clamp(-LOG_CLAMP, LOG_CLAMP);
    let share = |r: f64, u: f64| if u > 0.0 { r / u } else { 0.0 };
    Eval {
        g: [
            log_ratio(q * b1 * u1, cell.gamma * in1),
            log_ratio(q * b2 * u2, cell.gamma * in2),
        ],
        jac: [
            [
                1.0 - s2 * q * b1 / in1,
                -s2 * q * b2 / in1,
                share(r1, u1) - s2 / in1,
            ],
            [
                -(pi2 + s2 * q * b1) / in2,
                1.0 - s2 * q * b2 / in2,
                share(r2, u2) - (q * b1 * r2 + s2) / in2,
            ],
        ],
        h_power: (cell.q_max_w / (q * sum)).ln(),
        h_sum: -sum.ln(),
        h_xi: 1.0 - xi,
        sum,
    }
}

fn violation(e: &Eval) -> f64 {
    [-e.g[0], -e.g[1], -e.h_power, -e.h_sum, -e.h_xi]
        .into_iter()
        .fold(0.0, f64::max)
}

/// Result of one stage-2 iteration in one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Step {
    pub beta: [f64; 2],
    pub xi: f64,
    pub duals: CellDuals,
    pub change: f64,
    pub violation: f64,
}

/// One projected primal-dual iteration for one cell at iteration `t >= 1`.
///
/// `beta` moves in the log domain exactly as `alpha` does in stage 1. `xi`
/// takes a projected gradient step in the linear domain and is clamped to
/// `[0, 1]`; with `reflect == false` it is pinned to zero.
pub fn step_p2(
    cell: &CellProblem,
    beta: [f64; 2],
    xi: f64,
    duals: &CellDuals,
    t: usize,
    settings: &SolverSettings,
    reflect: bool,
) -> P2Step {
    let delta = settings.step_size(t);
    let rho = settings.augmentation;
    let e = evaluate(cell, beta, xi);
    let eta_eff = [
        (duals.eta1 - rho * e.g[0]).max(0.0),
        (duals.eta2 - rho * e.g[1]).max(0.0),
    ];
    let budget_eff =
        (duals.mu - rho * e.h_power).max(0.0) + (duals.zeta_mul - rho * e.h_sum).max(0.0);
    let ups_eff = (duals.upsilon - rho * e.h_xi).max(0.0);

    let mut raw = [0.0; 2];
    for i in 0..2 {
        let share = beta[i] / e.sum;
        let grad = share - eta_eff[0] * e.jac[0][i] - eta_eff[1] * e.jac[1][i] + budget_eff * share;
        raw[i] = -delta * grad;
    }
    let log_step = capped_log_step(raw, t, settings);
    let cand = [beta[0] * log_step[0].exp(), beta[1] * log_step[1].exp()];
    let projected = project_coefficients(cand);
    let next_beta = [projected[0].max(COEFF_FLOOR), projected[1].max(COEFF_FLOOR)];
    let next_xi = if reflect {
        let grad = -eta_eff[0] * e.jac[0][2] - eta_eff[1] * e.jac[1][2] + ups_eff;
        (xi - delta * grad).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let e = evaluate(cell, next_beta, next_xi);
    let next_duals = CellDuals {
        eta1: (duals.eta1 - delta * e.g[0]).max(0.0),
        eta2: (duals.eta2 - delta * e.g[1]).max(0.0),
        mu: (duals.mu - delta * e.h_power).max(0.0),
        zeta_mul: (duals.zeta_mul - delta * e.h_sum).max(0.0),
        upsilon: (duals.upsilon - delta * e.h_xi).max(0.0),
    };
    let change = ((next_beta[0] - beta[0])
        .abs()
        .max((next_beta[1] - beta[1]).abs())
        / e.sum)
        .max((next_xi - xi).abs());
    P2Step {
        beta: next_beta,
        xi: next_xi,
        duals: next_duals,
        change,
        violation: violation(&e),
    }
}

/// Warm-startable state of one cell.
#[derive(Debug, Clone, Copy)]
struct CellState {
    beta: [f64; 2],
    xi: f64,
    duals: CellDuals,
    status: Status,
}

fn solve_cell(
    cell: &CellProblem,
    state: &mut CellState,
    settings: &SolverSettings,
    trace: &mut Vec<f64>,
) -> usize {
    let tol = settings.convergence_tol;
    let reflect = settings.mode.reflects();
    if state.status != Status::Converged {
        // multipliers grown against an unreachable target only slow the
        // next pass down
        state.duals = CellDuals::default();
    }
    if !reflect {
        state.xi = 0.0;
    }
    let mut monitor = InfeasibilityMonitor::new(settings);
    let mut t = 0;
    state.status = Status::MaxIterations;
    while t < settings.max_iterations {
        t += 1;
        let step = step_p2(
            cell,
            state.beta,
            state.xi,
            &state.duals,
            t,
            settings,
            reflect,
        );
        state.beta = step.beta;
        state.xi = step.xi;
        state.duals = step.duals;
        if settings.record_trace {
            trace.push(step.violation);
        }
        if step.change < tol && step.violation < tol {
            state.status = Status::Converged;
            break;
        }
        if monitor.observe(step.violation, state.duals.multipliers().iter().sum()) {
            state.status = Status::Infeasible;
            break;
        }
    }
    t
}

/// Solves stage 2 for fixed RSU powers `q_rsu_w`.
///
/// Both RSUs start from `beta = (0.5, 0.5)`, `xi = 1` (AmBC) and an assumed
/// radiated power of `Q_max / 2` each. Each outer pass solves RSU 0 and then
/// RSU 1 against the latest radiated power of the other, warm-starting from
/// the previous pass. The outer loop stops once the radiated powers are
/// stable to the tolerance.
pub fn solve_p2(
    ch: &ChannelRealization,
    config: &NetworkConfig,
    settings: &SolverSettings,
    q_rsu_w: [f64; 2],
) -> SolveOutcome {
    let tol = settings.convergence_tol;
    let q_max = config.q_max_w();
    let initial_xi = if settings.mode.reflects() { 1.0 } else { 0.0 };
    let mut cells = [CellState {
        beta: [0.5, 0.5],
        xi: initial_xi,
        duals: CellDuals::default(),
        status: Status::Converged,
    }; 2];
    let mut radiated = [q_max / 2.0; 2];
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut status = Status::MaxIterations;

    for _ in 0..settings.max_outer_passes.max(1) {
        let before = radiated;
        for m in 0..2 {
            let cell = CellProblem::new(ch, config, m, q_rsu_w[m], radiated[1 - m]);
            iterations += solve_cell(&cell, &mut cells[m], settings, &mut trace);
            radiated[m] = q_rsu_w[m] * (cells[m].beta[0] + cells[m].beta[1]);
        }
        let drift = (0..2)
            .map(|m| {
                (radiated[m] - before[m]).abs() / radiated[m].max(before[m]).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        let stable = drift < tol;
        let inner = cells[0].status.merge(cells[1].status);
        status = inner;
        if stable && inner != Status::MaxIterations {
            break;
        }
        if !stable && status == Status::Converged {
            status = Status::MaxIterations;
        }
    }

    let mut duals = DualStateP2 {
        cells: [cells[0].duals, cells[1].duals],
        iteration: iterations,
    };
    let solution = PowerSolution {
        alpha: [0.0; 2],
        beta: [cells[0].beta, cells[1].beta],
        xi: [cells[0].xi, cells[1].xi],
        p_bs_w: config.p_max_w(),
        q_rsu_w,
    };
    duals = duals.to_physical(&solution, ch);
    duals.iteration = iterations;
    SolveOutcome {
        constraint_slacks: p2_slacks(&solution, ch, config, tol),
        solution,
        converged: status == Status::Converged,
        iterations_used: iterations,
        status,
        duals_p1: None,
        duals_p2: Some(duals),
        violation_trace: trace,
    }
    .certify(tol)
}
