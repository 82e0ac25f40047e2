//! Stage 1: BS power allocation between the two RSUs.

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::oracle::p1_slacks;
use crate::rates::PowerSolution;

use super::{
    capped_log_step, project_coefficients, rsu_powers, DualStateP1, InfeasibilityMonitor,
    SolveOutcome, SolverSettings, Status, COEFF_FLOOR, LOG_CLAMP,
};

/// Weight of the per-coordinate term `sum_i ln alpha_i` added to the
/// log-power objective.
///
/// The rate constraints of stage 1 form a standard interference system: its
/// feasible set has a componentwise smallest point, and that point minimises
/// every objective increasing in each coordinate, the extra term included.
/// Without it the pull on an `alpha_i` that is orders of magnitude below the
/// other is proportional to its power share, so it creeps towards the
/// optimum hyperbolically slowly while the total power has long settled.
pub const COORDINATE_WEIGHT: f64 = 1.0;

/// Log-domain constraint values and their derivatives at one point.
struct Eval {
    /// Rate constraints `ln(signal / (gamma * (interference + noise)))`.
    g: [f64; 2],
    /// `jac[k][i] = dg_k / d ln alpha_i`.
    jac: [[f64; 2]; 2],
    /// Budget constraint `ln(P_max / (P * sum))`.
    h_power: f64,
    /// Coefficient-sum constraint `-ln(sum)`.
    h_sum: f64,
    sum: f64,
}

fn evaluate(alpha: [f64; 2], ch: &ChannelRealization, p: f64, p_max: f64, gamma: f64) -> Eval {
    let [a1, a2] = alpha;
    let [h1, h2] = ch.g_bs_rsu;
    let s2 = ch.sigma_eps_sq;
    let sum = a1 + a2;
    let in1 = p * s2 * sum + ch.noise_w;
    let in2 = h2 * p * a1 + p * s2 * sum + ch.noise_w;
    let log_ratio = |num: f64, den: f64| (num / den).ln().clamp(-LOG_CLAMP, LOG_CLAMP);
    Eval {
        g: [
            log_ratio(h1 * p * a1, gamma * in1),
            log_ratio(h2 * p * a2, gamma * in2),
        ],
        jac: [
            [1.0 - p * s2 * a1 / in1, -p * s2 * a2 / in1],
            [-(h2 * p + p * s2) * a1 / in2, 1.0 - p * s2 * a2 / in2],
        ],
        h_power: (p_max / (p * sum)).ln(),
        h_sum: -sum.ln(),
        sum,
    }
}

fn violation(e: &Eval) -> f64 {
    [-e.g[0], -e.g[1], -e.h_power, -e.h_sum]
        .into_iter()
        .fold(0.0, f64::max)
}

/// Result of one stage-1 iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Step {
    pub alpha: [f64; 2],
    pub duals: DualStateP1,
    /// `max_i |ln alpha_i' - ln alpha_i|`.
    pub change: f64,
    /// Largest log-domain constraint violation at the new point.
    pub violation: f64,
}

/// One projected primal-dual iteration of stage 1.
///
/// The primal step is a descent step in `ln alpha` on the augmented
/// Lagrangian, applied multiplicatively as `alpha * exp(-delta * grad)`,
/// followed by projection onto `alpha_1 + alpha_2 <= 1`. The multipliers
/// then ascend along the constraint values at the new point and are
/// projected onto the non-negative orthant.
pub fn step_p1(
    alpha: [f64; 2],
    duals: &DualStateP1,
    ch: &ChannelRealization,
    config: &NetworkConfig,
    settings: &SolverSettings,
) -> P1Step {
    let p = config.p_max_w();
    let p_max = config.p_max_w();
    let gamma = config.sinr_threshold();
    let t = duals.iteration + 1;
    let delta = settings.step_size(t);
    let rho = settings.augmentation;

    let e = evaluate(alpha, ch, p, p_max, gamma);
    let psi_eff = [
        (duals.psi1 - rho * e.g[0]).max(0.0),
        (duals.psi2 - rho * e.g[1]).max(0.0),
    ];
    let lam_eff =
        (duals.lambda1 - rho * e.h_power).max(0.0) + (duals.lambda2 - rho * e.h_sum).max(0.0);

    let mut raw = [0.0; 2];
    for i in 0..2 {
        let share = alpha[i] / e.sum;
        let grad = share + COORDINATE_WEIGHT - psi_eff[0] * e.jac[0][i] - psi_eff[1] * e.jac[1][i]
            + lam_eff * share;
        raw[i] = -delta * grad;
    }
    let log_step = capped_log_step(raw, t, settings);
    let cand = [alpha[0] * log_step[0].exp(), alpha[1] * log_step[1].exp()];
    let projected = project_coefficients(cand);
    let next = [projected[0].max(COEFF_FLOOR), projected[1].max(COEFF_FLOOR)];

    let e = evaluate(next, ch, p, p_max, gamma);
    let next_duals = DualStateP1 {
        psi1: (duals.psi1 - delta * e.g[0]).max(0.0),
        psi2: (duals.psi2 - delta * e.g[1]).max(0.0),
        lambda1: (duals.lambda1 - delta * e.h_power).max(0.0),
        lambda2: (duals.lambda2 - delta * e.h_sum).max(0.0),
        iteration: t,
    };
    let change = (next[0] / alpha[0])
        .ln()
        .abs()
        .max((next[1] / alpha[1]).ln().abs());
    P1Step {
        alpha: next,
        duals: next_duals,
        change,
        violation: violation(&e),
    }
}

/// Multipliers of the log-power problem without the per-coordinate term.
///
/// At a stationary point the rate multipliers of the two problems differ by
/// the solution `w` of `sum_k w_k dg_k/d ln alpha_i = COORDINATE_WEIGHT`; the
/// budget multipliers are shared. Left unchanged where the rate Jacobian is
/// singular.
fn power_multipliers(
    alpha: [f64; 2],
    duals: &DualStateP1,
    ch: &ChannelRealization,
    config: &NetworkConfig,
) -> DualStateP1 {
    let p = config.p_max_w();
    let e = evaluate(alpha, ch, p, p, config.sinr_threshold());
    let j = e.jac;
    // transpose system: [j00 j10; j01 j11] w = (k, k)
    let det = j[0][0] * j[1][1] - j[1][0] * j[0][1];
    if !(det.abs() > 1e-12) {
        return *duals;
    }
    let k = COORDINATE_WEIGHT;
    let w1 = (k * j[1][1] - j[1][0] * k) / det;
    let w2 = (j[0][0] * k - k * j[0][1]) / det;
    DualStateP1 {
        psi1: (duals.psi1 - w1).max(0.0),
        psi2: (duals.psi2 - w2).max(0.0),
        ..*duals
    }
}

/// Solves stage 1 from `alpha = (0.5, 0.5)`.
///
/// Converged when both the relative change of every coefficient and the constraint
/// violation drop below the tolerance. Infeasible when the violation stays
/// above the tolerance, stops improving and the multipliers keep growing
/// over consecutive windows of `infeasibility_window` iterations.
pub fn solve_p1(
    ch: &ChannelRealization,
    config: &NetworkConfig,
    settings: &SolverSettings,
) -> SolveOutcome {
    let tol = settings.convergence_tol;
    let mut alpha = [0.5, 0.5];
    let mut duals = DualStateP1::default();
    let mut status = Status::MaxIterations;
    let mut monitor = InfeasibilityMonitor::new(settings);
    let mut trace = Vec::new();

    while duals.iteration < settings.max_iterations {
        let step = step_p1(alpha, &duals, ch, config, settings);
        alpha = step.alpha;
        duals = step.duals;
        if settings.record_trace {
            trace.push(step.violation);
        }
        if step.change < tol && step.violation < tol {
            status = Status::Converged;
            break;
        }
        if monitor.observe(step.violation, duals.multipliers().iter().sum()) {
            status = Status::Infeasible;
            break;
        }
    }

    let solution = PowerSolution {
        alpha,
        ..PowerSolution::zero(config.p_max_w(), rsu_powers(alpha, config))
    };
    SolveOutcome {
        constraint_slacks: p1_slacks(&solution, ch, config, tol),
        solution,
        converged: status == Status::Converged,
        iterations_used: duals.iteration,
        status,
        duals_p1: Some(power_multipliers(alpha, &duals, ch, config).to_physical(alpha, ch, config)),
        duals_p2: None,
        violation_trace: trace,
    }
    .certify(tol)
}
