//! Watt-domain Lagrangians of both stages and their exact gradients.
//!
//! Constraints enter as `multiplier * (required - available)`, so every
//! multiplier is non-negative at a saddle point.

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;

use super::{CellDuals, DualStateP1};

/// `L_1(alpha)` with `P = P_max`.
pub fn lagrangian_p1(
    alpha: [f64; 2],
    duals: &DualStateP1,
    ch: &ChannelRealization,
    config: &NetworkConfig,
) -> f64 {
    let p = config.p_max_w();
    let gamma = config.sinr_threshold();
    let [a1, a2] = alpha;
    let [h1, h2] = ch.g_bs_rsu;
    let (s2, n) = (ch.sigma_eps_sq, ch.noise_w);
    let used = p * (a1 + a2);
    used + duals.psi1 * (gamma * (p * s2 * (a1 + a2) + n) - h1 * p * a1)
        + duals.psi2 * (gamma * (h2 * p * a1 + p * s2 * (a1 + a2) + n) - h2 * p * a2)
        + duals.lambda1 * (used - config.p_max_w())
        + duals.lambda2 * (a1 + a2 - 1.0)
}

/// `(dL_1/d alpha_1, dL_1/d alpha_2)`.
pub fn grad_p1(
    alpha: [f64; 2],
    duals: &DualStateP1,
    ch: &ChannelRealization,
    config: &NetworkConfig,
) -> [f64; 2] {
    let _ = alpha; // L_1 is affine in alpha
    let p = config.p_max_w();
    let gamma = config.sinr_threshold();
    let [h1, h2] = ch.g_bs_rsu;
    let s2 = ch.sigma_eps_sq;
    let DualStateP1 {
        psi1,
        psi2,
        lambda1,
        lambda2,
        ..
    } = *duals;
    [
        p + lambda1 * p
            + gamma * psi2 * (h2 * p + p * s2)
            + psi1 * (gamma * p * s2 - h1 * p)
            + lambda2,
        p + lambda1 * p + gamma * p * psi1 * s2 + psi2 * (gamma * p * s2 - h2 * p) + lambda2,
    ]
}

/// Data of one RSU cell that stays fixed during a stage-2 inner solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProblem {
    pub m: usize,
    /// `Q_m`, watts.
    pub q_w: f64,
    pub q_max_w: f64,
    /// Power radiated by the other RSU, watts.
    pub other_radiated_w: f64,
    pub gamma: f64,
    /// Direct gains `|h_{i,m}|^2`.
    pub direct: [f64; 2],
    /// Cascaded tag gains `|h^b_{i,m}|^2 |h_{b,m}|^2`.
    pub reflected: [f64; 2],
    /// Inter-RSU interference powers at the two vehicles, watts.
    pub interference: [f64; 2],
    pub sigma_eps_sq: f64,
    pub noise_w: f64,
}

impl CellProblem {
    pub fn new(
        ch: &ChannelRealization,
        config: &NetworkConfig,
        m: usize,
        q_w: f64,
        other_radiated_w: f64,
    ) -> Self {
        Self {
            m,
            q_w,
            q_max_w: config.q_max_w(),
            other_radiated_w,
            gamma: config.sinr_threshold(),
            direct: ch.g_rsu_veh[m],
            reflected: [ch.backscatter_gain(m, 0), ch.backscatter_gain(m, 1)],
            interference: [
                ch.g_cross[m][0] * other_radiated_w,
                ch.g_cross[m][1] * other_radiated_w,
            ],
            sigma_eps_sq: ch.sigma_eps_sq,
            noise_w: ch.noise_w,
        }
    }

    pub fn has_tag(&self) -> bool {
        self.reflected.iter().any(|&b| b > 0.0)
    }
}

/// `L_2` of one cell at `(beta_1, beta_2, xi)`.
pub fn lagrangian_p2(cell: &CellProblem, beta: [f64; 2], xi: f64, duals: &CellDuals) -> f64 {
    let q = cell.q_w;
    let g = cell.gamma;
    let [b1, b2] = beta;
    let u = [
        cell.direct[0] + xi * cell.reflected[0],
        cell.direct[1] + xi * cell.reflected[1],
    ];
    let csi = cell.sigma_eps_sq * (q * (b1 + b2) + xi);
    let pi2 = q * b1 * u[1];
    q * (b1 + b2)
        + duals.eta1 * (g * (csi + cell.interference[0] + cell.noise_w) - q * b1 * u[0])
        + duals.eta2 * (g * (pi2 + csi + cell.interference[1] + cell.noise_w) - q * b2 * u[1])
        + duals.mu * (q * (b1 + b2) - cell.q_max_w)
        + duals.zeta_mul * (b1 + b2 - 1.0)
        + duals.upsilon * (xi - 1.0)
}

/// `(dL_2/d beta_1, dL_2/d beta_2, dL_2/d xi)` of one cell.
pub fn grad_p2(cell: &CellProblem, beta: [f64; 2], xi: f64, duals: &CellDuals) -> [f64; 3] {
    let q = cell.q_w;
    let g = cell.gamma;
    let s2 = cell.sigma_eps_sq;
    let [b1, b2] = beta;
    let [r1, r2] = cell.reflected;
    let u1 = cell.direct[0] + xi * r1;
    let u2 = cell.direct[1] + xi * r2;
    let CellDuals {
        eta1,
        eta2,
        mu,
        zeta_mul,
        upsilon,
    } = *duals;
    [
        q * (1.0 - eta1 * u1 + g * (eta1 + eta2) * s2 + g * eta2 * u2 + mu) + zeta_mul,
        q * (1.0 - eta2 * u2 + g * (eta1 + eta2) * s2 + mu) + zeta_mul,
        eta1 * (g * s2 - q * b1 * r1) + eta2 * (g * (q * b1 * r2 + s2) - q * b2 * r2) + upsilon,
    ]
}
