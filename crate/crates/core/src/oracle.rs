//! Brute-force references for the solver: exhaustive grid searches over the
//! coefficients of each stage, the closed-form stage-1 vertex, and signed
//! constraint slacks.
//!
//! Rate slacks are in bps/Hz (`log2(1 + sinr) - c_min`), budget slacks are
//! relative to the budget, coefficient slacks are in coefficient units.
//! A point is feasible when every slack is non-negative.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::rates::{second_hop_sinr, sinr_first_hop, PowerSolution};
use crate::solver::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub entries: Vec<Slack>,
    pub tol: f64,
}

impl SlackReport {
    fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push(Slack {
            name: name.into(),
            value,
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.value)
    }

    /// The most negative slack (first one on ties).
    pub fn worst(&self) -> Option<&Slack> {
        self.entries
            .iter()
            .fold(None, |acc: Option<&Slack>, s| match acc {
                Some(w) if w.value <= s.value => Some(w),
                _ => Some(s),
            })
    }

    pub fn worst_value(&self) -> f64 {
        self.worst().map_or(f64::INFINITY, |s| s.value)
    }

    /// All slacks at least `-tol`.
    pub fn satisfied(&self) -> bool {
        self.worst_value() >= -self.tol
    }
}

fn rate_slack(sinr: f64, c_min: f64) -> f64 {
    sinr.log2_1p() - c_min
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// Slacks of the stage-1 constraints: first-hop rates, BS budget,
/// coefficient sum and signs.
pub fn p1_slacks(
    sol: &PowerSolution,
    ch: &ChannelRealization,
    config: &NetworkConfig,
    tol: f64,
) -> SlackReport {
    let mut r = SlackReport {
        entries: Vec::new(),
        tol,
    };
    let sinr = sinr_first_hop(ch, sol);
    r.push("rate_rsu1", rate_slack(sinr[0], config.c_min));
    r.push("rate_rsu2", rate_slack(sinr[1], config.c_min));
    let p_max = config.p_max_w();
    r.push("bs_power", (p_max - sol.bs_radiated_w()) / p_max);
    r.push("alpha_sum", 1.0 - sol.alpha[0] - sol.alpha[1]);
    r.push("alpha_nonneg", sol.alpha[0].min(sol.alpha[1]));
    r
}

/// Slacks of the stage-2 constraints of both cells.
pub fn p2_slacks(
    sol: &PowerSolution,
    ch: &ChannelRealization,
    config: &NetworkConfig,
    tol: f64,
) -> SlackReport {
    let mut r = SlackReport {
        entries: Vec::new(),
        tol,
    };
    let q_max = config.q_max_w();
    for m in 0..2 {
        let sinr = second_hop_sinr(
            ch,
            m,
            sol.q_rsu_w[m],
            sol.beta[m],
            sol.xi[m],
            sol.rsu_radiated_w(1 - m),
        );
        let k = m + 1;
        r.push(format!("rate_v1_rsu{k}"), rate_slack(sinr[0], config.c_min));
        r.push(format!("rate_v2_rsu{k}"), rate_slack(sinr[1], config.c_min));
        r.push(
            format!("rsu{k}_power"),
            (q_max - sol.rsu_radiated_w(m)) / q_max,
        );
        r.push(
            format!("beta_sum_rsu{k}"),
            1.0 - sol.beta[m][0] - sol.beta[m][1],
        );
        r.push(
            format!("beta_nonneg_rsu{k}"),
            sol.beta[m][0].min(sol.beta[m][1]),
        );
        r.push(format!("xi_range_rsu{k}"), sol.xi[m].min(1.0 - sol.xi[m]));
    }
    r
}

/// Signed slacks of every constraint of the two-stage problem.
pub fn feasibility_check(
    sol: &PowerSolution,
    ch: &ChannelRealization,
    config: &NetworkConfig,
    tol: f64,
) -> SlackReport {
    let mut r = p1_slacks(sol, ch, config, tol);
    r.entries.extend(p2_slacks(sol, ch, config, tol).entries);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spacing of every coefficient axis; each axis covers `[0, 1]`.
    pub resolution: f64,
}

impl GridSpec {
    pub const P1_DEFAULT: GridSpec = GridSpec { resolution: 1e-3 };
    pub const P2_DEFAULT: GridSpec = GridSpec { resolution: 2e-2 };

    /// Number of intervals per axis, `1 / resolution` rounded. Grid point
    /// `k` sits at `k / steps`, so halving the resolution nests grids exactly.
    pub fn steps(&self) -> usize {
        assert!(
            self.resolution > 0.0 && self.resolution <= 1.0,
            "grid resolution must be in (0, 1]"
        );
        (1.0 / self.resolution).round() as usize
    }

    fn point(&self, k: usize) -> f64 {
        k as f64 / self.steps() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Optimum {
    pub alpha: [f64; 2],
    pub power_w: f64,
}

/// Exhaustive search over `alpha` on the grid for the feasible point of least
/// BS power. Ties go to the smaller `alpha_1`. `None` when no grid point is
/// feasible.
pub fn grid_search_p1(
    ch: &ChannelRealization,
    config: &NetworkConfig,
    spec: GridSpec,
) -> Option<P1Optimum> {
    let n = spec.steps();
    let p = config.p_max_w();
    // Points with equal index sum have equal power, so scanning index sums
    // upwards with alpha_1 ascending inside each sum yields the tie-broken
    // minimum at the first feasible point.
    for total in 0..=n {
        for i in 0..=total {
            let alpha = [spec.point(i), spec.point(total - i)];
            if alpha[0] + alpha[1] > 1.0 {
                continue;
            }
            let sol = PowerSolution {
                alpha,
                ..PowerSolution::zero(p, [0.0; 2])
            };
            if p1_slacks(&sol, ch, config, 0.0).worst_value() >= 0.0 {
                return Some(P1Optimum {
                    alpha,
                    power_w: sol.bs_radiated_w(),
                });
            }
        }
    }
    None
}

/// Stage-1 point where both first-hop rate constraints hold with equality,
/// from the 2x2 linear system they form. `None` if that point has a
/// negative coefficient or a coefficient sum above 1, i.e. stage 1 is
/// infeasible.
pub fn vertex_p1(ch: &ChannelRealization, config: &NetworkConfig) -> Option<[f64; 2]> {
    let p = config.p_max_w();
    let g = config.sinr_threshold();
    let [h1, h2] = ch.g_bs_rsu;
    let s = ch.sigma_eps_sq;
    let n = ch.noise_w;
    // h1 P a1 = g (P s (a1 + a2) + n)
    // h2 P a2 = g (h2 P a1 + P s (a1 + a2) + n)
    let (a11, a12) = (h1 * p - g * p * s, -g * p * s);
    let (a21, a22) = (-g * (h2 * p + p * s), h2 * p - g * p * s);
    let det = a11 * a22 - a12 * a21;
    if !(det > 0.0) {
        return None;
    }
    let b = g * n;
    let a1 = (b * a22 - a12 * b) / det;
    let a2 = (a11 * b - a21 * b) / det;
    (a1 >= 0.0 && a2 >= 0.0 && a1 + a2 <= 1.0).then_some([a1, a2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2Optimum {
    pub beta: [f64; 2],
    pub xi: f64,
    pub power_w: f64,
}

/// Per-RSU exhaustive search over `(beta_1, beta_2, xi)` with the power
/// radiated by each RSU's neighbour frozen at `other_radiated_w[m]`.
///
/// The `xi` axis is dropped (`xi = 0`) for pure NOMA and for cells whose tag
/// gains are all zero. Ties go to the lexicographically smallest
/// `(beta_1, beta_2, xi)`.
pub fn grid_search_p2(
    ch: &ChannelRealization,
    config: &NetworkConfig,
    spec: GridSpec,
    q_rsu_w: [f64; 2],
    other_radiated_w: [f64; 2],
    mode: Mode,
) -> [Option<P2Optimum>; 2] {
    let n = spec.steps();
    let q_max = config.q_max_w();
    let feasible = |m: usize, beta: [f64; 2], xi: f64| {
        let sinr = second_hop_sinr(ch, m, q_rsu_w[m], beta, xi, other_radiated_w[m]);
        let used = q_rsu_w[m] * (beta[0] + beta[1]);
        rate_slack(sinr[0], config.c_min) >= 0.0
            && rate_slack(sinr[1], config.c_min) >= 0.0
            && used <= q_max
    };
    let mut out = [None, None];
    for (m, slot) in out.iter_mut().enumerate() {
        let tag = ch.g_rsu_tag[m] > 0.0 && ch.g_tag_veh[m].iter().any(|&g| g > 0.0);
        let xi_steps = if mode.reflects() && tag { n } else { 0 };
        *slot = 'search: {
            for total in 0..=n {
                for i in 0..=total {
                    let beta = [spec.point(i), spec.point(total - i)];
                    if beta[0] + beta[1] > 1.0 {
                        continue;
                    }
                    for k in 0..=xi_steps {
                        let xi = spec.point(k);
                        if feasible(m, beta, xi) {
                            break 'search Some(P2Optimum {
                                beta,
                                xi,
                                power_w: q_rsu_w[m] * (beta[0] + beta[1]),
                            });
                        }
                    }
                }
            }
            None
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_solution_violates_rates_only() {
        let config = NetworkConfig::default();
        let ch = ChannelRealization::from_seed(&config, 1).unwrap();
        let sol = PowerSolution::zero(config.p_max_w(), [1.0, 1.0]);
        let r = feasibility_check(&sol, &ch, &config, 1e-5);
        for s in &r.entries {
            if s.name.starts_with("rate") {
                assert!(s.value < 0.0, "{} = {}", s.name, s.value);
            } else {
                assert!(s.value >= 0.0, "{} = {}", s.name, s.value);
            }
        }
        assert!(!r.satisfied());
        assert!(r.worst().unwrap().name.starts_with("rate"));
    }

    #[test]
    fn grid_nests_under_halving() {
        let coarse = GridSpec { resolution: 0.1 };
        let fine = GridSpec { resolution: 0.05 };
        for k in 0..=coarse.steps() {
            assert_eq!(coarse.point(k), fine.point(2 * k));
        }
    }
}
