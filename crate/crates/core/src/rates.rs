//! SINR, rate, power and energy-efficiency expressions for both hops.
//!
//! Rates are spectral efficiencies in bps/Hz. The half-duplex slot fraction
//! and the bandwidth are applied only when reporting throughput.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Fraction of the frame used by each hop.
pub const SLOT: f64 = 0.5;

/// Primal variables of the two-stage problem plus the powers they scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    /// BS power-allocation coefficients `alpha_m`.
    pub alpha: [f64; 2],
    /// RSU power-allocation coefficients, `beta[m][i]` for vehicle `i` of RSU `m`.
    pub beta: [[f64; 2]; 2],
    /// Tag reflection coefficients `xi_m`.
    pub xi: [f64; 2],
    /// BS transmit power `P`, watts.
    pub p_bs_w: f64,
    /// RSU transmit powers `Q_m`, watts.
    pub q_rsu_w: [f64; 2],
}

impl PowerSolution {
    pub fn zero(p_bs_w: f64, q_rsu_w: [f64; 2]) -> Self {
        Self {
            alpha: [0.0; 2],
            beta: [[0.0; 2]; 2],
            xi: [0.0; 2],
            p_bs_w,
            q_rsu_w,
        }
    }

    /// Power actually radiated by RSU `m`, `Q_m (beta_{1,m} + beta_{2,m})`.
    pub fn rsu_radiated_w(&self, m: usize) -> f64 {
        self.q_rsu_w[m] * (self.beta[m][0] + self.beta[m][1])
    }

    pub fn bs_radiated_w(&self) -> f64 {
        self.p_bs_w * (self.alpha[0] + self.alpha[1])
    }
}

/// Per-hop and end-to-end rates of one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// First-hop rates `C_m`.
    pub c_rsu: [f64; 2],
    /// Second-hop rates `C_{i,m}`, indexed `[m][i]`.
    pub c_veh: [[f64; 2]; 2],
    /// End-to-end rates, indexed `[m][i]`.
    pub e2e: [[f64; 2]; 2],
    pub sum_rate: f64,
    pub t1: f64,
    pub t2: f64,
}

/// First-hop SINRs `(gamma_1, gamma_2)`; RSU 0 removes RSU 1's signal by SIC.
pub fn sinr_first_hop(ch: &ChannelRealization, sol: &PowerSolution) -> [f64; 2] {
    let p = sol.p_bs_w;
    let [a1, a2] = sol.alpha;
    let [h1, h2] = ch.g_bs_rsu;
    let csi = p * ch.sigma_eps_sq * (a1 + a2);
    [
        h1 * p * a1 / (csi + ch.noise_w),
        h2 * p * a2 / (h2 * p * a1 + csi + ch.noise_w),
    ]
}

/// Second-hop SINRs of the two vehicles in cell `m` for explicit RSU power
/// `q`, coefficients `beta`, reflection `xi` and the power radiated by the
/// other RSU.
pub fn second_hop_sinr(
    ch: &ChannelRealization,
    m: usize,
    q: f64,
    beta: [f64; 2],
    xi: f64,
    other_radiated_w: f64,
) -> [f64; 2] {
    let useful = |i: usize| ch.g_rsu_veh[m][i] + xi * ch.backscatter_gain(m, i);
    let csi = ch.sigma_eps_sq * (q * (beta[0] + beta[1]) + xi);
    let noma = q * beta[0] * useful(1);
    let inter = |i: usize| ch.g_cross[m][i] * other_radiated_w;
    [
        q * beta[0] * useful(0) / (csi + inter(0) + ch.noise_w),
        q * beta[1] * useful(1) / (noma + csi + inter(1) + ch.noise_w),
    ]
}

/// Second-hop SINRs `(gamma_{1,m}, gamma_{2,m})` of a full solution.
pub fn sinr_second_hop(ch: &ChannelRealization, sol: &PowerSolution, m: usize) -> [f64; 2] {
    second_hop_sinr(
        ch,
        m,
        sol.q_rsu_w[m],
        sol.beta[m],
        sol.xi[m],
        sol.rsu_radiated_w(1 - m),
    )
}

/// `slot * log2(1 + sinr)`.
pub fn rate(sinr: f64, slot: f64) -> f64 {
    slot * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Decode-and-forward end-to-end rate from the two hop rates.
pub fn end_to_end_rate(c_first: f64, c_second: f64) -> f64 {
    0.5 * c_first.min(c_second)
}

pub fn end_to_end_rates(ch: &ChannelRealization, sol: &PowerSolution) -> RateReport {
    let first = sinr_first_hop(ch, sol);
    let c_rsu = [rate(first[0], SLOT), rate(first[1], SLOT)];
    let mut c_veh = [[0.0; 2]; 2];
    let mut e2e = [[0.0; 2]; 2];
    for m in 0..2 {
        let second = sinr_second_hop(ch, sol, m);
        for i in 0..2 {
            c_veh[m][i] = rate(second[i], SLOT);
            e2e[m][i] = end_to_end_rate(c_rsu[m], c_veh[m][i]);
        }
    }
    let sum_rate = e2e.iter().flatten().sum();
    RateReport {
        c_rsu,
        c_veh,
        e2e,
        sum_rate,
        t1: SLOT,
        t2: SLOT,
    }
}

/// Total transmit power of BS and RSUs, watts.
pub fn total_power(sol: &PowerSolution) -> f64 {
    sol.bs_radiated_w() + sol.rsu_radiated_w(0) + sol.rsu_radiated_w(1)
}

/// Delivered bits per joule including circuit power, in Mb/J.
pub fn energy_efficiency(
    report: &RateReport,
    sol: &PowerSolution,
    config: &NetworkConfig,
) -> Result<f64> {
    let consumed = total_power(sol) + config.circuit_power_w();
    if !(consumed > 0.0) {
        return Err(Error::Precondition(format!(
            "total power consumption {consumed} W is not positive"
        )));
    }
    Ok(report.sum_rate * config.bandwidth_hz / consumed / 1e6)
}

/// Interference power caused by channel estimation errors, summed over both
/// hops, watts.
pub fn icsi_interference(ch: &ChannelRealization, sol: &PowerSolution) -> f64 {
    let first = sol.bs_radiated_w() * ch.sigma_eps_sq;
    let second: f64 = (0..2)
        .map(|m| ch.sigma_eps_sq * (sol.rsu_radiated_w(m) + sol.xi[m]))
        .sum();
    first + second
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;

    fn sample_channel() -> ChannelRealization {
        ChannelRealization {
            g_bs_rsu: [1e-8, 5e-9],
            g_rsu_veh: [[3e-5, 1e-5], [2e-5, 4e-6]],
            g_tag_veh: [[2e-4, 1e-4], [3e-4, 5e-5]],
            g_rsu_tag: [1e-3, 2e-3],
            g_cross: [[1e-7, 2e-7], [3e-7, 1e-7]],
            sigma_eps_sq: 1e-6,
            noise_w: 1e-14,
        }
    }

    fn sample_solution() -> PowerSolution {
        PowerSolution {
            alpha: [0.2, 0.8],
            beta: [[0.1, 0.3], [0.2, 0.5]],
            xi: [0.7, 0.4],
            p_bs_w: 10.0,
            q_rsu_w: [2.0, 8.0],
        }
    }

    #[test]
    fn first_hop_hand_values() {
        let (ch, sol) = (sample_channel(), sample_solution());
        let g = sinr_first_hop(&ch, &sol);
        // denominators: 10*1e-6*1 + 1e-14 and 5e-9*10*0.2 + that
        let d1 = 1e-5 + 1e-14;
        let d2 = 1e-8 + 1e-5 + 1e-14;
        assert!((g[0] - 2e-8 / d1).abs() <= 1e-15 * g[0]);
        assert!((g[1] - 4e-8 / d2).abs() <= 1e-15 * g[1]);
    }

    #[test]
    fn silent_transmitters_give_zero_sinr() {
        let ch = sample_channel();
        let sol = PowerSolution::zero(10.0, [2.0, 8.0]);
        assert_eq!(sinr_first_hop(&ch, &sol), [0.0, 0.0]);
        assert_eq!(sinr_second_hop(&ch, &sol, 0), [0.0, 0.0]);
        assert_eq!(end_to_end_rates(&ch, &sol).sum_rate, 0.0);
        assert_eq!(total_power(&sol), 0.0);
    }

    #[test]
    fn unit_snr_construction() {
        let mut ch = sample_channel();
        ch.sigma_eps_sq = 0.0;
        let p = 4.0;
        ch.g_bs_rsu[0] = ch.noise_w / p;
        let sol = PowerSolution {
            alpha: [1.0, 0.0],
            ..PowerSolution::zero(p, [0.0; 2])
        };
        assert!((sinr_first_hop(&ch, &sol)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(0.0, 0.5), 0.0);
        assert!((rate(1.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((rate(3.0, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(end_to_end_rate(2.0, 1.0), 0.5);
    }

    #[test]
    fn total_power_arithmetic() {
        let sol = PowerSolution {
            alpha: [0.3, 0.5],
            beta: [[0.25; 2]; 2],
            xi: [0.0; 2],
            p_bs_w: 10.0,
            q_rsu_w: [4.0, 4.0],
        };
        assert!((total_power(&sol) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn energy_efficiency_units() {
        let config = NetworkConfig {
            circuit_power_dbm: 30.0,
            ..NetworkConfig::default()
        };
        let sol = PowerSolution::zero(1.0, [0.0; 2]);
        let report = RateReport {
            c_rsu: [0.0; 2],
            c_veh: [[0.0; 2]; 2],
            e2e: [[0.25; 2]; 2],
            sum_rate: 1.0,
            t1: SLOT,
            t2: SLOT,
        };
        assert!((energy_efficiency(&report, &sol, &config).unwrap() - 1.0).abs() < 1e-12);
        let zero = RateReport {
            sum_rate: 0.0,
            ..report
        };
        assert_eq!(energy_efficiency(&zero, &sol, &config).unwrap(), 0.0);
    }

    #[test]
    fn energy_efficiency_needs_positive_consumption() {
        let config = NetworkConfig {
            circuit_power_dbm: f64::NEG_INFINITY,
            ..NetworkConfig::default()
        };
        let sol = PowerSolution::zero(1.0, [0.0; 2]);
        let report = end_to_end_rates(&sample_channel(), &sol);
        assert!(energy_efficiency(&report, &sol, &config).is_err());
    }

    #[test]
    fn icsi_vanishes_with_perfect_csi() {
        let mut ch = sample_channel();
        ch.sigma_eps_sq = 0.0;
        assert_eq!(icsi_interference(&ch, &sample_solution()), 0.0);
    }

    #[test]
    fn icsi_scales_with_error_variance() {
        let mut ch = sample_channel();
        let mut sol = sample_solution();
        sol.xi = [0.0; 2];
        ch.sigma_eps_sq = 1e-10;
        let low = icsi_interference(&ch, &sol);
        ch.sigma_eps_sq = 1e-8;
        let high = icsi_interference(&ch, &sol);
        assert!((high / low - 100.0).abs() < 1e-9);
    }
}
