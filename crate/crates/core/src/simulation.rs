//! Monte Carlo harness: one realization at a time, and parameter sweeps
//! aggregated over many realizations for both the AmBC system and the pure
//! NOMA baseline.
//!
//! Realization `r` of every sweep point and every mode uses the channel seed
//! [`realization_seed`]`(master, r)`, so all columns of a sweep are paired on
//! identical channels (common random numbers).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::rates::{end_to_end_rates, energy_efficiency, icsi_interference, total_power};
use crate::solver::{solve_algorithm1, Mode, SolveOutcome, SolverSettings, Status};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Channel seed of realization `index` under `master`.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationMetrics {
    /// Energy efficiency in Mb/J, `None` unless the solve converged.
    pub ee_mbpj: Option<f64>,
    pub icsi_w: f64,
    pub sum_rate: f64,
    pub total_power_w: f64,
    pub iterations: usize,
    pub status: Status,
}

/// Draws the channel for `seed`, runs both stages in `mode` and evaluates the
/// metrics. Non-converged solves are reported through `status`, not as
/// errors.
pub fn run_realization(
    config: &NetworkConfig,
    seed: u64,
    mode: Mode,
) -> Result<(SolveOutcome, RealizationMetrics)> {
    let ch = ChannelRealization::from_seed(config, seed)?;
    let settings = SolverSettings::from_config(config).with_mode(mode);
    let outcome = solve_algorithm1(&ch, config, &settings);
    let report = end_to_end_rates(&ch, &outcome.solution);
    let ee = energy_efficiency(&report, &outcome.solution, config)?;
    let metrics = RealizationMetrics {
        ee_mbpj: outcome.converged.then_some(ee),
        icsi_w: icsi_interference(&ch, &outcome.solution),
        sum_rate: report.sum_rate,
        total_power_w: total_power(&outcome.solution),
        iterations: outcome.iterations_used,
        status: outcome.status,
    };
    Ok((outcome, metrics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    SigmaEps,
    /// BS budget in dBm; the RSU budget follows when it is left automatic.
    PMax,
    RsuRadius,
    CircuitPower,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] = [
        SweepParam::SigmaEps,
        SweepParam::PMax,
        SweepParam::RsuRadius,
        SweepParam::CircuitPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::SigmaEps => "sigma_eps",
            SweepParam::PMax => "p_max",
            SweepParam::RsuRadius => "rsu_radius",
            SweepParam::CircuitPower => "circuit_power",
        }
    }

    /// Copy of `base` with the swept field set to `value`.
    pub fn apply(self, base: &NetworkConfig, value: f64) -> NetworkConfig {
        let mut c = base.clone();
        match self {
            SweepParam::SigmaEps => c.sigma_eps = value,
            SweepParam::PMax => c.p_max = value,
            SweepParam::RsuRadius => c.rsu_radius_m = value,
            SweepParam::CircuitPower => c.circuit_power_dbm = value,
        }
        c
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            format!("unknown sweep parameter `{s}` (expected sigma_eps, p_max, rsu_radius or circuit_power)")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub base: NetworkConfig,
    pub realizations: usize,
    /// Run realizations on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl SweepPlan {
    pub fn new(param: SweepParam, values: Vec<f64>, base: NetworkConfig) -> Self {
        let realizations = base.n_realizations;
        Self {
            param,
            values,
            modes: Mode::ALL.to_vec(),
            base,
            realizations,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.values.is_empty() {
            return bad("values", "sweep needs at least one value");
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return bad("values", "sweep values must be strictly ordered");
        }
        if self.modes.is_empty() {
            return bad("modes", "sweep needs at least one mode");
        }
        if self.realizations == 0 {
            return bad("n_realizations", "must be at least 1");
        }
        for &v in &self.values {
            self.param.apply(&self.base, v).validate()?;
        }
        Ok(())
    }
}

/// Aggregates of one `(value, mode)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub mode: Mode,
    /// Mean energy efficiency over converged runs, Mb/J.
    pub mean_ee_mbpj: f64,
    pub stderr_ee: f64,
    /// Mean iCSI interference over converged runs, watts.
    pub mean_icsi_w: f64,
    pub feasibility_rate: f64,
    /// Mean iterations over all runs.
    pub mean_iters: f64,
    /// Realizations run.
    pub n: usize,
    pub n_converged: usize,
    /// Per-realization energy efficiency, `None` where the solve did not
    /// converge. Indexed by realization.
    pub ee_samples: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub master_seed: u64,
    /// Ordered by value, then by mode in plan order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, value: f64, mode: Mode) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.value == value && p.mode == mode)
    }

    /// Points of one mode in sweep order.
    pub fn series(&self, mode: Mode) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.mode == mode).collect()
    }
}

/// Mean and standard error of the mean. The standard error is zero for
/// fewer than two samples; the mean is NaN for none.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn aggregate(value: f64, mode: Mode, runs: &[RealizationMetrics]) -> SweepPoint {
    let ok: Vec<&RealizationMetrics> = runs.iter().filter(|r| r.ee_mbpj.is_some()).collect();
    let ee: Vec<f64> = ok.iter().filter_map(|r| r.ee_mbpj).collect();
    let (mean_ee_mbpj, stderr_ee) = mean_stderr(&ee);
    let icsi: Vec<f64> = ok.iter().map(|r| r.icsi_w).collect();
    let n = runs.len();
    SweepPoint {
        value,
        mode,
        mean_ee_mbpj,
        stderr_ee,
        mean_icsi_w: mean_stderr(&icsi).0,
        feasibility_rate: ok.len() as f64 / n as f64,
        mean_iters: runs.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64,
        n,
        n_converged: ok.len(),
        ee_samples: runs.iter().map(|r| r.ee_mbpj).collect(),
    }
}

/// Runs every `(value, mode)` cell of the plan. Reductions run in
/// realization order, so serial and parallel runs agree bit for bit.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let master = plan.base.seed;
    let mut points = Vec::with_capacity(plan.values.len() * plan.modes.len());
    for &value in &plan.values {
        let config = plan.param.apply(&plan.base, value);
        for &mode in &plan.modes {
            let run = |r: usize| {
                run_realization(&config, realization_seed(master, r as u64), mode).map(|(_, m)| m)
            };
            let runs: Vec<RealizationMetrics> = if plan.parallel {
                (0..plan.realizations)
                    .into_par_iter()
                    .map(run)
                    .collect::<Result<_>>()?
            } else {
                (0..plan.realizations).map(run).collect::<Result<_>>()?
            };
            points.push(aggregate(value, mode, &runs));
        }
    }
    Ok(SweepResult {
        param: plan.param,
        master_seed: master,
        points,
    })
}

/// AmBC minus pure-NOMA energy efficiency at one sweep value, paired over
/// realizations where both modes converged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub value: f64,
    pub mean_diff_mbpj: f64,
    pub stderr_diff: f64,
    /// Ratio of the two modes' mean energy efficiencies.
    pub ratio: f64,
    pub n_paired: usize,
    /// AmBC falls below pure NOMA by more than one standard error.
    pub violation: bool,
}

pub fn compare_modes(result: &SweepResult) -> Result<Vec<ModeComparison>> {
    let mut values: Vec<f64> = Vec::new();
    for p in &result.points {
        if !values.contains(&p.value) {
            values.push(p.value);
        }
    }
    values
        .into_iter()
        .map(|value| {
            let missing = || {
                Error::Precondition(format!(
                    "sweep has no AmBC and pure NOMA columns at {value}"
                ))
            };
            let a = result.point(value, Mode::Ambc).ok_or_else(missing)?;
            let b = result.point(value, Mode::PureNoma).ok_or_else(missing)?;
            let diffs: Vec<f64> = a
                .ee_samples
                .iter()
                .zip(&b.ee_samples)
                .filter_map(|(x, y)| Some((*x)? - (*y)?))
                .collect();
            let (mean_diff_mbpj, stderr_diff) = mean_stderr(&diffs);
            Ok(ModeComparison {
                value,
                mean_diff_mbpj,
                stderr_diff,
                ratio: a.mean_ee_mbpj / b.mean_ee_mbpj,
                n_paired: diffs.len(),
                violation: mean_diff_mbpj < -stderr_diff,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|r| realization_seed(2022, r)).collect();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
        assert_eq!(realization_seed(2022, 7), a[7]);
        assert_ne!(realization_seed(2023, 7), a[7]);
    }

    #[test]
    fn mean_stderr_small_cases() {
        assert!(mean_stderr(&[]).0.is_nan());
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plan_validation() {
        let base = NetworkConfig::default();
        let mut plan = SweepPlan::new(SweepParam::SigmaEps, vec![0.0, 1e-3], base);
        plan.validate().unwrap();
        plan.values = vec![1e-3, 1e-3];
        assert!(plan.validate().is_err());
        plan.values = vec![];
        assert!(plan.validate().is_err());
        plan.values = vec![-1.0];
        assert!(matches!(
            plan.validate(),
            Err(Error::InvalidConfig {
                field: "sigma_eps",
                ..
            })
        ));
    }

    #[test]
    fn sweep_param_names() {
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
    }
}
