//! Scenario and solver parameters.
//!
//! A [`NetworkConfig`] can be read from (and echoed back to) a plain text
//! file of `key = value` lines whose keys are the field names below. Powers
//! are given in dBm and converted to watts on access.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MIN_DISTANCE_M;
use crate::units::dbm_to_watt;

/// Ratio between the BS budget and the default per-RSU budget, in dB.
const HALF_POWER_DB: f64 = 3.010_299_956_639_812;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// BS power budget, dBm.
    pub p_max: f64,
    /// Per-RSU power budget, dBm. `None` means half of the BS budget.
    pub q_max: Option<f64>,
    /// Standard deviation of the channel estimation error.
    pub sigma_eps: f64,
    /// Minimum spectral efficiency per link, bps/Hz.
    pub c_min: f64,
    pub pathloss_exp: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_density_dbm: f64,
    pub bandwidth_hz: f64,
    pub circuit_power_dbm: f64,
    pub bs_radius_m: f64,
    pub rsu_radius_m: f64,
    pub n_realizations: usize,
    pub seed: u64,
    /// Whether each RSU cell contains a backscatter tag. Without tags the
    /// reflected path carries no power.
    pub backscatter_tags: bool,
    pub step_size_initial: f64,
    /// Iterations over which the step size stays close to its initial value
    /// before the `1/sqrt(t)` decay takes over.
    pub step_warmup: f64,
    /// Quadratic penalty weight of the augmented Lagrangian.
    pub augmentation: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    /// Length of the windows of violating iterations compared by the
    /// infeasibility test.
    pub infeasibility_window: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            p_max: 45.0,
            q_max: None,
            sigma_eps: 1e-5,
            c_min: 0.5,
            pathloss_exp: 4.0,
            noise_density_dbm: -170.0,
            bandwidth_hz: 1e6,
            circuit_power_dbm: 5.0,
            bs_radius_m: 50.0,
            rsu_radius_m: 20.0,
            n_realizations: 1000,
            seed: 2022,
            backscatter_tags: true,
            step_size_initial: 0.5,
            step_warmup: 200.0,
            augmentation: 5.0,
            max_iterations: 10_000,
            convergence_tol: 1e-5,
            infeasibility_window: 500,
        }
    }
}

/// Every accepted configuration key, in echo order.
pub const KEYS: &[&str] = &[
    "p_max",
    "q_max",
    "sigma_eps",
    "c_min",
    "pathloss_exp",
    "noise_density_dbm",
    "bandwidth_hz",
    "circuit_power_dbm",
    "bs_radius_m",
    "rsu_radius_m",
    "n_realizations",
    "seed",
    "backscatter_tags",
    "step_size_initial",
    "step_warmup",
    "augmentation",
    "max_iterations",
    "convergence_tol",
    "infeasibility_window",
];

impl NetworkConfig {
    pub fn p_max_w(&self) -> f64 {
        dbm_to_watt(self.p_max)
    }

    pub fn q_max_dbm(&self) -> f64 {
        self.q_max.unwrap_or(self.p_max - HALF_POWER_DB)
    }

    pub fn q_max_w(&self) -> f64 {
        dbm_to_watt(self.q_max_dbm())
    }

    /// Total receiver noise power over the configured bandwidth, watts.
    pub fn noise_w(&self) -> f64 {
        dbm_to_watt(self.noise_density_dbm) * self.bandwidth_hz
    }

    pub fn circuit_power_w(&self) -> f64 {
        dbm_to_watt(self.circuit_power_dbm)
    }

    /// SINR threshold `2^c_min - 1` equivalent to the rate requirement.
    pub fn sinr_threshold(&self) -> f64 {
        self.c_min.exp2() - 1.0
    }

    pub fn sigma_eps_sq(&self) -> f64 {
        self.sigma_eps * self.sigma_eps
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &'static str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig {
                    field,
                    reason: reason.to_string(),
                })
            }
        }
        check(
            self.p_max.is_finite(),
            "p_max",
            "must be a finite dBm level",
        )?;
        if let Some(q) = self.q_max {
            check(q.is_finite(), "q_max", "must be a finite dBm level")?;
        }
        check(
            self.sigma_eps.is_finite() && self.sigma_eps >= 0.0,
            "sigma_eps",
            "must be finite and non-negative",
        )?;
        check(
            self.c_min.is_finite() && self.c_min > 0.0,
            "c_min",
            "must be positive",
        )?;
        check(
            self.pathloss_exp.is_finite() && self.pathloss_exp > 0.0,
            "pathloss_exp",
            "must be positive",
        )?;
        check(
            self.noise_density_dbm.is_finite(),
            "noise_density_dbm",
            "must be finite",
        )?;
        check(
            self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0,
            "bandwidth_hz",
            "must be positive",
        )?;
        check(
            self.circuit_power_dbm.is_finite(),
            "circuit_power_dbm",
            "must be finite",
        )?;
        check(
            self.bs_radius_m.is_finite() && self.bs_radius_m > MIN_DISTANCE_M,
            "bs_radius_m",
            "must exceed the 1 m minimum link distance",
        )?;
        check(
            self.rsu_radius_m.is_finite() && self.rsu_radius_m > MIN_DISTANCE_M,
            "rsu_radius_m",
            "must exceed the 1 m minimum link distance",
        )?;
        check(
            self.n_realizations > 0,
            "n_realizations",
            "must be at least 1",
        )?;
        check(
            self.step_size_initial.is_finite() && self.step_size_initial > 0.0,
            "step_size_initial",
            "must be positive",
        )?;
        check(
            self.step_warmup.is_finite() && self.step_warmup >= 1.0,
            "step_warmup",
            "must be at least 1",
        )?;
        check(
            self.augmentation.is_finite() && self.augmentation >= 0.0,
            "augmentation",
            "must be finite and non-negative",
        )?;
        check(
            self.max_iterations > 0,
            "max_iterations",
            "must be at least 1",
        )?;
        check(
            self.convergence_tol.is_finite() && self.convergence_tol > 0.0,
            "convergence_tol",
            "must be positive",
        )?;
        check(
            self.infeasibility_window > 0,
            "infeasibility_window",
            "must be at least 1",
        )?;
        Ok(())
    }

    /// Sets one field from its textual form. The result is not validated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let field = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| Error::UnknownKey(key.to_string()))?;
        let bad = |what: &str| Error::InvalidConfig {
            field,
            reason: format!("cannot parse `{value}` as {what}"),
        };
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| bad("a non-negative integer"))
        };
        match field {
            "p_max" => self.p_max = float()?,
            "q_max" => {
                self.q_max = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(float()?)
                }
            }
            "sigma_eps" => self.sigma_eps = float()?,
            "c_min" => self.c_min = float()?,
            "pathloss_exp" => self.pathloss_exp = float()?,
            "noise_density_dbm" => self.noise_density_dbm = float()?,
            "bandwidth_hz" => self.bandwidth_hz = float()?,
            "circuit_power_dbm" => self.circuit_power_dbm = float()?,
            "bs_radius_m" => self.bs_radius_m = float()?,
            "rsu_radius_m" => self.rsu_radius_m = float()?,
            "n_realizations" => self.n_realizations = count()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| bad("a 64-bit unsigned integer"))?
            }
            "backscatter_tags" => {
                self.backscatter_tags = value.parse().map_err(|_| bad("true or false"))?
            }
            "step_size_initial" => self.step_size_initial = float()?,
            "step_warmup" => self.step_warmup = float()?,
            "augmentation" => self.augmentation = float()?,
            "max_iterations" => self.max_iterations = count()?,
            "convergence_tol" => self.convergence_tol = float()?,
            "infeasibility_window" => self.infeasibility_window = count()?,
            _ => unreachable!("key list and setter out of sync"),
        }
        Ok(())
    }

    /// Textual value of a field, in the form accepted by [`set`](Self::set).
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "p_max" => self.p_max.to_string(),
            "q_max" => self
                .q_max
                .map_or_else(|| "auto".to_string(), |q| q.to_string()),
            "sigma_eps" => self.sigma_eps.to_string(),
            "c_min" => self.c_min.to_string(),
            "pathloss_exp" => self.pathloss_exp.to_string(),
            "noise_density_dbm" => self.noise_density_dbm.to_string(),
            "bandwidth_hz" => self.bandwidth_hz.to_string(),
            "circuit_power_dbm" => self.circuit_power_dbm.to_string(),
            "bs_radius_m" => self.bs_radius_m.to_string(),
            "rsu_radius_m" => self.rsu_radius_m.to_string(),
            "n_realizations" => self.n_realizations.to_string(),
            "seed" => self.seed.to_string(),
            "backscatter_tags" => self.backscatter_tags.to_string(),
            "step_size_initial" => self.step_size_initial.to_string(),
            "step_warmup" => self.step_warmup.to_string(),
            "augmentation" => self.augmentation.to_string(),
            "max_iterations" => self.max_iterations.to_string(),
            "convergence_tol" => self.convergence_tol.to_string(),
            "infeasibility_window" => self.infeasibility_window.to_string(),
            _ => return None,
        })
    }

    /// All fields as `(key, value)` pairs in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|k| (*k, self.get(k).expect("known key")))
            .collect()
    }

    /// Renders the configuration as `key = value` lines.
    pub fn to_key_values(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Malformed {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Parses a complete configuration from `key = value` text, starting
    /// from the defaults, and validates it.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_key_values(text)?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let config = NetworkConfig::default();
        config.validate().unwrap();
        assert!((config.noise_w() - 1e-14).abs() < 1e-16);
        assert!((config.q_max_w() - config.p_max_w() / 2.0).abs() < 1e-12);
        assert!((config.sinr_threshold() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn echo_round_trips() {
        let mut config = NetworkConfig::default();
        config.sigma_eps = 1.234_567_890_123e-3;
        config.q_max = Some(40.5);
        config.seed = u64::MAX;
        config.backscatter_tags = false;
        let parsed = NetworkConfig::from_key_values(&config.to_key_values()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert_eq!(
            NetworkConfig::from_key_values("bogus = 1"),
            Err(Error::UnknownKey("bogus".into()))
        );
        match NetworkConfig::from_key_values("c_min = -1") {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "c_min"),
            other => panic!("unexpected {other:?}"),
        }
        match NetworkConfig::from_key_values("sigma_eps = -0.1") {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "sigma_eps"),
            other => panic!("unexpected {other:?}"),
        }
        match NetworkConfig::from_key_values("rsu_radius_m = 0.0") {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "rsu_radius_m"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            NetworkConfig::from_key_values("just words"),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let config =
            NetworkConfig::from_key_values("# header\n\n  sigma_eps = 0.001  \nq_max = auto\n")
                .unwrap();
        assert_eq!(config.sigma_eps, 1e-3);
        assert_eq!(config.q_max, None);
    }
}
