//! Rayleigh fading channels with distance pathloss and the MMSE split of
//! each channel into an estimate plus an uncorrelated estimation error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{sample_placement, Placement, MIN_DISTANCE_M};

/// Power gain of a link with fading power `fading_power` (an exponential(1)
/// draw, i.e. `|H|^2` for Rayleigh `H`) at `distance_m` meters.
pub fn path_gain(fading_power: f64, distance_m: f64, zeta: f64) -> Result<f64> {
    if !(distance_m >= MIN_DISTANCE_M) {
        return Err(Error::Precondition(format!(
            "link distance {distance_m} m is below the {MIN_DISTANCE_M} m minimum"
        )));
    }
    if !(fading_power >= 0.0) {
        return Err(Error::Precondition(format!(
            "fading power {fading_power} is negative"
        )));
    }
    Ok(fading_power * distance_m.powf(-zeta))
}

/// Draws `|H|^2` for a unit-power Rayleigh coefficient.
pub fn draw_fading_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// One channel split into its estimate and the estimation error statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiSplit {
    /// `|h_hat|^2`.
    pub estimated_gain: f64,
    /// `sigma_eps^2`, shared by every channel of a realization.
    pub error_variance: f64,
    /// One draw of the complex error `eps ~ CN(0, sigma_eps^2)` as `(re, im)`.
    pub error: (f64, f64),
}

/// MMSE decomposition `h = h_hat + eps`.
///
/// The drawn gain is taken as the estimate; the error enters the rate
/// expressions only through its variance, which is returned alongside a
/// sample of `eps`. Always consumes two normal draws so the random stream
/// does not depend on `sigma_eps`.
pub fn split_csi<R: Rng + ?Sized>(true_gain: f64, sigma_eps: f64, rng: &mut R) -> CsiSplit {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let scale = sigma_eps * std::f64::consts::FRAC_1_SQRT_2;
    CsiSplit {
        estimated_gain: true_gain,
        error_variance: sigma_eps * sigma_eps,
        error: (scale * re, scale * im),
    }
}

/// Estimated power gains of every link in one channel draw.
///
/// Indices follow the NOMA ordering: RSU 0 has the stronger BS link and, in
/// each cell, vehicle 0 has the stronger RSU link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `|h_m|^2`, BS to RSU `m`.
    pub g_bs_rsu: [f64; 2],
    /// `|h_{i,m}|^2`, RSU `m` to its vehicle `i` (indexed `[m][i]`).
    pub g_rsu_veh: [[f64; 2]; 2],
    /// `|h^b_{i,m}|^2`, tag of cell `m` to vehicle `i`.
    pub g_tag_veh: [[f64; 2]; 2],
    /// `|h_{b,m}|^2`, RSU `m` to its tag.
    pub g_rsu_tag: [f64; 2],
    /// `|h^{m'}_{i,m}|^2`, the other RSU to vehicle `i` of cell `m`.
    pub g_cross: [[f64; 2]; 2],
    pub sigma_eps_sq: f64,
    pub noise_w: f64,
}

impl ChannelRealization {
    /// Cascaded RSU-tag-vehicle gain `|h^b_{i,m}|^2 |h_{b,m}|^2`.
    pub fn backscatter_gain(&self, m: usize, i: usize) -> f64 {
        self.g_tag_veh[m][i] * self.g_rsu_tag[m]
    }

    pub fn is_ordered(&self) -> bool {
        self.g_bs_rsu[0] > self.g_bs_rsu[1] && self.g_rsu_veh.iter().all(|cell| cell[0] > cell[1])
    }

    /// Generates the realization for one derived seed.
    pub fn from_seed(config: &NetworkConfig, seed: u64) -> Result<Self> {
        generate_realization(config, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn relabel(&mut self) {
        if self.g_bs_rsu[0] < self.g_bs_rsu[1] {
            self.g_bs_rsu.swap(0, 1);
            self.g_rsu_veh.swap(0, 1);
            self.g_tag_veh.swap(0, 1);
            self.g_rsu_tag.swap(0, 1);
            self.g_cross.swap(0, 1);
        }
        for m in 0..2 {
            if self.g_rsu_veh[m][0] < self.g_rsu_veh[m][1] {
                self.g_rsu_veh[m].swap(0, 1);
                self.g_tag_veh[m].swap(0, 1);
                self.g_cross[m].swap(0, 1);
            }
        }
    }
}

/// Samples a placement and independent Rayleigh fading on every link, then
/// relabels RSUs and vehicles so the NOMA ordering holds.
///
/// Placement, fading and estimation error use separate sub-streams seeded
/// from three draws of `rng`, so runs that differ only in geometry or in
/// `sigma_eps` still share their fading.
pub fn generate_realization<R: Rng + ?Sized>(
    config: &NetworkConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let mut geometry_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let mut fading_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let mut csi_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());

    let placement: Placement = sample_placement(config, &mut geometry_rng)?;
    let zeta = config.pathloss_exp;
    let mut link = |a, b| -> Result<f64> {
        let d = crate::geometry::Point::distance(a, b);
        let gain = path_gain(draw_fading_power(&mut fading_rng), d, zeta)?;
        Ok(split_csi(gain, config.sigma_eps, &mut csi_rng).estimated_gain)
    };

    let p = &placement;
    let g_bs_rsu = [link(p.bs, p.rsu[0])?, link(p.bs, p.rsu[1])?];
    let mut g_rsu_veh = [[0.0; 2]; 2];
    let mut g_tag_veh = [[0.0; 2]; 2];
    let mut g_cross = [[0.0; 2]; 2];
    for m in 0..2 {
        for i in 0..2 {
            g_rsu_veh[m][i] = link(p.rsu[m], p.vehicles[m][i])?;
        }
    }
    for m in 0..2 {
        for i in 0..2 {
            g_tag_veh[m][i] = link(p.tags[m], p.vehicles[m][i])?;
        }
    }
    let mut g_rsu_tag = [link(p.rsu[0], p.tags[0])?, link(p.rsu[1], p.tags[1])?];
    for m in 0..2 {
        for i in 0..2 {
            g_cross[m][i] = link(p.rsu[1 - m], p.vehicles[m][i])?;
        }
    }
    if !config.backscatter_tags {
        g_tag_veh = [[0.0; 2]; 2];
        g_rsu_tag = [0.0; 2];
    }

    let mut realization = ChannelRealization {
        g_bs_rsu,
        g_rsu_veh,
        g_tag_veh,
        g_rsu_tag,
        g_cross,
        sigma_eps_sq: config.sigma_eps_sq(),
        noise_w: config.noise_w(),
    };
    realization.relabel();
    Ok(realization)
}
