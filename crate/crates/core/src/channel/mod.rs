//! Channel model: distance-law path loss, sectorized antenna pattern,
//! correlated lognormal shadowing, and capped-Shannon spectral
//! efficiency. All gains are linear power ratios unless a name says dB.

pub mod graph;

pub use graph::{build_link_graph, build_link_graph_with, Coupling, GraphOptions, Link, LinkGraph};

use serde::{Deserialize, Serialize};

use crate::geometry::wrap_angle_deg;
use crate::rng;
use crate::scenario::{BaseStation, BsClass, MobileStation, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub carrier_freq_ghz: f64,
    /// Path loss intercept, dB at 1 m.
    pub pathloss_a_db: f64,
    /// Path loss slope, dB per decade of distance.
    pub pathloss_b_db_per_decade: f64,
    pub shadow_stddev_micro_db: f64,
    pub shadow_stddev_macro_db: f64,
    pub shadow_stddev_femto_db: f64,
    /// Correlation of shadowing between different sites seen by one MS.
    pub intersite_corr: f64,
    /// Correlation between sectors of one site (1 = shared value).
    pub intrasite_corr: f64,
    pub antenna_theta3db_deg: f64,
    pub antenna_am_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub ue_noise_figure_db: f64,
    /// Gap to Shannon capacity, dB.
    pub beta_loss_db: f64,
    /// Spectral efficiency ceiling, bits/s/Hz.
    pub rho_max_bps_hz: f64,
    /// Candidate cells per mobile (strongest-K).
    pub candidate_k: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            carrier_freq_ghz: 2.1,
            pathloss_a_db: 15.3,
            pathloss_b_db_per_decade: 37.6,
            shadow_stddev_micro_db: 10.0,
            shadow_stddev_macro_db: 8.0,
            shadow_stddev_femto_db: 8.0,
            intersite_corr: 0.5,
            intrasite_corr: 1.0,
            antenna_theta3db_deg: 70.0,
            antenna_am_db: 25.0,
            noise_psd_dbm_hz: -174.0,
            ue_noise_figure_db: 9.0,
            beta_loss_db: 3.0,
            rho_max_bps_hz: 4.8,
            candidate_k: 8,
        }
    }
}

impl ChannelParams {
    /// Receiver noise floor in W/Hz (thermal PSD plus UE noise figure).
    pub fn noise_floor_w_hz(&self) -> f64 {
        from_dbm(self.noise_psd_dbm_hz + self.ue_noise_figure_db)
    }

    pub fn shadow_stddev_db(&self, class: BsClass) -> f64 {
        match class {
            BsClass::OperatorMicro => self.shadow_stddev_micro_db,
            BsClass::OperatorMacroSector => self.shadow_stddev_macro_db,
            BsClass::ThirdPartyFemto => self.shadow_stddev_femto_db,
        }
    }
}

/// dBm to W.
#[inline]
pub fn from_dbm(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[inline]
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Distance-law path loss in dB, including the femto indoor wall loss.
/// Distance is the (torus) separation in meters, clamped below at 1 m.
pub fn pathloss_db(
    tx: &BaseStation,
    rx: &MobileStation,
    scenario: &Scenario,
    params: &ChannelParams,
) -> f64 {
    let d = scenario.area.distance(tx.position, rx.position).max(1.0);
    params.pathloss_a_db + params.pathloss_b_db_per_decade * d.log10() + tx.indoor_wall_loss_db
}

/// Sectorized antenna gain `-min(12 (theta/theta_3dB)^2, A_m)` in dB for
/// a bearing relative to the sector boresight. Omni cells return 0.
pub fn antenna_gain_db(sector_azimuth_deg: f64, bearing_deg: f64, params: &ChannelParams) -> f64 {
    let theta = wrap_angle_deg(bearing_deg - sector_azimuth_deg);
    let ratio = theta / params.antenna_theta3db_deg;
    -(12.0 * ratio * ratio).min(params.antenna_am_db)
}

fn bs_antenna_gain_db(
    bs: &BaseStation,
    ms: &MobileStation,
    scenario: &Scenario,
    params: &ChannelParams,
) -> f64 {
    match bs.class {
        BsClass::OperatorMacroSector => {
            let bearing = scenario.area.bearing_deg(bs.position, ms.position);
            antenna_gain_db(bs.sector_azimuth_deg, bearing, params)
        }
        _ => 0.0,
    }
}

/// Per-(MS, BS) lognormal shadowing offsets in dB.
///
/// Each MS draws one common component plus one component per site (and,
/// when `intrasite_corr < 1`, one per sector), combined as
/// `sigma * (sqrt(rho) * common + sqrt(1 - rho) * site_part)`. All draws
/// are keyed by (seed, ms, site/bs id), so the value of a link never
/// depends on which other sites exist.
#[derive(Debug, Clone)]
pub struct ShadowField {
    values_db: Vec<f64>,
    n_bs: usize,
}

impl ShadowField {
    #[inline]
    pub fn db(&self, ms: usize, bs: usize) -> f64 {
        self.values_db[ms * self.n_bs + bs]
    }
}

const SHADOW_TAG_COMMON: u64 = 1;
const SHADOW_TAG_SITE: u64 = 2;
const SHADOW_TAG_SECTOR: u64 = 3;

pub fn draw_shadowing(scenario: &Scenario, params: &ChannelParams, seed: u64) -> ShadowField {
    let shadow_seed = rng::stream_seed(seed, "shadow");
    let n_bs = scenario.bs.len();
    let n_ms = scenario.ms.len();
    let rho_inter = params.intersite_corr.clamp(0.0, 1.0);
    let rho_intra = params.intrasite_corr.clamp(0.0, 1.0);
    let (wi, wi1) = (rho_inter.sqrt(), (1.0 - rho_inter).sqrt());
    let (wa, wa1) = (rho_intra.sqrt(), (1.0 - rho_intra).sqrt());

    let mut values_db = vec![0.0; n_ms * n_bs];
    for ms in 0..n_ms {
        let common = rng::keyed_normal(shadow_seed, SHADOW_TAG_COMMON, ms as u64, 0);
        for (j, bs) in scenario.bs.iter().enumerate() {
            let site =
                rng::keyed_normal(shadow_seed, SHADOW_TAG_SITE, ms as u64, bs.site_id as u64);
            let site_part = if wa1 == 0.0 {
                site
            } else {
                let sector = rng::keyed_normal(shadow_seed, SHADOW_TAG_SECTOR, ms as u64, j as u64);
                wa * site + wa1 * sector
            };
            let sigma = params.shadow_stddev_db(bs.class);
            values_db[ms * n_bs + j] = sigma * (wi * common + wi1 * site_part);
        }
    }
    ShadowField { values_db, n_bs }
}
