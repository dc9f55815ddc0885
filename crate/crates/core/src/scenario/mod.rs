//! Scenario generation: stochastic two-tier layouts (urban micro /
//! suburban sectorized macro, plus third-party femtocells co-located at
//! a sampled fraction of WiFi AP positions) and site-file ingestion.
//!
//! A `Scenario` is one immutable drop: base stations, mobiles and area
//! geometry. Everything is reproducible from `(config, seed)`; each
//! entity class draws from its own keyed RNG stream so that, e.g.,
//! adding femtocells never changes where the mobiles land.

pub mod sites;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hex_grid, hex_isd, Area};
use crate::rng;

pub const SECTOR_AZIMUTHS_DEG: [f64; 3] = [0.0, 120.0, 240.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Urban,
    Suburban,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BsClass {
    OperatorMacroSector,
    OperatorMicro,
    ThirdPartyFemto,
}

impl BsClass {
    pub fn is_operator(self) -> bool {
        !self.is_femto()
    }

    pub fn is_femto(self) -> bool {
        matches!(self, BsClass::ThirdPartyFemto)
    }

    fn label(self) -> &'static str {
        match self {
            BsClass::OperatorMacroSector => "macro_sector",
            BsClass::OperatorMicro => "micro",
            BsClass::ThirdPartyFemto => "femto",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub id: usize,
    pub class: BsClass,
    pub position: (f64, f64),
    /// Sectors of one macro site share a site id (and its shadowing).
    pub site_id: usize,
    /// Boresight direction; meaningful for macro sectors only.
    pub sector_azimuth_deg: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    /// `f64::INFINITY` for operator cells.
    pub backhaul_cap_bps: f64,
    /// Utility units per Mbps carried; 0 for operator cells.
    pub price_per_mbps: f64,
    pub indoor_wall_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileStation {
    pub id: usize,
    pub position: (f64, f64),
}

/// Per-class radio parameters used when instantiating base stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub tx_power_micro_dbm: f64,
    pub tx_power_macro_dbm: f64,
    pub tx_power_femto_dbm: f64,
    pub bandwidth_mhz: f64,
    pub femto_wall_loss_db: f64,
    /// Backhaul caps assigned uniformly at random over femtocells.
    pub femto_backhaul_caps_mbps: Vec<f64>,
    pub femto_price_per_mbps: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_micro_dbm: 30.0,
            tx_power_macro_dbm: 46.0,
            tx_power_femto_dbm: 20.0,
            bandwidth_mhz: 10.0,
            femto_wall_loss_db: 20.0,
            femto_backhaul_caps_mbps: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            femto_price_per_mbps: 0.0,
        }
    }
}

/// Everything `generate_stochastic` needs to lay out one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub environment: Environment,
    pub area: Area,
    /// Micro count (urban) or macro site count (suburban).
    pub n_operator_sites: usize,
    /// WiFi AP population from which femto hosts are sampled.
    pub ap_count: usize,
    /// Fraction of APs hosting a femtocell, in [0, 1].
    pub adoption_rate: f64,
    pub ue_per_operator_cell: usize,
    /// Fixes the UE count independent of the operator cell count
    /// (used by the cell-splitting comparison).
    pub ue_count_override: Option<usize>,
    pub radio: RadioParams,
    /// Pre-ingested operator site positions (area frame); overrides the
    /// stochastic layout when present.
    pub operator_sites: Option<Vec<(f64, f64)>>,
    /// Pre-ingested AP positions (area frame).
    pub ap_sites: Option<Vec<(f64, f64)>>,
}

impl ScenarioConfig {
    pub fn new(environment: Environment, area: Area) -> Self {
        ScenarioConfig {
            environment,
            area,
            n_operator_sites: match environment {
                Environment::Urban => 17,
                Environment::Suburban => 3,
            },
            ap_count: match environment {
                Environment::Urban => 36_100,
                Environment::Suburban => 3_300,
            },
            adoption_rate: 0.05,
            ue_per_operator_cell: 25,
            ue_count_override: None,
            radio: RadioParams::default(),
            operator_sites: None,
            ap_sites: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.area.width_m <= 0.0 || self.area.height_m <= 0.0 {
            return Err(Error::config("area dimensions must be positive"));
        }
        if self.n_operator_sites == 0 && self.operator_sites.as_ref().is_none_or(Vec::is_empty) {
            return Err(Error::config("at least one operator site is required"));
        }
        if !(0.0..=1.0).contains(&self.adoption_rate) {
            return Err(Error::config(format!(
                "adoption_rate = {} out of range [0, 1]",
                self.adoption_rate
            )));
        }
        if self.environment == Environment::Suburban && self.operator_sites.is_none() {
            let sites = self.n_operator_sites;
            let per_site = self.area.width_m * self.area.height_m / sites as f64;
            if per_site < 1.0 {
                return Err(Error::config(format!(
                    "area too small for requested hex grid of {sites} sites"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub area: Area,
    pub environment: Environment,
    pub seed: u64,
    pub bs: Vec<BaseStation>,
    pub ms: Vec<MobileStation>,
    /// Derived inter-site distance for suburban hex layouts (metadata).
    pub hex_isd_m: Option<f64>,
}

impl Scenario {
    pub fn operator_cell_count(&self) -> usize {
        self.bs.iter().filter(|b| b.class.is_operator()).count()
    }

    pub fn femto_count(&self) -> usize {
        self.bs.iter().filter(|b| b.class.is_femto()).count()
    }

    /// Stable structured dump used for golden/determinism tests.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "obsim scenario v1").unwrap();
        writeln!(
            s,
            "environment = {}",
            match self.environment {
                Environment::Urban => "urban",
                Environment::Suburban => "suburban",
            }
        )
        .unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(
            s,
            "area = {} x {} wrap={}",
            self.area.width_m, self.area.height_m, self.area.wrap_around
        )
        .unwrap();
        match self.hex_isd_m {
            Some(isd) => writeln!(s, "hex_isd_m = {isd}").unwrap(),
            None => writeln!(s, "hex_isd_m = none").unwrap(),
        }
        writeln!(s, "n_bs = {}", self.bs.len()).unwrap();
        writeln!(s, "n_ms = {}", self.ms.len()).unwrap();
        for b in &self.bs {
            writeln!(
                s,
                "bs id={} class={} site={} x={} y={} az={} p_dbm={} bw_hz={} cap_bps={} price={} wall_db={}",
                b.id,
                b.class.label(),
                b.site_id,
                b.position.0,
                b.position.1,
                b.sector_azimuth_deg,
                b.tx_power_dbm,
                b.bandwidth_hz,
                b.backhaul_cap_bps,
                b.price_per_mbps,
                b.indoor_wall_loss_db
            )
            .unwrap();
        }
        for m in &self.ms {
            writeln!(s, "ms id={} x={} y={}", m.id, m.position.0, m.position.1).unwrap();
        }
        s
    }
}

/// Banker's rounding of `x` to an integer count.
pub fn round_half_even(x: f64) -> usize {
    x.round_ties_even().max(0.0) as usize
}

/// Draws one stochastic drop. Operator cells, femtocells and mobiles
/// each use an independent keyed stream of the drop seed.
pub fn generate_stochastic(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let area = config.area;
    let radio = &config.radio;
    let bw_hz = radio.bandwidth_mhz * 1e6;

    let mut bs: Vec<BaseStation> = Vec::new();
    let mut hex_isd_m = None;

    // Operator tier.
    match config.environment {
        Environment::Urban => {
            let positions: Vec<(f64, f64)> = match &config.operator_sites {
                Some(p) => p.clone(),
                None => {
                    let mut rng = rng::stream(seed, "operator");
                    (0..config.n_operator_sites)
                        .map(|_| uniform_point(&mut rng, &area))
                        .collect()
                }
            };
            for (site, pos) in positions.into_iter().enumerate() {
                bs.push(BaseStation {
                    id: bs.len(),
                    class: BsClass::OperatorMicro,
                    position: pos,
                    site_id: site,
                    sector_azimuth_deg: 0.0,
                    tx_power_dbm: radio.tx_power_micro_dbm,
                    bandwidth_hz: bw_hz,
                    backhaul_cap_bps: f64::INFINITY,
                    price_per_mbps: 0.0,
                    indoor_wall_loss_db: 0.0,
                });
            }
        }
        Environment::Suburban => {
            let positions: Vec<(f64, f64)> = match &config.operator_sites {
                Some(p) => p.clone(),
                None => {
                    hex_isd_m = Some(hex_isd(&area, config.n_operator_sites));
                    hex_grid(&area, config.n_operator_sites)
                }
            };
            for (site, pos) in positions.into_iter().enumerate() {
                for az in SECTOR_AZIMUTHS_DEG {
                    bs.push(BaseStation {
                        id: bs.len(),
                        class: BsClass::OperatorMacroSector,
                        position: pos,
                        site_id: site,
                        sector_azimuth_deg: az,
                        tx_power_dbm: radio.tx_power_macro_dbm,
                        bandwidth_hz: bw_hz,
                        backhaul_cap_bps: f64::INFINITY,
                        price_per_mbps: 0.0,
                        indoor_wall_loss_db: 0.0,
                    });
                }
            }
        }
    }
    let n_operator_sites = bs.last().map_or(0, |b| b.site_id + 1);
    let n_operator_cells = bs.len();

    // Third-party tier: sample adoption over the AP population.
    let aps: Vec<(f64, f64)> = match &config.ap_sites {
        Some(p) => p.clone(),
        None => {
            let mut rng = rng::stream(seed, "ap");
            (0..config.ap_count)
                .map(|_| uniform_point(&mut rng, &area))
                .collect()
        }
    };
    let femto_positions = sample_adoption(
        &aps,
        config.adoption_rate,
        rng::stream_seed(seed, "adoption"),
    )?;
    {
        let mut cap_rng = rng::stream(seed, "backhaul");
        let caps = &radio.femto_backhaul_caps_mbps;
        if caps.is_empty() || caps.iter().any(|&c| c <= 0.0) {
            return Err(Error::config(
                "femto_backhaul_caps_mbps must be non-empty and positive",
            ));
        }
        for (k, pos) in femto_positions.into_iter().enumerate() {
            let cap = caps[cap_rng.random_range(0..caps.len())];
            bs.push(BaseStation {
                id: bs.len(),
                class: BsClass::ThirdPartyFemto,
                position: pos,
                site_id: n_operator_sites + k,
                sector_azimuth_deg: 0.0,
                tx_power_dbm: radio.tx_power_femto_dbm,
                bandwidth_hz: bw_hz,
                backhaul_cap_bps: cap * 1e6,
                price_per_mbps: radio.femto_price_per_mbps,
                indoor_wall_loss_db: radio.femto_wall_loss_db,
            });
        }
    }

    // Mobiles: 25 per operator cell unless pinned by the caller.
    let n_ue = config
        .ue_count_override
        .unwrap_or(config.ue_per_operator_cell * n_operator_cells);
    let mut ue_rng = rng::stream(seed, "ue");
    let ms = (0..n_ue)
        .map(|id| MobileStation {
            id,
            position: uniform_point(&mut ue_rng, &area),
        })
        .collect();

    Ok(Scenario {
        area,
        environment: config.environment,
        seed,
        bs,
        ms,
        hex_isd_m,
    })
}

/// Uniform sample without replacement of `round(rate * |aps|)` positions.
/// The result preserves the input order.
pub fn sample_adoption(aps: &[(f64, f64)], rate: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::config(format!(
            "adoption rate {rate} out of range [0, 1]"
        )));
    }
    let k = round_half_even(rate * aps.len() as f64).min(aps.len());
    let mut idx: Vec<usize> = (0..aps.len()).collect();
    let mut rng = rng::stream(seed, "sample-adoption");
    for i in 0..k {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| aps[i]).collect())
}

fn uniform_point(rng: &mut impl Rng, area: &Area) -> (f64, f64) {
    (
        rng.random_range(0.0..area.width_m),
        rng.random_range(0.0..area.height_m),
    )
}
