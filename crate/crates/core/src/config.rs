//! File-based run configuration: `key = value` sections in TOML
//! syntax, with every field defaulted to the standard evaluation
//! parameters. Parsing rejects unknown keys; `validate` checks ranges
//! and referenced files; `echo` re-serializes the resolved config for
//! reproducibility metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assoc::SolverConfig;
use crate::channel::{ChannelParams, Coupling};
use crate::economics::{EconomicsModel, UtilityKind};
use crate::error::{Error, Result};
use crate::experiments::{DropContext, SweepSpec, SweepVariable};
use crate::geometry::Area;
use crate::scenario::sites::{ingest_sites, SiteKind};
use crate::scenario::{Environment, RadioParams, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub base_seed: u64,
    pub scenario: ScenarioSection,
    pub radio: RadioParams,
    pub channel: ChannelParams,
    pub economics: EconomicsSection,
    pub solver: SolverConfig,
    pub sweep: SweepSection,
    pub compare: CompareSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub environment: Environment,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub wrap_around: bool,
    /// Micro count (urban) or macro site count (suburban); per-
    /// environment default when omitted.
    pub n_operator_sites: Option<usize>,
    /// WiFi AP population; per-environment default when omitted.
    pub ap_count: Option<usize>,
    pub adoption_rate: f64,
    pub ue_per_operator_cell: usize,
    pub coupling: Coupling,
    /// Site CSV with real operator cell positions (kind `cell`).
    pub operator_site_file: Option<PathBuf>,
    /// Site CSV with real WiFi AP positions (kind `ap`).
    pub ap_site_file: Option<PathBuf>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            environment: Environment::Urban,
            area_width_m: 1000.0,
            area_height_m: 1000.0,
            wrap_around: true,
            n_operator_sites: None,
            ap_count: None,
            adoption_rate: 0.05,
            ue_per_operator_cell: 25,
            coupling: Coupling::CoChannel,
            operator_site_file: None,
            ap_site_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconomicsSection {
    pub utility: UtilityKind,
    /// Third-party price per Mbps; `inf` selects operator-only service.
    pub price_per_mbps: f64,
    pub rate_floor_kbps: f64,
}

impl Default for EconomicsSection {
    fn default() -> Self {
        EconomicsSection {
            utility: UtilityKind::ProportionalFair,
            price_per_mbps: 0.0,
            rate_floor_kbps: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub drops_per_point: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            variable: SweepVariable::AdoptionRate,
            values: vec![0.0, 0.02, 0.05, 0.10, 0.15, 0.20],
            drops_per_point: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub split_factors: Vec<f64>,
    /// Descending price grid; usually ends at 0 and starts at `inf`.
    pub prices: Vec<f64>,
    pub adoption_rate: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            split_factors: vec![1.0, 1.5, 2.0, 3.0],
            prices: vec![f64::INFINITY, 8.0, 4.0, 1.0, 0.0],
            adoption_rate: 0.05,
        }
    }
}

/// Parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: e.to_string().replace('\n', " "),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn from_str_validated(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<inline>".into(),
            line: 0,
            msg: e.to_string().replace('\n', " "),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        let range_err = |name: &str, v: f64, lo: f64, hi: f64| {
            Err(Error::config(format!(
                "{name} = {v} out of range [{lo}, {hi}]"
            )))
        };
        if s.area_width_m <= 0.0 || s.area_height_m <= 0.0 {
            return Err(Error::config("area dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&s.adoption_rate) {
            return range_err("adoption_rate", s.adoption_rate, 0.0, 1.0);
        }
        if s.ue_per_operator_cell == 0 {
            return Err(Error::config("ue_per_operator_cell must be >= 1"));
        }
        let c = &self.channel;
        if !(0.0..=1.0).contains(&c.intersite_corr) {
            return range_err("intersite_corr", c.intersite_corr, 0.0, 1.0);
        }
        if !(0.0..=1.0).contains(&c.intrasite_corr) {
            return range_err("intrasite_corr", c.intrasite_corr, 0.0, 1.0);
        }
        if c.rho_max_bps_hz <= 0.0 {
            return Err(Error::config("rho_max_bps_hz must be positive"));
        }
        if c.shadow_stddev_micro_db < 0.0
            || c.shadow_stddev_macro_db < 0.0
            || c.shadow_stddev_femto_db < 0.0
        {
            return Err(Error::config("shadowing std. dev. must be >= 0"));
        }
        if c.candidate_k == 0 {
            return Err(Error::config("candidate_k must be >= 1"));
        }
        let r = &self.radio;
        if r.bandwidth_mhz <= 0.0 {
            return Err(Error::config("bandwidth_mhz must be positive"));
        }
        if r.femto_backhaul_caps_mbps.is_empty()
            || r.femto_backhaul_caps_mbps.iter().any(|x| *x <= 0.0)
        {
            return Err(Error::config(
                "femto_backhaul_caps_mbps must be non-empty and positive",
            ));
        }
        let e = &self.economics;
        if e.price_per_mbps < 0.0 {
            return Err(Error::config("price_per_mbps must be >= 0"));
        }
        if e.rate_floor_kbps <= 0.0 {
            return Err(Error::config("rate_floor_kbps must be positive"));
        }
        self.solver.validate()?;
        if self.sweep.values.is_empty() {
            return Err(Error::config("sweep.values must be non-empty"));
        }
        if self.sweep.drops_per_point == 0 {
            return Err(Error::config("sweep.drops_per_point must be >= 1"));
        }
        if self.sweep.variable == SweepVariable::AdoptionRate
            && self.sweep.values.iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::config("adoption sweep values out of range [0, 1]"));
        }
        if self.compare.split_factors.iter().any(|a| *a < 1.0) {
            return Err(Error::config("compare.split_factors must be >= 1"));
        }
        if self.compare.prices.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::config("compare.prices must be descending"));
        }
        if !(0.0..=1.0).contains(&self.compare.adoption_rate) {
            return range_err(
                "compare.adoption_rate",
                self.compare.adoption_rate,
                0.0,
                1.0,
            );
        }
        for file in [&s.operator_site_file, &s.ap_site_file]
            .into_iter()
            .flatten()
        {
            if !file.exists() {
                return Err(Error::config(format!(
                    "referenced site file does not exist: {}",
                    file.display()
                )));
            }
        }
        Ok(())
    }

    /// Serializes the fully-resolved config (round-trips to an equal
    /// config through `parse_config`).
    pub fn echo(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn area(&self) -> Area {
        Area::new(
            self.scenario.area_width_m,
            self.scenario.area_height_m,
            self.scenario.wrap_around,
        )
    }

    fn economics_model(&self) -> EconomicsModel {
        EconomicsModel {
            utility_kind: self.economics.utility,
            price_per_mbps: self.economics.price_per_mbps,
            rate_floor_bps: self.economics.rate_floor_kbps * 1e3,
        }
    }

    /// Builds the drop context, ingesting site files when configured.
    pub fn to_drop_context(&self, collect_trace: bool) -> Result<DropContext> {
        let area = self.area();
        let s = &self.scenario;
        let mut sc = ScenarioConfig::new(s.environment, area);
        if let Some(n) = s.n_operator_sites {
            sc.n_operator_sites = n;
        }
        if let Some(n) = s.ap_count {
            sc.ap_count = n;
        }
        sc.adoption_rate = s.adoption_rate;
        sc.ue_per_operator_cell = s.ue_per_operator_cell;
        sc.radio = self.radio.clone();
        sc.radio.femto_price_per_mbps = self.economics.price_per_mbps;
        if let Some(path) = &s.operator_site_file {
            let report = ingest_sites(path, SiteKind::OperatorCell, &area)?;
            sc.operator_sites = Some(report.to_area_frame(&area));
        }
        if let Some(path) = &s.ap_site_file {
            let report = ingest_sites(path, SiteKind::WifiAp, &area)?;
            sc.ap_sites = Some(report.to_area_frame(&area));
        }
        Ok(DropContext {
            scenario: sc,
            channel: self.channel.clone(),
            coupling: s.coupling,
            economics: self.economics_model(),
            solver: self.solver.clone(),
            collect_trace,
        })
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            variable: self.sweep.variable,
            values: self.sweep.values.clone(),
            drops_per_point: self.sweep.drops_per_point,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_standard_defaults() {
        let cfg = RunConfig::from_str_validated("[scenario]\nenvironment = \"urban\"\n").unwrap();
        assert_eq!(cfg.scenario.area_width_m, 1000.0);
        assert_eq!(cfg.radio.tx_power_micro_dbm, 30.0);
        assert_eq!(cfg.radio.tx_power_macro_dbm, 46.0);
        assert_eq!(cfg.radio.tx_power_femto_dbm, 20.0);
        assert_eq!(cfg.radio.bandwidth_mhz, 10.0);
        assert_eq!(cfg.radio.femto_wall_loss_db, 20.0);
        assert_eq!(
            cfg.radio.femto_backhaul_caps_mbps,
            vec![10.0, 20.0, 30.0, 40.0, 50.0]
        );
        assert_eq!(cfg.channel.carrier_freq_ghz, 2.1);
        assert_eq!(cfg.channel.pathloss_a_db, 15.3);
        assert_eq!(cfg.channel.pathloss_b_db_per_decade, 37.6);
        assert_eq!(cfg.channel.shadow_stddev_micro_db, 10.0);
        assert_eq!(cfg.channel.intersite_corr, 0.5);
        assert_eq!(cfg.channel.beta_loss_db, 3.0);
        assert_eq!(cfg.channel.rho_max_bps_hz, 4.8);
        assert_eq!(cfg.scenario.ue_per_operator_cell, 25);
        let ctx = cfg.to_drop_context(false).unwrap();
        assert_eq!(ctx.scenario.n_operator_sites, 17);
        assert_eq!(ctx.scenario.ap_count, 36_100);
    }

    #[test]
    fn suburban_defaults_differ() {
        let cfg =
            RunConfig::from_str_validated("[scenario]\nenvironment = \"suburban\"\n").unwrap();
        let ctx = cfg.to_drop_context(false).unwrap();
        assert_eq!(ctx.scenario.n_operator_sites, 3);
        assert_eq!(ctx.scenario.ap_count, 3_300);
        assert_eq!(ctx.operator_cells(), 9);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_str_validated("[scenario]\nbogus_key = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus_key"), "{msg}");
    }

    #[test]
    fn out_of_range_values_name_bounds() {
        let err = RunConfig::from_str_validated("[scenario]\nadoption_rate = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("adoption_rate") && msg.contains("[0, 1]"),
            "{msg}"
        );
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::from_str_validated(
            "base_seed = 9\n[scenario]\nenvironment = \"suburban\"\nadoption_rate = 0.1\n\
             [economics]\nprice_per_mbps = inf\n[sweep]\nvariable = \"price\"\nvalues = [inf, 4.0, 0.0]\n",
        )
        .unwrap();
        let echoed = cfg.echo();
        let cfg2 = RunConfig::from_str_validated(&echoed).unwrap();
        assert_eq!(cfg, cfg2);
        assert!(cfg2.economics.price_per_mbps.is_infinite());
        assert!(cfg2.sweep.values[0].is_infinite());
    }

    #[test]
    fn missing_site_file_is_a_config_error() {
        let err = RunConfig::from_str_validated(
            "[scenario]\noperator_site_file = \"/nonexistent/sites.csv\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("does not exist"));
    }

    #[test]
    fn descending_price_grid_is_enforced() {
        let err = RunConfig::from_str_validated("[compare]\nprices = [1.0, 4.0]\n").unwrap_err();
        assert!(err.to_string().contains("descending"));
    }
}
