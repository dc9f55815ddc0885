//! Utility and cost: proportional-fair subscriber utility and linear
//! third-party backhaul pricing. Rates enter the log in Mbps; the floor
//! keeps aggregate metrics finite when a mobile ends up with nothing.

use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;

pub const MBPS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    ProportionalFair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicsModel {
    pub utility_kind: UtilityKind,
    /// Third-party price p, utility units per Mbps carried. May be
    /// `inf`, which excludes third-party cells from candidate sets.
    pub price_per_mbps: f64,
    /// Floor applied inside the log, bits/s.
    pub rate_floor_bps: f64,
}

impl Default for EconomicsModel {
    fn default() -> Self {
        EconomicsModel {
            utility_kind: UtilityKind::ProportionalFair,
            price_per_mbps: 0.0,
            rate_floor_bps: 1e3,
        }
    }
}

impl EconomicsModel {
    pub fn floor_mbps(&self) -> f64 {
        self.rate_floor_bps / MBPS
    }

    /// Sum of log rates (rates in Mbps, floored).
    pub fn utility(&self, per_ms_rate_bps: &[f64]) -> f64 {
        let floor = self.floor_mbps();
        per_ms_rate_bps
            .iter()
            .map(|r| (r / MBPS).max(floor).ln())
            .sum()
    }

    /// Operator payments: `p * rate` over third-party cells only. A
    /// zero-rate cell costs nothing even at infinite price.
    pub fn cost(&self, per_bs_rate_bps: &[f64], scenario: &Scenario) -> f64 {
        per_bs_rate_bps
            .iter()
            .zip(&scenario.bs)
            .filter(|(r, b)| b.class.is_femto() && **r > 0.0)
            .map(|(r, b)| b.price_per_mbps * r / MBPS)
            .sum()
    }

    pub fn net_utility(
        &self,
        per_ms_rate_bps: &[f64],
        per_bs_rate_bps: &[f64],
        scenario: &Scenario,
    ) -> f64 {
        self.utility(per_ms_rate_bps) - self.cost(per_bs_rate_bps, scenario)
    }

    /// Geometric mean rate in Mbps, `exp(utility / N)`.
    pub fn geometric_mean_rate_mbps(&self, per_ms_rate_bps: &[f64]) -> f64 {
        if per_ms_rate_bps.is_empty() {
            return 0.0;
        }
        (self.utility(per_ms_rate_bps) / per_ms_rate_bps.len() as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Area;
    use crate::scenario::{generate_stochastic, Environment, ScenarioConfig};

    fn model(price: f64) -> EconomicsModel {
        EconomicsModel {
            price_per_mbps: price,
            ..EconomicsModel::default()
        }
    }

    fn scenario(price: f64, adoption: f64) -> Scenario {
        let mut cfg = ScenarioConfig::new(Environment::Urban, Area::new(500.0, 500.0, true));
        cfg.n_operator_sites = 2;
        cfg.ap_count = 20;
        cfg.adoption_rate = adoption;
        cfg.ue_count_override = Some(4);
        cfg.radio.femto_price_per_mbps = price;
        generate_stochastic(&cfg, 1).unwrap()
    }

    #[test]
    fn log_utility_examples() {
        let m = model(0.0);
        assert_eq!(m.utility(&[1e6, 1e6, 1e6]), 0.0);
        let u = m.utility(&[2e6, 8e6]);
        assert!((u - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn utility_floors_zero_rates() {
        let m = model(0.0);
        let u = m.utility(&[0.0]);
        assert!((u - (1e3 / 1e6f64).ln()).abs() < 1e-12);
        assert!(u.is_finite());
    }

    #[test]
    fn geometric_mean_identity() {
        let m = model(0.0);
        let rates = [1.5e6, 9.1e6, 0.4e6, 22.0e6];
        let gm = m.geometric_mean_rate_mbps(&rates);
        let direct: f64 = rates.iter().map(|r| r / MBPS).product::<f64>().powf(0.25);
        assert!((gm - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn cost_is_linear_and_operator_free() {
        let s = scenario(2.0, 0.5);
        let m = model(2.0);
        let femto = s.bs.iter().position(|b| b.class.is_femto()).unwrap();
        let mut rates = vec![0.0; s.bs.len()];
        rates[femto] = 5e6;
        assert!((m.cost(&rates, &s) - 10.0).abs() < 1e-12);
        // Loading operator cells costs nothing.
        let ops_only = scenario(0.0, 0.0);
        let rates = vec![7e6; ops_only.bs.len()];
        assert_eq!(m.cost(&rates, &ops_only), 0.0);
        // Zero price means zero cost regardless of load.
        let s0 = scenario(0.0, 0.5);
        let rates = vec![9e6; s0.bs.len()];
        assert_eq!(model(0.0).cost(&rates, &s0), 0.0);
    }

    #[test]
    fn infinite_price_signals_exclusion_without_nan() {
        let s = scenario(f64::INFINITY, 0.5);
        let m = model(f64::INFINITY);
        let femto = s.bs.iter().position(|b| b.class.is_femto()).unwrap();
        let mut rates = vec![0.0; s.bs.len()];
        let net0 = m.net_utility(&[1e6], &rates, &s);
        assert!(net0.is_finite());
        rates[femto] = 1e6;
        let net1 = m.net_utility(&[1e6], &rates, &s);
        assert_eq!(net1, f64::NEG_INFINITY);
    }

    #[test]
    fn net_utility_is_utility_minus_cost() {
        let s = scenario(3.0, 0.5);
        let m = model(3.0);
        let femto = s.bs.iter().position(|b| b.class.is_femto()).unwrap();
        let mut bs_rates = vec![0.0; s.bs.len()];
        bs_rates[femto] = 2e6;
        let ms_rates = [4e6, 1e6];
        let expected = 4f64.ln() + 1f64.ln() - 6.0;
        assert!((m.net_utility(&ms_rates, &bs_rates, &s) - expected).abs() < 1e-12);
    }

    #[test]
    fn utility_monotone_and_concave_above_floor() {
        let m = model(0.0);
        let u1 = m.utility(&[2e6]);
        let u2 = m.utility(&[3e6]);
        let u3 = m.utility(&[4e6]);
        assert!(u2 > u1 && u3 > u2);
        assert!(u3 - u2 < u2 - u1, "diminishing returns");
    }
}
