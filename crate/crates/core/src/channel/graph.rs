//! Candidate-link graph: per-mobile candidate cells, per-link gains, the
//! loading-scaled interference operator, and the capped-Shannon spectral
//! efficiency map.
//!
//! Base stations radiate a fixed power per unit bandwidth, so the
//! interference PSD a mobile sees from cell `k` is its full-load
//! received PSD scaled by the fraction of `k`'s bandwidth in use. That
//! makes interference linear in the bandwidth vector: `z = G w`, where
//! the row for link (i, j) has entry `rx_psd(i, k) / W_k` in every
//! column of a link served by `k != j` (same-tier only under split
//! spectrum) and zero in columns of the serving cell `j`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

use super::{bs_antenna_gain_db, draw_shadowing, pathloss_db, ChannelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Both tiers share the band and interfere with each other.
    CoChannel,
    /// Operator and third-party tiers use disjoint spectrum.
    SplitSpectrum,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphOptions {
    pub coupling: Coupling,
    /// Excludes third-party cells from candidate sets (the infinite-price
    /// sentinel). Their interference vanishes with their load.
    pub operator_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub ms: usize,
    pub bs: usize,
}

#[derive(Debug, Clone)]
pub struct LinkGraph {
    pub links: Vec<Link>,
    /// Per MS: indices into `links`, ascending by BS id.
    pub gamma_ms: Vec<Vec<usize>>,
    /// Per BS: indices into `links`.
    pub gamma_bs: Vec<Vec<usize>>,
    /// Full-load received signal PSD per link, W/Hz.
    pub link_gain: Vec<f64>,
    pub noise_floor_w_hz: f64,
    pub coupling: Coupling,
    pub bs_bandwidth_hz: Vec<f64>,
    pub bs_is_femto: Vec<bool>,
    pub rho_max: f64,
    beta_lin: f64,
    /// Dense full-load received PSD, MS-major (n_ms x n_bs), W/Hz.
    rx_psd: Vec<f64>,
    n_bs: usize,
}

impl LinkGraph {
    pub fn n_ms(&self) -> usize {
        self.gamma_ms.len()
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    /// Full-load received PSD from BS `bs` at MS `ms`, W/Hz.
    #[inline]
    pub fn rx_psd(&self, ms: usize, bs: usize) -> f64 {
        self.rx_psd[ms * self.n_bs + bs]
    }

    #[inline]
    fn interferes(&self, source_bs: usize, serving_bs: usize) -> bool {
        source_bs != serving_bs
            && match self.coupling {
                Coupling::CoChannel => true,
                Coupling::SplitSpectrum => {
                    self.bs_is_femto[source_bs] == self.bs_is_femto[serving_bs]
                }
            }
    }

    /// Entry of the interference matrix G in the row of `link` and any
    /// column belonging to a link served by `source_bs` (W/Hz per Hz).
    pub fn interference_coeff(&self, link: usize, source_bs: usize) -> f64 {
        let Link { ms, bs } = self.links[link];
        if self.interferes(source_bs, bs) {
            self.rx_psd(ms, source_bs) / self.bs_bandwidth_hz[source_bs]
        } else {
            0.0
        }
    }

    /// Aggregates a per-link bandwidth vector (Hz) into per-BS load (Hz).
    pub fn bs_loads_hz(&self, w_per_link_hz: &[f64]) -> Vec<f64> {
        let mut loads = vec![0.0; self.n_bs];
        for (l, link) in self.links.iter().enumerate() {
            loads[link.bs] += w_per_link_hz[l];
        }
        loads
    }

    /// Interference PSD `z = G w` per link, W/Hz.
    ///
    /// Uses compensated per-MS totals with the serving cell subtracted
    /// out; rows whose serving-cell term dominates are re-summed
    /// directly so the result matches naive summation to ~1e-12.
    pub fn interference_psd_w_hz(&self, w_per_link_hz: &[f64]) -> Vec<f64> {
        let loads = self.bs_loads_hz(w_per_link_hz);
        self.interference_from_loads(&loads)
    }

    pub fn interference_from_loads(&self, loads_hz: &[f64]) -> Vec<f64> {
        let n_ms = self.n_ms();
        // Per-MS totals over each tier (femto / operator).
        let mut tier_tot = vec![[0.0f64; 2]; n_ms];
        for (i, tot) in tier_tot.iter_mut().enumerate() {
            let row = &self.rx_psd[i * self.n_bs..(i + 1) * self.n_bs];
            let mut acc = [KahanSum::default(), KahanSum::default()];
            for k in 0..self.n_bs {
                if loads_hz[k] > 0.0 {
                    let tier = usize::from(self.bs_is_femto[k]);
                    acc[tier].add(row[k] * loads_hz[k] / self.bs_bandwidth_hz[k]);
                }
            }
            *tot = [acc[0].value(), acc[1].value()];
        }

        let mut z = vec![0.0; self.links.len()];
        for (l, link) in self.links.iter().enumerate() {
            let total = match self.coupling {
                Coupling::CoChannel => tier_tot[link.ms][0] + tier_tot[link.ms][1],
                Coupling::SplitSpectrum => {
                    tier_tot[link.ms][usize::from(self.bs_is_femto[link.bs])]
                }
            };
            let own =
                self.rx_psd(link.ms, link.bs) * loads_hz[link.bs] / self.bs_bandwidth_hz[link.bs];
            z[l] = if own > 0.9 * total {
                self.direct_interference(link, loads_hz)
            } else {
                (total - own).max(0.0)
            };
        }
        z
    }

    fn direct_interference(&self, link: &Link, loads_hz: &[f64]) -> f64 {
        let row = &self.rx_psd[link.ms * self.n_bs..(link.ms + 1) * self.n_bs];
        let mut acc = KahanSum::default();
        for k in 0..self.n_bs {
            if loads_hz[k] > 0.0 && self.interferes(k, link.bs) {
                acc.add(row[k] * loads_hz[k] / self.bs_bandwidth_hz[k]);
            }
        }
        acc.value()
    }

    /// Linear Shannon-gap factor `10^(-beta/10)`.
    pub fn beta_lin(&self) -> f64 {
        self.beta_lin
    }

    /// Spectral efficiency of `link` at interference PSD `z` (W/Hz):
    /// `min(log2(1 + 10^(-beta/10) * SINR), rho_max)`.
    pub fn spectral_efficiency(&self, link: usize, z_w_hz: f64) -> f64 {
        let sinr = self.link_gain[link] / (self.noise_floor_w_hz + z_w_hz);
        (1.0 + self.beta_lin * sinr).log2().min(self.rho_max)
    }

    /// Debug dump of link gains and interference coefficients.
    pub fn dump_gains_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "link,ms,bs,rx_psd_w_hz")?;
        for (l, link) in self.links.iter().enumerate() {
            writeln!(out, "{l},{},{},{:e}", link.ms, link.bs, self.link_gain[l])?;
        }
        writeln!(out, "link,source_bs,g_coeff")?;
        for l in 0..self.links.len() {
            for k in 0..self.n_bs {
                let c = self.interference_coeff(l, k);
                if c != 0.0 {
                    writeln!(out, "{l},{k},{c:e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    fn value(self) -> f64 {
        self.sum
    }
}

pub fn build_link_graph(
    scenario: &Scenario,
    params: &ChannelParams,
    coupling: Coupling,
    seed: u64,
) -> Result<LinkGraph> {
    build_link_graph_with(
        scenario,
        params,
        GraphOptions {
            coupling,
            operator_only: false,
        },
        seed,
    )
}

pub fn build_link_graph_with(
    scenario: &Scenario,
    params: &ChannelParams,
    opts: GraphOptions,
    seed: u64,
) -> Result<LinkGraph> {
    let n_bs = scenario.bs.len();
    let n_ms = scenario.ms.len();
    if n_bs == 0 {
        return Err(Error::model("scenario has no base stations"));
    }

    let shadow = draw_shadowing(scenario, params, seed);
    let mut rx_psd = vec![0.0; n_ms * n_bs];
    for (i, ms) in scenario.ms.iter().enumerate() {
        for (j, bs) in scenario.bs.iter().enumerate() {
            // Excluded third-party cells never carry load, so they
            // radiate nothing under the load-proportional model; their
            // columns stay zero and the problem matches a femto-free
            // network exactly.
            if opts.operator_only && bs.class.is_femto() {
                continue;
            }
            let pl = pathloss_db(bs, ms, scenario, params);
            let ant = bs_antenna_gain_db(bs, ms, scenario, params);
            let rx_dbm = bs.tx_power_dbm - pl - shadow.db(i, j) + ant;
            rx_psd[i * n_bs + j] = super::from_dbm(rx_dbm) / bs.bandwidth_hz;
        }
    }

    // Candidate cells per MS: the strongest K overall plus the
    // strongest K operator cells. Keeping the full operator short list
    // means a graph with third-party cells always contains the
    // operator-only graph, so pricing femtocells out can never leave a
    // mobile worse off than having had no femtocells at all.
    let k_cand = params.candidate_k.max(1);
    let mut gamma_ms_bs: Vec<Vec<usize>> = Vec::with_capacity(n_ms);
    for i in 0..n_ms {
        let row = &rx_psd[i * n_bs..(i + 1) * n_bs];
        let mut order: Vec<usize> = (0..n_bs)
            .filter(|&j| !opts.operator_only || !scenario.bs[j].class.is_femto())
            .collect();
        if order.is_empty() {
            return Err(Error::model(format!("MS {i} has no candidate cells")));
        }
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        let mut chosen: Vec<usize> = order.iter().copied().take(k_cand).collect();
        chosen.extend(
            order
                .iter()
                .copied()
                .filter(|&j| scenario.bs[j].class.is_operator())
                .take(k_cand),
        );
        chosen.sort_unstable();
        chosen.dedup();
        if !chosen.iter().any(|&j| scenario.bs[j].class.is_operator()) {
            return Err(Error::model(format!(
                "MS {i} has no operator cell in range"
            )));
        }
        gamma_ms_bs.push(chosen);
    }

    let mut links = Vec::new();
    let mut gamma_ms = vec![Vec::new(); n_ms];
    let mut gamma_bs = vec![Vec::new(); n_bs];
    let mut link_gain = Vec::new();
    for (i, cand) in gamma_ms_bs.iter().enumerate() {
        for &j in cand {
            let l = links.len();
            links.push(Link { ms: i, bs: j });
            gamma_ms[i].push(l);
            gamma_bs[j].push(l);
            link_gain.push(rx_psd[i * n_bs + j]);
        }
    }

    Ok(LinkGraph {
        links,
        gamma_ms,
        gamma_bs,
        link_gain,
        noise_floor_w_hz: params.noise_floor_w_hz(),
        coupling: opts.coupling,
        bs_bandwidth_hz: scenario.bs.iter().map(|b| b.bandwidth_hz).collect(),
        bs_is_femto: scenario.bs.iter().map(|b| b.class.is_femto()).collect(),
        rho_max: params.rho_max_bps_hz,
        beta_lin: super::from_db(-params.beta_loss_db),
        rx_psd,
        n_bs,
    })
}
