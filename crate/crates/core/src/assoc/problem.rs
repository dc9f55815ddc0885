//! Program assembly: the variable layout, the structured constraint
//! matrix `A theta <= b`, and the per-link spectral-efficiency curves.
//!
//! Internal units are chosen to condition the duals: rates in Mbps,
//! bandwidth in MHz, interference normalized to the noise floor. Every
//! row of `A` is scaled to unit max-norm.

use crate::channel::{Coupling, Link, LinkGraph};
use crate::economics::EconomicsModel;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Floor of the logarithmic interference search grid, in noise units.
pub const Z_GRID_FLOOR: f64 = 1e-3;

/// Index map for `theta = (r, rBS, rMS, w, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaLayout {
    pub n_links: usize,
    pub n_bs: usize,
    pub n_ms: usize,
}

impl ThetaLayout {
    pub fn len(&self) -> usize {
        3 * self.n_links + self.n_bs + self.n_ms
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn r(&self, link: usize) -> usize {
        link
    }

    #[inline]
    pub fn rbs(&self, bs: usize) -> usize {
        self.n_links + bs
    }

    #[inline]
    pub fn rms(&self, ms: usize) -> usize {
        self.n_links + self.n_bs + ms
    }

    #[inline]
    pub fn w(&self, link: usize) -> usize {
        self.n_links + self.n_bs + self.n_ms + link
    }

    #[inline]
    pub fn z(&self, link: usize) -> usize {
        2 * self.n_links + self.n_bs + self.n_ms + link
    }
}

/// Identity of one constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowId {
    /// `rMS_i - sum_j r_ij <= 0`
    MsRate(usize),
    /// `sum_i r_ij - rBS_j <= 0`
    BsRate(usize),
    /// `(G w)_l - z_l <= 0`
    Interference(usize),
    /// `sum_i w_ij <= W_j`
    Bandwidth(usize),
}

/// `A theta <= b` in structured form. Row order: per-MS rate coupling,
/// per-BS rate coupling, per-link interference, per-BS bandwidth. The
/// interference block is represented through the dense normalized gain
/// table rather than materialized entries.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub layout: ThetaLayout,
    links: Vec<Link>,
    gamma_ms: Vec<Vec<usize>>,
    gamma_bs: Vec<Vec<usize>>,
    /// Normalized interference gain, MS-major (n_ms x n_bs): added
    /// interference (noise units) per MHz of load on a cell.
    gbar: Vec<f64>,
    bw_mhz: Vec<f64>,
    is_femto: Vec<bool>,
    coupling: Coupling,
    /// Scaled right-hand side.
    pub b: Vec<f64>,
    /// Divisor applied to each row (unit max-norm scaling).
    row_scale: Vec<f64>,
}

impl ConstraintMatrix {
    pub fn n_rows(&self) -> usize {
        self.layout.n_ms + self.layout.n_bs + self.layout.n_links + self.layout.n_bs
    }

    pub fn row_id(&self, row: usize) -> RowId {
        let ThetaLayout {
            n_links,
            n_bs,
            n_ms,
        } = self.layout;
        if row < n_ms {
            RowId::MsRate(row)
        } else if row < n_ms + n_bs {
            RowId::BsRate(row - n_ms)
        } else if row < n_ms + n_bs + n_links {
            RowId::Interference(row - n_ms - n_bs)
        } else {
            RowId::Bandwidth(row - n_ms - n_bs - n_links)
        }
    }

    pub fn row_scale(&self, row: usize) -> f64 {
        self.row_scale[row]
    }

    #[inline]
    pub fn gbar(&self, ms: usize, bs: usize) -> f64 {
        self.gbar[ms * self.layout.n_bs + bs]
    }

    #[inline]
    fn allowed(&self, source_bs: usize, serving_bs: usize) -> bool {
        source_bs != serving_bs
            && match self.coupling {
                Coupling::CoChannel => true,
                Coupling::SplitSpectrum => self.is_femto[source_bs] == self.is_femto[serving_bs],
            }
    }

    /// Scaled residuals `(A theta - b) / scale`, given the interference
    /// image `z_gw = G w` (noise units) of theta's bandwidth block.
    pub fn residuals(&self, theta: &[f64], z_gw: &[f64]) -> Vec<f64> {
        let lay = self.layout;
        let mut out = Vec::with_capacity(self.n_rows());
        for i in 0..lay.n_ms {
            let sum_r: f64 = self.gamma_ms[i].iter().map(|&l| theta[lay.r(l)]).sum();
            out.push(theta[lay.rms(i)] - sum_r);
        }
        for j in 0..lay.n_bs {
            let sum_r: f64 = self.gamma_bs[j].iter().map(|&l| theta[lay.r(l)]).sum();
            out.push(sum_r - theta[lay.rbs(j)]);
        }
        for l in 0..lay.n_links {
            let row = lay.n_ms + lay.n_bs + l;
            out.push((z_gw[l] - theta[lay.z(l)]) / self.row_scale[row]);
        }
        for j in 0..lay.n_bs {
            let sum_w: f64 = self.gamma_bs[j].iter().map(|&l| theta[lay.w(l)]).sum();
            out.push(sum_w - self.bw_mhz[j]);
        }
        out
    }

    /// `lambda = A^T mu` split conformably with theta. The w-component
    /// is constant across links of one cell and returned per BS.
    pub fn lambda(&self, mu_theta: &[f64]) -> Lambda {
        let lay = self.layout;
        let o_bs = lay.n_ms;
        let o_int = lay.n_ms + lay.n_bs;
        let o_bw = o_int + lay.n_links;

        let mut lam = Lambda {
            r: vec![0.0; lay.n_links],
            bs: vec![0.0; lay.n_bs],
            ms: vec![0.0; lay.n_ms],
            w_bs: vec![0.0; lay.n_bs],
            z: vec![0.0; lay.n_links],
        };
        lam.ms.copy_from_slice(&mu_theta[..lay.n_ms]);
        for j in 0..lay.n_bs {
            lam.bs[j] = -mu_theta[o_bs + j];
        }
        for (l, link) in self.links.iter().enumerate() {
            lam.r[l] = -mu_theta[link.ms] + mu_theta[o_bs + link.bs];
            lam.z[l] = -mu_theta[o_int + l] / self.row_scale[o_int + l];
        }

        // w-block: lambda_w(k) = mu_bw(k) + sum_i gbar(i,k) * (sum of
        // scaled interference multipliers of MS i over rows allowed to
        // see cell k).
        let mut ms_sum = vec![[0.0f64; 2]; lay.n_ms];
        for (l, link) in self.links.iter().enumerate() {
            let scaled = mu_theta[o_int + l] / self.row_scale[o_int + l];
            let tier = usize::from(self.is_femto[link.bs]);
            ms_sum[link.ms][tier] += scaled;
        }
        for k in 0..lay.n_bs {
            let mut t = 0.0;
            let k_tier = usize::from(self.is_femto[k]);
            for (i, sums) in ms_sum.iter().enumerate() {
                let s = match self.coupling {
                    Coupling::CoChannel => sums[0] + sums[1],
                    Coupling::SplitSpectrum => sums[k_tier],
                };
                t += self.gbar(i, k) * s;
            }
            lam.w_bs[k] = mu_theta[o_bw + k] + t;
        }
        // Remove each row's own serving cell (zero column in G).
        for (l, link) in self.links.iter().enumerate() {
            let scaled = mu_theta[o_int + l] / self.row_scale[o_int + l];
            lam.w_bs[link.bs] -= self.gbar(link.ms, link.bs) * scaled;
        }
        lam
    }

    /// Dense materialization for small instances (tests, debugging).
    pub fn to_dense(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let lay = self.layout;
        let mut rows = Vec::with_capacity(self.n_rows());
        for i in 0..lay.n_ms {
            let mut row = vec![0.0; lay.len()];
            row[lay.rms(i)] = 1.0;
            for &l in &self.gamma_ms[i] {
                row[lay.r(l)] = -1.0;
            }
            rows.push(row);
        }
        for j in 0..lay.n_bs {
            let mut row = vec![0.0; lay.len()];
            row[lay.rbs(j)] = -1.0;
            for &l in &self.gamma_bs[j] {
                row[lay.r(l)] = 1.0;
            }
            rows.push(row);
        }
        for (l, link) in self.links.iter().enumerate() {
            let scale = self.row_scale[lay.n_ms + lay.n_bs + l];
            let mut row = vec![0.0; lay.len()];
            row[lay.z(l)] = -1.0 / scale;
            for (m, other) in self.links.iter().enumerate() {
                if self.allowed(other.bs, link.bs) {
                    row[lay.w(m)] = self.gbar(link.ms, other.bs) / scale;
                }
            }
            rows.push(row);
        }
        for j in 0..lay.n_bs {
            let mut row = vec![0.0; lay.len()];
            for &l in &self.gamma_bs[j] {
                row[lay.w(l)] = 1.0;
            }
            rows.push(row);
        }
        (rows, self.b.clone())
    }
}

/// `A^T mu` partitioned conformably with theta.
#[derive(Debug, Clone)]
pub struct Lambda {
    pub r: Vec<f64>,
    pub bs: Vec<f64>,
    pub ms: Vec<f64>,
    /// Per-BS w-price; the per-link value for link (m, k) is `w_bs[k]`.
    pub w_bs: Vec<f64>,
    pub z: Vec<f64>,
}

/// Assembled program for one drop.
#[derive(Debug, Clone)]
pub struct Problem {
    pub graph: LinkGraph,
    pub layout: ThetaLayout,
    pub a: ConstraintMatrix,
    /// Nominal SNR (interference-free, linear) per link.
    pub snr0: Vec<f64>,
    pub bw_mhz: Vec<f64>,
    /// Backhaul cap per BS, Mbps (infinite for operator cells).
    pub cap_mbps: Vec<f64>,
    /// `min(cap, W * rho_max)`: a box on rBS preserving the optimum.
    pub eff_cap_mbps: Vec<f64>,
    /// Price per Mbps carried, per BS.
    pub price: Vec<f64>,
    pub floor_mbps: f64,
    pub rho_max: f64,
    pub beta_lin: f64,
    /// Largest possible interference row value (noise units).
    pub z_hi: f64,
    /// Per-link interference ceiling `(G W)_l` (noise units).
    pub z_row_max: Vec<f64>,
    /// Upper box for each MS's total rate, Mbps.
    pub rms_cap: Vec<f64>,
}

impl Problem {
    pub fn n_links(&self) -> usize {
        self.layout.n_links
    }

    pub fn n_ms(&self) -> usize {
        self.layout.n_ms
    }

    pub fn n_bs(&self) -> usize {
        self.layout.n_bs
    }

    /// Spectral efficiency of a link at normalized interference `z`.
    #[inline]
    pub fn rho(&self, link: usize, z_norm: f64) -> f64 {
        let sinr = self.snr0[link] / (1.0 + z_norm);
        (1.0 + self.beta_lin * sinr).log2().min(self.rho_max)
    }

    /// `z = G w` in noise units from per-BS loads in MHz.
    pub fn interference_norm(&self, loads_mhz: &[f64]) -> Vec<f64> {
        let loads_hz: Vec<f64> = loads_mhz.iter().map(|w| w * 1e6).collect();
        let noise = self.graph.noise_floor_w_hz;
        self.graph
            .interference_from_loads(&loads_hz)
            .into_iter()
            .map(|z| z / noise)
            .collect()
    }

    pub fn bs_loads_mhz(&self, theta: &[f64]) -> Vec<f64> {
        let lay = self.layout;
        let mut loads = vec![0.0; lay.n_bs];
        for (l, link) in self.graph.links.iter().enumerate() {
            loads[link.bs] += theta[lay.w(l)];
        }
        loads
    }

    /// Net utility of a theta whose rate blocks are consistent.
    pub fn net_utility(&self, per_ms_rate_mbps: &[f64], per_bs_rate_mbps: &[f64]) -> f64 {
        let u: f64 = per_ms_rate_mbps
            .iter()
            .map(|r| r.max(self.floor_mbps).ln())
            .sum();
        let c: f64 = per_bs_rate_mbps
            .iter()
            .zip(&self.price)
            .filter(|(r, _)| **r > 0.0)
            .map(|(r, p)| p * r)
            .sum();
        u - c
    }

    /// Maximum relative violation over all constraints, with the
    /// offending row. The rate-coupling family `r <= w rho(z)` is
    /// reported with row index `n_rows + link`.
    pub fn feasibility(&self, theta: &[f64]) -> (f64, usize) {
        let lay = self.layout;
        let z_gw = self.interference_norm(&self.bs_loads_mhz(theta));
        let resid = self.a.residuals(theta, &z_gw);
        let mut worst = (0.0f64, 0usize);
        for (row, r) in resid.iter().enumerate() {
            let rel = r / (1.0 + self.a.b[row].abs());
            if rel > worst.0 {
                worst = (rel, row);
            }
        }
        for l in 0..lay.n_links {
            let gap = theta[lay.r(l)] - theta[lay.w(l)] * self.rho(l, theta[lay.z(l)]);
            if gap > worst.0 {
                worst = (gap, self.a.n_rows() + l);
            }
        }
        worst
    }
}

/// Builds the program from a link graph and economics model.
pub fn assemble(
    graph: LinkGraph,
    scenario: &Scenario,
    economics: &EconomicsModel,
) -> Result<Problem> {
    if graph.n_ms() != scenario.ms.len() || graph.n_bs() != scenario.bs.len() {
        return Err(Error::model(format!(
            "assembly dimension mismatch: graph {}x{}, scenario {}x{}",
            graph.n_ms(),
            graph.n_bs(),
            scenario.ms.len(),
            scenario.bs.len()
        )));
    }
    let layout = ThetaLayout {
        n_links: graph.links.len(),
        n_bs: graph.n_bs(),
        n_ms: graph.n_ms(),
    };
    let noise = graph.noise_floor_w_hz;
    let bw_mhz: Vec<f64> = graph.bs_bandwidth_hz.iter().map(|w| w / 1e6).collect();

    let mut gbar = vec![0.0; layout.n_ms * layout.n_bs];
    for i in 0..layout.n_ms {
        for k in 0..layout.n_bs {
            gbar[i * layout.n_bs + k] = graph.rx_psd(i, k) / (noise * bw_mhz[k]);
        }
    }

    let is_femto = graph.bs_is_femto.clone();
    let coupling = graph.coupling;
    let allowed = |k: usize, j: usize| {
        k != j
            && match coupling {
                Coupling::CoChannel => true,
                Coupling::SplitSpectrum => is_femto[k] == is_femto[j],
            }
    };

    // Row scales (unit max-norm) and the interference ceiling.
    let n_rows = layout.n_ms + layout.n_bs + layout.n_links + layout.n_bs;
    let mut row_scale = vec![1.0; n_rows];
    let mut b = vec![0.0; n_rows];
    let mut z_row_max = vec![0.0f64; layout.n_links];
    let mut z_hi = 0.0f64;
    for (l, link) in graph.links.iter().enumerate() {
        let mut max_coeff = 1.0f64; // the z column
        let mut row_max = 0.0f64;
        for k in 0..layout.n_bs {
            if allowed(k, link.bs) {
                let g = gbar[link.ms * layout.n_bs + k];
                max_coeff = max_coeff.max(g);
                row_max += g * bw_mhz[k];
            }
        }
        row_scale[layout.n_ms + layout.n_bs + l] = max_coeff;
        z_row_max[l] = row_max;
        z_hi = z_hi.max(row_max);
    }
    for j in 0..layout.n_bs {
        b[layout.n_ms + layout.n_bs + layout.n_links + j] = bw_mhz[j];
    }
    let z_hi = z_hi.max(Z_GRID_FLOOR * 10.0);

    let a = ConstraintMatrix {
        layout,
        links: graph.links.clone(),
        gamma_ms: graph.gamma_ms.clone(),
        gamma_bs: graph.gamma_bs.clone(),
        gbar,
        bw_mhz: bw_mhz.clone(),
        is_femto,
        coupling,
        b,
        row_scale,
    };

    let snr0: Vec<f64> = graph.link_gain.iter().map(|g| g / noise).collect();
    let rho_max = graph.rho_max;
    let cap_mbps: Vec<f64> = scenario
        .bs
        .iter()
        .map(|b| b.backhaul_cap_bps / 1e6)
        .collect();
    let eff_cap_mbps: Vec<f64> = cap_mbps
        .iter()
        .zip(&bw_mhz)
        .map(|(c, w)| c.min(w * rho_max))
        .collect();
    let price: Vec<f64> = scenario.bs.iter().map(|b| b.price_per_mbps).collect();
    let rms_cap: Vec<f64> = graph
        .gamma_ms
        .iter()
        .map(|links| links.iter().map(|&l| eff_cap_mbps[graph.links[l].bs]).sum())
        .collect();

    Ok(Problem {
        beta_lin: graph.beta_lin(),
        layout,
        a,
        snr0,
        bw_mhz,
        cap_mbps,
        eff_cap_mbps,
        price,
        floor_mbps: economics.floor_mbps(),
        rho_max,
        z_hi,
        z_row_max,
        rms_cap,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_link_graph, ChannelParams, Coupling};
    use crate::geometry::Area;
    use crate::rng;
    use crate::scenario::{generate_stochastic, Environment, ScenarioConfig};
    use rand::Rng;

    fn small_problem(seed: u64, n_ops: usize, adoption: f64, n_ue: usize) -> Problem {
        let mut cfg = ScenarioConfig::new(Environment::Urban, Area::new(500.0, 500.0, true));
        cfg.n_operator_sites = n_ops;
        cfg.ap_count = 20;
        cfg.adoption_rate = adoption;
        cfg.ue_count_override = Some(n_ue);
        let s = generate_stochastic(&cfg, seed).unwrap();
        let g = build_link_graph(&s, &ChannelParams::default(), Coupling::CoChannel, seed).unwrap();
        assemble(g, &s, &EconomicsModel::default()).unwrap()
    }

    #[test]
    fn one_ms_one_bs_has_five_vars_and_four_rows() {
        let p = small_problem(1, 1, 0.0, 1);
        assert_eq!(p.layout.len(), 5);
        assert_eq!(p.a.n_rows(), 4);
    }

    #[test]
    fn zero_point_is_feasible() {
        let p = small_problem(2, 2, 0.5, 3);
        let theta = vec![0.0; p.layout.len()];
        let (viol, _) = p.feasibility(&theta);
        assert!(viol <= 0.0, "violation {viol}");
    }

    #[test]
    fn bandwidth_overuse_reports_the_right_row() {
        let p = small_problem(3, 1, 0.0, 1);
        let lay = p.layout;
        let mut theta = vec![0.0; lay.len()];
        theta[lay.w(0)] = p.bw_mhz[p.graph.links[0].bs] + 5.0;
        let (viol, row) = p.feasibility(&theta);
        assert!(viol > 0.0);
        match p.a.row_id(row) {
            RowId::Bandwidth(j) => assert_eq!(j, p.graph.links[0].bs),
            other => panic!("expected bandwidth row, got {other:?}"),
        }
    }

    #[test]
    fn structured_residuals_match_dense() {
        let p = small_problem(4, 2, 0.5, 4);
        let lay = p.layout;
        let mut r = rng::stream(9, "theta");
        let theta: Vec<f64> = (0..lay.len()).map(|_| r.random_range(0.0..5.0)).collect();
        let z_gw = p.interference_norm(&p.bs_loads_mhz(&theta));
        let fast = p.a.residuals(&theta, &z_gw);
        let (dense, b) = p.a.to_dense();
        for (row, dr) in dense.iter().enumerate() {
            let slow: f64 = dr.iter().zip(&theta).map(|(a, t)| a * t).sum::<f64>() - b[row];
            let tol = 1e-9 * (1.0 + slow.abs());
            assert!(
                (fast[row] - slow).abs() < tol,
                "row {row}: {} vs {}",
                fast[row],
                slow
            );
        }
    }

    #[test]
    fn structured_lambda_matches_dense_transpose() {
        let p = small_problem(5, 2, 0.5, 4);
        let lay = p.layout;
        let mut r = rng::stream(10, "mu");
        let mu: Vec<f64> = (0..p.a.n_rows())
            .map(|_| r.random_range(0.0..2.0))
            .collect();
        let lam = p.a.lambda(&mu);
        let (dense, _) = p.a.to_dense();
        let mut slow = vec![0.0; lay.len()];
        for (row, dr) in dense.iter().enumerate() {
            for (c, a) in dr.iter().enumerate() {
                slow[c] += a * mu[row];
            }
        }
        let tol = |x: f64| 1e-9 * (1.0 + x.abs());
        for (l, link) in p.graph.links.iter().enumerate() {
            assert!((lam.r[l] - slow[lay.r(l)]).abs() < tol(slow[lay.r(l)]));
            assert!((lam.z[l] - slow[lay.z(l)]).abs() < tol(slow[lay.z(l)]));
            let lw = lam.w_bs[link.bs];
            assert!(
                (lw - slow[lay.w(l)]).abs() < tol(slow[lay.w(l)]),
                "link {l}: {lw} vs {}",
                slow[lay.w(l)]
            );
        }
        for j in 0..lay.n_bs {
            assert!((lam.bs[j] - slow[lay.rbs(j)]).abs() < tol(slow[lay.rbs(j)]));
        }
        for i in 0..lay.n_ms {
            assert!((lam.ms[i] - slow[lay.rms(i)]).abs() < tol(slow[lay.rms(i)]));
        }
    }

    #[test]
    fn rho_is_capped_and_monotone() {
        let p = small_problem(6, 1, 0.0, 2);
        for l in 0..p.n_links() {
            let mut prev = f64::INFINITY;
            for step in 0..40 {
                let z = Z_GRID_FLOOR * 10f64.powf(step as f64 / 4.0);
                let rho = p.rho(l, z);
                assert!(rho <= p.rho_max && rho >= 0.0);
                assert!(rho <= prev + 1e-15);
                prev = rho;
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut cfg = ScenarioConfig::new(Environment::Urban, Area::new(500.0, 500.0, true));
        cfg.n_operator_sites = 1;
        cfg.ue_count_override = Some(2);
        cfg.adoption_rate = 0.0;
        let s1 = generate_stochastic(&cfg, 1).unwrap();
        cfg.ue_count_override = Some(3);
        let s2 = generate_stochastic(&cfg, 1).unwrap();
        let g = build_link_graph(&s1, &ChannelParams::default(), Coupling::CoChannel, 1).unwrap();
        assert!(assemble(g, &s2, &EconomicsModel::default()).is_err());
    }
}
