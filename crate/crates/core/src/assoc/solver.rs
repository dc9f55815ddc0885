//! Subgradient dual ascent on the augmented Lagrangian.
//!
//! Each iteration solves all separable subproblems at the current
//! multipliers and prox center, updates the multipliers along the
//! constraint residuals, and refreshes the prox center. A feasible
//! multipath point is extracted from every iterate (bandwidths scaled
//! into budget, interference recomputed exactly, rates completed and
//! prorated to backhaul caps) and the best one is returned. The dual
//! function value is tracked at every visited multiplier and a
//! prox-free subgradient loop then polishes the weak-duality bound.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::problem::{Lambda, Problem, Z_GRID_FLOOR};
use super::subproblems::{
    bound_linear, bound_rms, bound_wz_idle, bound_wz_loaded, prox_r, prox_rbs, prox_rms, prox_wz,
    WzArgs,
};
use super::Solution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `step0 / sqrt(t)`; guarantees convergence of the bound loop.
    DiminishingSqrt,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Prox curvature of the augmenting function.
    pub tau: f64,
    /// Initial dual step on unit max-norm constraint rows.
    pub step0: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    /// Relative feasibility and stall tolerance.
    pub feas_tol: f64,
    /// Points in the logarithmic interference search grid.
    pub z_grid: usize,
    /// Subgradient steps of the dedicated bound-minimization loop.
    pub dual_bound_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 1.0,
            step0: 0.1,
            step_rule: StepRule::DiminishingSqrt,
            max_iters: 200,
            feas_tol: 1e-3,
            z_grid: 64,
            dual_bound_iters: 300,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 || self.step0 <= 0.0 || self.feas_tol <= 0.0 {
            return Err(Error::config(
                "solver tau, step0 and feas_tol must be positive",
            ));
        }
        if self.z_grid < 2 {
            return Err(Error::config("z_grid needs at least 2 points"));
        }
        Ok(())
    }
}

/// Multiplier state: `mu_theta` for `A theta <= b`, `mu_r` for the
/// rate-coupling family, and the derived `lambda = A^T mu_theta`.
#[derive(Debug, Clone)]
pub struct DualState {
    pub mu_theta: Vec<f64>,
    pub mu_r: Vec<f64>,
    pub lambda: Lambda,
    pub prox_center: Vec<f64>,
    pub step: f64,
    pub iter: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub net_utility: f64,
    pub dual_bound: f64,
    pub max_violation: f64,
    pub step: f64,
}

#[derive(Debug)]
pub struct SolveOutput {
    pub multipath: Solution,
    pub dual: DualState,
    /// Best weak-duality upper bound on the net utility.
    pub bound: f64,
    pub iters: usize,
    pub trace: Vec<TraceRow>,
}

/// Runs the dual-ascent scheme. The seed is part of the interface for
/// stochastic variants; the present scheme is deterministic.
pub fn dual_ascent(
    problem: &Problem,
    cfg: &SolverConfig,
    _seed: u64,
    collect_trace: bool,
) -> Result<SolveOutput> {
    cfg.validate()?;
    let lay = problem.layout;
    let (n_links, n_bs, n_ms) = (lay.n_links, lay.n_bs, lay.n_ms);
    let n_rows = problem.a.n_rows();

    // Shared logarithmic z grid and per-link spectral-efficiency table.
    let z_lo = Z_GRID_FLOOR;
    let z_hi = problem.z_hi;
    let n_g = cfg.z_grid;
    let z_grid: Vec<f64> = (0..n_g)
        .map(|t| z_lo * (z_hi / z_lo).powf(t as f64 / (n_g - 1) as f64))
        .collect();
    let mut rho_tab = vec![0.0; n_links * n_g];
    for l in 0..n_links {
        for (t, &z) in z_grid.iter().enumerate() {
            rho_tab[l * n_g + t] = problem.rho(l, z);
        }
    }

    // Initialization: equal bandwidth split, consistent rates, mu = 0.
    let mut prox = vec![0.0; lay.len()];
    for j in 0..n_bs {
        let links = &problem.graph.gamma_bs[j];
        if !links.is_empty() {
            let share = problem.bw_mhz[j] / links.len() as f64;
            for &l in links {
                prox[lay.w(l)] = share;
            }
        }
    }
    {
        let loads = problem.bs_loads_mhz(&prox);
        let z0 = problem.interference_norm(&loads);
        for l in 0..n_links {
            prox[lay.z(l)] = z0[l];
            prox[lay.r(l)] = prox[lay.w(l)] * problem.rho(l, z0[l]);
        }
        for j in 0..n_bs {
            let tot: f64 = problem.graph.gamma_bs[j]
                .iter()
                .map(|&l| prox[lay.r(l)])
                .sum();
            prox[lay.rbs(j)] = tot.min(problem.eff_cap_mbps[j]);
        }
        for i in 0..n_ms {
            prox[lay.rms(i)] = problem.graph.gamma_ms[i]
                .iter()
                .map(|&l| prox[lay.r(l)])
                .sum();
        }
    }

    let mut mu_theta = vec![0.0; n_rows];
    let mut mu_r = vec![0.0; n_links];
    let mut theta = vec![0.0; lay.len()];

    let mut best_net = f64::NEG_INFINITY;
    let mut best_score = f64::NEG_INFINITY;
    let mut best_ext: Option<Extraction> = None;
    let mut best_bound = f64::INFINITY;
    let mut best_mu: (Vec<f64>, Vec<f64>) = (mu_theta.clone(), mu_r.clone());
    let mut window: VecDeque<f64> = VecDeque::with_capacity(11);
    let mut trace = Vec::new();
    let mut last_step = 0.0;
    let mut iters = 0;

    for t in 1..=cfg.max_iters {
        let step = match cfg.step_rule {
            StepRule::DiminishingSqrt => cfg.step0 / (t as f64).sqrt(),
            StepRule::Constant => cfg.step0,
        };
        last_step = step;
        iters = t;

        let lam = problem.a.lambda(&mu_theta);

        // Lemma-style separable subproblems.
        for l in 0..n_links {
            theta[lay.r(l)] = prox_r(prox[lay.r(l)], lam.r[l] + mu_r[l], cfg.tau);
        }
        for j in 0..n_bs {
            theta[lay.rbs(j)] = prox_rbs(
                prox[lay.rbs(j)],
                problem.price[j] + lam.bs[j],
                cfg.tau,
                problem.eff_cap_mbps[j],
            );
        }
        for i in 0..n_ms {
            theta[lay.rms(i)] = prox_rms(prox[lay.rms(i)], lam.ms[i], cfg.tau);
        }
        for (l, link) in problem.graph.links.iter().enumerate() {
            let args = WzArgs {
                mu_r: mu_r[l],
                lam_w: lam.w_bs[link.bs],
                lam_z: lam.z[l],
                w_prev: prox[lay.w(l)],
                z_prev: prox[lay.z(l)],
                tau: cfg.tau,
                w_max: problem.bw_mhz[link.bs],
            };
            let (w, z) = prox_wz(&args, &z_grid, &rho_tab[l * n_g..(l + 1) * n_g], |z| {
                problem.rho(l, z)
            });
            theta[lay.w(l)] = w;
            theta[lay.z(l)] = z;
        }

        // Constraint residuals of the raw iterate.
        let loads = problem.bs_loads_mhz(&theta);
        let z_gw = problem.interference_norm(&loads);
        let resid_a = problem.a.residuals(&theta, &z_gw);
        let mut viol = 0.0f64;
        for (row, r) in resid_a.iter().enumerate() {
            viol = viol.max(r / (1.0 + problem.a.b[row].abs()));
        }
        let mut resid_rate = vec![0.0; n_links];
        for l in 0..n_links {
            resid_rate[l] = theta[lay.r(l)] - theta[lay.w(l)] * problem.rho(l, theta[lay.z(l)]);
            viol = viol.max(resid_rate[l]);
        }
        if !viol.is_finite() {
            return Err(Error::Solver {
                iter: t,
                msg: format!(
                    "non-finite iterate (step {step:.3e}, best net {best_net:.6e}); \
                     dual steps may be too aggressive"
                ),
            });
        }

        // Feasible multipath extraction; iterates compete on what
        // their truncation achieves.
        let ext = extract(problem, &theta, &loads);
        best_net = best_net.max(ext.net);
        if ext.score > best_score {
            best_score = ext.score;
            best_ext = Some(ext.clone());
        }

        // Weak-duality value at the current multipliers.
        let dval = dual_value(problem, &mu_theta, &mu_r, &lam);
        if dval < best_bound {
            best_bound = dval;
            best_mu = (mu_theta.clone(), mu_r.clone());
        }

        if collect_trace {
            trace.push(TraceRow {
                iter: t,
                net_utility: ext.score,
                dual_bound: best_bound,
                max_violation: viol,
                step,
            });
        }

        window.push_back(ext.score);
        if window.len() > 10 {
            window.pop_front();
        }
        let stalled = window.len() == 10 && {
            let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            (hi - lo) <= cfg.feas_tol * best_score.abs().max(1.0)
        };

        // Dual ascent and prox refresh.
        for (m, r) in mu_theta.iter_mut().zip(&resid_a) {
            *m = (*m + step * r).max(0.0);
        }
        for (m, r) in mu_r.iter_mut().zip(&resid_rate) {
            *m = (*m + step * r).max(0.0);
        }
        prox.copy_from_slice(&theta);

        if viol <= cfg.feas_tol && stalled {
            break;
        }
    }

    // Dedicated bound minimization from the best multipliers seen,
    // with Polyak steps targeting the best primal value (a valid lower
    // bound on the dual optimum by weak duality).
    let (mut mu_b, mut mu_rb) = best_mu;
    for t in 1..=cfg.dual_bound_iters {
        let lam = problem.a.lambda(&mu_b);
        let (dval, theta_b) = dual_maximizer(problem, &mu_rb, &lam);
        let dval = dval + mu_dot_b(problem, &mu_b);
        if dval < best_bound {
            best_bound = dval;
        }
        let loads_b = problem.bs_loads_mhz(&theta_b);
        let z_gw_b = problem.interference_norm(&loads_b);
        let resid_a = problem.a.residuals(&theta_b, &z_gw_b);
        let mut gnorm2 = 0.0;
        for r in &resid_a {
            gnorm2 += r * r;
        }
        let mut resid_rate = vec![0.0; n_links];
        for l in 0..n_links {
            resid_rate[l] =
                theta_b[lay.r(l)] - theta_b[lay.w(l)] * problem.rho(l, theta_b[lay.z(l)]);
            gnorm2 += resid_rate[l] * resid_rate[l];
        }
        if gnorm2 <= 0.0 {
            break; // dual maximizer is primal-feasible: bound is tight
        }
        let gap = (dval - best_net).max(0.0);
        let step = (gap / gnorm2).min(cfg.step0 * 100.0) / (1.0 + t as f64).log2();
        for (m, r) in mu_b.iter_mut().zip(&resid_a) {
            *m = (*m + step * r).max(0.0);
        }
        for (m, r) in mu_rb.iter_mut().zip(&resid_rate) {
            *m = (*m + step * r).max(0.0);
        }
    }

    let best_ext = best_ext.ok_or(Error::Solver {
        iter: 0,
        msg: "no iterations ran".into(),
    })?;
    let multipath = best_ext.into_solution(problem);
    let lambda = problem.a.lambda(&mu_theta);
    Ok(SolveOutput {
        multipath,
        dual: DualState {
            mu_theta,
            mu_r,
            lambda,
            prox_center: prox,
            step: last_step,
            iter: iters,
        },
        bound: best_bound,
        iters,
        trace,
    })
}

fn mu_dot_b(problem: &Problem, mu_theta: &[f64]) -> f64 {
    mu_theta.iter().zip(&problem.a.b).map(|(m, b)| m * b).sum()
}

/// Dual function value `max_theta L(theta, mu)`, `mu^T b` included.
fn dual_value(problem: &Problem, mu_theta: &[f64], mu_r: &[f64], lam: &Lambda) -> f64 {
    dual_maximizer(problem, mu_r, lam).0 + mu_dot_b(problem, mu_theta)
}

/// Maximizes the Lagrangian over a region containing every feasible
/// point: besides the per-variable boxes, the per-cell link rates and
/// bandwidths respect their cell's backhaul and bandwidth budget
/// (implied by the constraints), which keeps a cell's links from each
/// claiming the whole cell in the bound. Returns the value without the
/// `mu^T b` constant, plus the maximizing theta for subgradients.
fn dual_maximizer(problem: &Problem, mu_r: &[f64], lam: &Lambda) -> (f64, Vec<f64>) {
    let lay = problem.layout;
    let mut theta = vec![0.0; lay.len()];
    let mut v = 0.0;
    for j in 0..problem.n_bs() {
        let links = &problem.graph.gamma_bs[j];
        let w_max = problem.bw_mhz[j];

        // Rate block: the cell's backhaul goes to the most profitable
        // link, if any is profitable.
        let mut best_r: Option<(f64, usize)> = None;
        for &l in links {
            let gain = -(lam.r[l] + mu_r[l]);
            if gain > 0.0 && best_r.is_none_or(|(g, _)| gain > g) {
                best_r = Some((gain, l));
            }
        }
        if let Some((gain, l)) = best_r {
            v += gain * problem.eff_cap_mbps[j];
            theta[lay.r(l)] = problem.eff_cap_mbps[j];
        }

        // Bandwidth block: every link banks its idle interference
        // reward; the cell's bandwidth goes to the link with the best
        // loaded-minus-idle improvement, if positive. Optimal points
        // have z = Gw, so each link's z stays under its own row
        // ceiling.
        let mut best_w: Option<(f64, usize, f64)> = None;
        for &l in links {
            let (idle_val, idle_z) = bound_wz_idle(lam.z[l], problem.z_row_max[l]);
            v += idle_val;
            theta[lay.z(l)] = idle_z;
            let (loaded_val, loaded_z) = bound_wz_loaded(
                mu_r[l],
                lam.w_bs[j],
                lam.z[l],
                w_max,
                problem.beta_lin * problem.snr0[l],
                problem.rho_max,
                problem.z_row_max[l],
            );
            let improvement = loaded_val - idle_val;
            if improvement > 0.0 && best_w.is_none_or(|(g, _, _)| improvement > g) {
                best_w = Some((improvement, l, loaded_z));
            }
        }
        if let Some((improvement, l, z)) = best_w {
            v += improvement;
            theta[lay.w(l)] = w_max;
            theta[lay.z(l)] = z;
        }

        let (val, r) = bound_linear(problem.price[j] + lam.bs[j], problem.eff_cap_mbps[j]);
        v += val;
        theta[lay.rbs(j)] = r;
    }
    for i in 0..problem.n_ms() {
        let (val, r) = bound_rms(lam.ms[i], problem.rms_cap[i], problem.floor_mbps);
        v += val;
        theta[lay.rms(i)] = r;
    }
    (v, theta)
}

/// A feasible multipath operating point derived from an iterate's
/// bandwidth block. `net` is the point's own net utility; `score` is
/// what its single-path truncation achieves (equal when the point is
/// already single-path), which is what iterates compete on.
#[derive(Debug, Clone)]
struct Extraction {
    theta: Vec<f64>,
    net: f64,
    score: f64,
    per_ms: Vec<f64>,
    per_bs: Vec<f64>,
}

/// Extracts a feasible multipath point from the iterate, scored by
/// what its single-path truncation achieves (the deliverable is the
/// truncated solution, and a multipath point that spreads rate across
/// many links can truncate terribly). Candidates: the full multipath
/// completion (scored by its truncation), and the iterate's assignment
/// re-provisioned per cell (equal split over retained users, radiated
/// bandwidth shrunk to what each cell's backhaul can use; single-path,
/// so it is its own truncation). The returned point's own net utility
/// always dominates its truncation's, which keeps the weak-duality
/// sandwich intact.
fn extract(problem: &Problem, theta_hat: &[f64], loads_raw: &[f64]) -> Extraction {
    let full = extract_multipath(problem, theta_hat, loads_raw);
    let as_solution = Solution {
        theta: full.theta.clone(),
        net_utility: full.net,
        feasibility: 0.0,
        single_path: false,
        per_ms_rate_mbps: full.per_ms.clone(),
        per_bs_rate_mbps: full.per_bs.clone(),
        zero_rate_ms: 0,
    };
    let truncated = super::truncate::truncate_no_feas(&as_solution, problem);
    let assigned = extract_assignment(problem, theta_hat);
    if truncated.net_utility >= assigned.net {
        if full.net >= truncated.net_utility {
            // The multipath completion dominates its truncation:
            // return it, scored by what truncating it achieves.
            Extraction {
                score: truncated.net_utility,
                ..full
            }
        } else {
            // Truncation came out ahead (interference windfall):
            // the truncated point itself is the better solution.
            Extraction {
                score: truncated.net_utility,
                net: truncated.net_utility,
                theta: truncated.theta,
                per_ms: truncated.per_ms_rate_mbps,
                per_bs: truncated.per_bs_rate_mbps,
            }
        }
    } else {
        Extraction {
            score: assigned.net,
            ..assigned
        }
    }
}

/// Single-path candidate: keep each mobile's largest-`r` link, give
/// every retained cell an equal bandwidth split over its users, then
/// shrink each cell's radiated bandwidth to what its backhaul cap can
/// carry and settle rates on the reduced interference.
/// The rate beyond which carrying traffic on a cell priced at `p`
/// reduces net utility (`1/p` for the log utility; unbounded when
/// free).
#[inline]
fn priced_rate_cap(price: f64) -> f64 {
    if price > 0.0 {
        1.0 / price
    } else {
        f64::INFINITY
    }
}

fn extract_assignment(problem: &Problem, theta_hat: &[f64]) -> Extraction {
    let lay = problem.layout;
    let mut theta = vec![0.0; lay.len()];
    let mut kept: Vec<usize> = Vec::with_capacity(problem.n_ms());
    for links in &problem.graph.gamma_ms {
        // Serve each mobile on the link whose iterate bandwidth buys
        // the most net utility: ln(rate) minus the cell's price for
        // that rate. Scoring on the bandwidth block (rather than the
        // rate block) stays physical while the duals hunt, and the
        // price term keeps expensive cells out unless they pay off.
        let mut best: Option<(usize, f64, f64)> = None;
        for &l in links {
            let bs = problem.graph.links[l].bs;
            let proxy = theta_hat[lay.w(l)] * problem.rho(l, theta_hat[lay.z(l)]);
            // A priced cell is never worth loading past the point
            // where the marginal log utility equals the price.
            let rate = proxy.min(priced_rate_cap(problem.price[bs]));
            let value = rate.max(problem.floor_mbps).ln() - problem.price[bs] * rate;
            let g = problem.snr0[l];
            match best {
                Some((_, bv, bg)) if value < bv || (value == bv && g <= bg) => {}
                _ => best = Some((l, value, g)),
            }
        }
        if let Some((l, _, _)) = best {
            kept.push(l);
        }
    }

    let mut retained: Vec<Vec<usize>> = vec![Vec::new(); problem.n_bs()];
    for &l in &kept {
        retained[problem.graph.links[l].bs].push(l);
    }
    for (j, links) in retained.iter().enumerate() {
        if !links.is_empty() {
            let share = problem.bw_mhz[j] / links.len() as f64;
            for &l in links {
                theta[lay.w(l)] = share;
            }
        }
    }

    // Two passes: provisional rates at the equal split, then bandwidth
    // shrunk to what the backhaul cap and the price make worth
    // radiating, with rates settled on the cleaner interference image.
    for pass in 0..2 {
        let z = problem.interference_norm(&problem.bs_loads_mhz(&theta));
        for (l, &zl) in z.iter().enumerate() {
            theta[lay.z(l)] = zl;
        }
        let mut shrunk = false;
        for (j, links) in retained.iter().enumerate() {
            if links.is_empty() {
                continue;
            }
            let rate_cap = priced_rate_cap(problem.price[j]);
            let potential: Vec<f64> = links
                .iter()
                .map(|&l| theta[lay.w(l)] * problem.rho(l, theta[lay.z(l)]))
                .collect();
            let demand: Vec<f64> = potential.iter().map(|d| d.min(rate_cap)).collect();
            let weights: Vec<f64> = links
                .iter()
                .map(|&l| theta_hat[lay.r(l)].max(0.0))
                .collect();
            let granted = super::truncate::ration(&demand, &weights, problem.cap_mbps[j]);
            let mut total = 0.0;
            for ((&l, &pot), &g) in links.iter().zip(&potential).zip(&granted) {
                theta[lay.r(l)] = g;
                total += g;
                if pass == 0 && g < pot {
                    let rho = problem.rho(l, theta[lay.z(l)]);
                    if rho > 0.0 {
                        theta[lay.w(l)] = g / rho;
                        shrunk = true;
                    }
                }
            }
            theta[lay.rbs(j)] = total;
        }
        if pass == 0 && !shrunk {
            break;
        }
    }

    let mut per_ms = vec![0.0; problem.n_ms()];
    for i in 0..problem.n_ms() {
        per_ms[i] = problem.graph.gamma_ms[i]
            .iter()
            .map(|&l| theta[lay.r(l)])
            .sum();
        theta[lay.rms(i)] = per_ms[i];
    }
    let per_bs: Vec<f64> = (0..problem.n_bs()).map(|j| theta[lay.rbs(j)]).collect();
    let net = problem.net_utility(&per_ms, &per_bs);
    Extraction {
        theta,
        net,
        score: net,
        per_ms,
        per_bs,
    }
}

fn extract_multipath(problem: &Problem, theta_hat: &[f64], loads_raw: &[f64]) -> Extraction {
    let lay = problem.layout;
    let mut theta = vec![0.0; lay.len()];

    // Each cell keeps the iterate's total load (clamped into budget)
    // but redistributes it across its links in proportion to the
    // iterate's rate intent, falling back to the raw bandwidths when
    // the cell carries no rate.
    let mut loads = vec![0.0; problem.n_bs()];
    for j in 0..problem.n_bs() {
        let links = &problem.graph.gamma_bs[j];
        if links.is_empty() {
            continue;
        }
        let total = loads_raw[j].min(problem.bw_mhz[j]);
        loads[j] = total;
        let rate_sum: f64 = links.iter().map(|&l| theta_hat[lay.r(l)].max(0.0)).sum();
        if rate_sum > 0.0 {
            for &l in links {
                theta[lay.w(l)] = total * theta_hat[lay.r(l)].max(0.0) / rate_sum;
            }
        } else if loads_raw[j] > 0.0 {
            for &l in links {
                theta[lay.w(l)] = theta_hat[lay.w(l)] * total / loads_raw[j];
            }
        }
    }

    // Exact interference image and the rates it supports.
    let z = problem.interference_norm(&loads);
    for l in 0..lay.n_links {
        theta[lay.z(l)] = z[l];
        theta[lay.r(l)] = theta[lay.w(l)] * problem.rho(l, z[l]);
    }

    // Prorate each cell's rates into its backhaul cap.
    let mut per_bs = vec![0.0; problem.n_bs()];
    for j in 0..problem.n_bs() {
        let tot: f64 = problem.graph.gamma_bs[j]
            .iter()
            .map(|&l| theta[lay.r(l)])
            .sum();
        let cap = problem.cap_mbps[j];
        if tot > cap {
            let shrink = cap / tot;
            for &l in &problem.graph.gamma_bs[j] {
                theta[lay.r(l)] *= shrink;
            }
            per_bs[j] = cap;
        } else {
            per_bs[j] = tot;
        }
        theta[lay.rbs(j)] = per_bs[j];
    }

    let mut per_ms = vec![0.0; problem.n_ms()];
    for i in 0..problem.n_ms() {
        per_ms[i] = problem.graph.gamma_ms[i]
            .iter()
            .map(|&l| theta[lay.r(l)])
            .sum();
        theta[lay.rms(i)] = per_ms[i];
    }

    let net = problem.net_utility(&per_ms, &per_bs);
    Extraction {
        theta,
        net,
        score: net,
        per_ms,
        per_bs,
    }
}

impl Extraction {
    fn into_solution(self, problem: &Problem) -> Solution {
        let lay = problem.layout;
        let (feas, _) = problem.feasibility(&self.theta);
        let mut single_path = true;
        for i in 0..problem.n_ms() {
            let active = problem.graph.gamma_ms[i]
                .iter()
                .filter(|&&l| self.theta[lay.r(l)] > 0.0)
                .count();
            if active > 1 {
                single_path = false;
                break;
            }
        }
        let zero_rate_ms = self.per_ms.iter().filter(|r| **r <= 0.0).count();
        Solution {
            theta: self.theta,
            net_utility: self.net,
            feasibility: feas,
            single_path,
            per_ms_rate_mbps: self.per_ms,
            per_bs_rate_mbps: self.per_bs,
            zero_rate_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc::assemble;
    use crate::channel::{build_link_graph, ChannelParams, Coupling};
    use crate::economics::EconomicsModel;
    use crate::geometry::Area;
    use crate::scenario::{generate_stochastic, Environment, ScenarioConfig};

    fn solve_small(
        n_ops: usize,
        adoption: f64,
        n_ue: usize,
        seed: u64,
        cfg: &SolverConfig,
    ) -> (crate::assoc::Problem, SolveOutput) {
        let mut sc = ScenarioConfig::new(Environment::Urban, Area::new(500.0, 500.0, true));
        sc.n_operator_sites = n_ops;
        sc.ap_count = 20;
        sc.adoption_rate = adoption;
        sc.ue_count_override = Some(n_ue);
        let s = generate_stochastic(&sc, seed).unwrap();
        let g = build_link_graph(&s, &ChannelParams::default(), Coupling::CoChannel, seed).unwrap();
        let p = assemble(g, &s, &EconomicsModel::default()).unwrap();
        let out = dual_ascent(&p, cfg, seed, false).unwrap();
        (p, out)
    }

    #[test]
    fn single_link_reaches_the_capped_optimum() {
        // One MS close to one micro: rho caps, so rMS* = W * rho_max.
        let cfg = SolverConfig::default();
        let (p, out) = solve_small(1, 0.0, 1, 3, &cfg);
        assert_eq!(p.n_links(), 1);
        let optimal = p.bw_mhz[p.graph.links[0].bs] * p.rho_max;
        let got = out.multipath.per_ms_rate_mbps[0];
        assert!(
            (got - optimal).abs() / optimal < 0.01,
            "rate {got} vs optimal {optimal}"
        );
        assert!(out.multipath.feasibility < 1e-9);
        // Weak duality.
        assert!(out.multipath.net_utility <= out.bound + 1e-9);
    }

    #[test]
    fn weak_duality_holds_across_seeds() {
        let cfg = SolverConfig::default();
        for seed in 0..5 {
            let (_, out) = solve_small(2, 0.5, 5, seed, &cfg);
            assert!(
                out.multipath.net_utility <= out.bound + 1e-9,
                "seed {seed}: net {} > bound {}",
                out.multipath.net_utility,
                out.bound
            );
            assert!(out.multipath.feasibility <= 1e-9);
            assert!(out.dual.mu_theta.iter().all(|m| *m >= 0.0));
            assert!(out.dual.mu_r.iter().all(|m| *m >= 0.0));
        }
    }

    #[test]
    fn trace_is_emitted_when_requested() {
        let mut sc = ScenarioConfig::new(Environment::Urban, Area::new(500.0, 500.0, true));
        sc.n_operator_sites = 2;
        sc.adoption_rate = 0.0;
        sc.ue_count_override = Some(3);
        let s = generate_stochastic(&sc, 1).unwrap();
        let g = build_link_graph(&s, &ChannelParams::default(), Coupling::CoChannel, 1).unwrap();
        let p = assemble(g, &s, &EconomicsModel::default()).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.max_iters = 40;
        let out = dual_ascent(&p, &cfg, 1, true).unwrap();
        assert_eq!(out.trace.len(), out.iters);
        for row in &out.trace {
            assert!(row.net_utility <= row.dual_bound + 1e-9);
            assert!(row.step > 0.0);
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let cfg = SolverConfig::default();
        let (_, a) = solve_small(2, 0.5, 4, 7, &cfg);
        let (_, b) = solve_small(2, 0.5, 4, 7, &cfg);
        assert_eq!(a.multipath.net_utility, b.multipath.net_utility);
        assert_eq!(a.bound, b.bound);
        assert_eq!(a.multipath.theta, b.multipath.theta);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = SolverConfig::default();
        cfg.tau = 0.0;
        assert!(cfg.validate().is_err());
    }
}
