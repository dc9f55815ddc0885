//! Drop orchestration: single drops, parameter sweeps (adoption rate,
//! price, cell-splitting factor), the backhaul-vs-utility comparison,
//! and metric aggregation.
//!
//! Sweeps derive one seed per (value, drop) by hashing, so points are
//! statistically independent; the backhaul comparison instead shares
//! one seed set across every point of both curves (common random
//! numbers), which makes its two no-op endpoints coincide with the
//! operator-only baseline exactly.

pub mod output;

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assoc::{assemble, dual_ascent, truncate_single_path, SolverConfig, TraceRow};
use crate::channel::{build_link_graph_with, ChannelParams, Coupling, GraphOptions};
use crate::economics::{EconomicsModel, MBPS};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scenario::{generate_stochastic, round_half_even, Environment, ScenarioConfig};

/// Everything needed to run one drop.
#[derive(Debug, Clone)]
pub struct DropContext {
    pub scenario: ScenarioConfig,
    pub channel: ChannelParams,
    pub coupling: Coupling,
    pub economics: EconomicsModel,
    pub solver: SolverConfig,
    pub collect_trace: bool,
}

impl DropContext {
    /// Operator cell count implied by the scenario config (sectors for
    /// suburban macro sites).
    pub fn operator_cells(&self) -> usize {
        match self.scenario.environment {
            Environment::Urban => self.scenario.n_operator_sites,
            Environment::Suburban => 3 * self.scenario.n_operator_sites,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DropResult {
    pub seed: u64,
    pub per_ms_rate_bps: Vec<f64>,
    pub per_bs_rate_bps: Vec<f64>,
    /// Total rate carried over third-party backhaul, bits/s.
    pub femto_backhaul_used_bps: f64,
    /// Rate carried by operator cells, bits/s.
    pub operator_carried_bps: f64,
    /// Net utility of the truncated (single-path) solution.
    pub net_utility: f64,
    /// Net utility of the multipath relaxation's extracted point.
    pub multipath_net_utility: f64,
    pub dual_bound: f64,
    pub solver_iters: usize,
    pub wall_time_s: f64,
    pub zero_rate_ms: usize,
    pub trace: Vec<TraceRow>,
}

impl DropResult {
    pub fn dual_gap(&self) -> f64 {
        (self.dual_bound - self.net_utility) / self.dual_bound.abs().max(1e-12)
    }
}

/// Runs the full pipeline for one seed: scenario, channel, assembly,
/// dual ascent, truncation, metrics. Deterministic given (ctx, seed).
pub fn run_drop(ctx: &DropContext, seed: u64) -> Result<DropResult> {
    let start = Instant::now();
    let operator_only = ctx.economics.price_per_mbps.is_infinite();
    let mut scenario_cfg = ctx.scenario.clone();
    scenario_cfg.radio.femto_price_per_mbps = if operator_only {
        0.0
    } else {
        ctx.economics.price_per_mbps
    };
    let scenario = generate_stochastic(&scenario_cfg, seed)?;
    let graph = build_link_graph_with(
        &scenario,
        &ctx.channel,
        GraphOptions {
            coupling: ctx.coupling,
            operator_only,
        },
        seed,
    )?;
    let problem = assemble(graph, &scenario, &ctx.economics)?;
    let out = dual_ascent(&problem, &ctx.solver, seed, ctx.collect_trace)?;
    let truncated = truncate_single_path(&out.multipath, &problem);

    let mut femto = 0.0;
    let mut operator = 0.0;
    for (j, r) in truncated.per_bs_rate_mbps.iter().enumerate() {
        if problem.graph.bs_is_femto[j] {
            femto += r;
        } else {
            operator += r;
        }
    }
    Ok(DropResult {
        seed,
        per_ms_rate_bps: truncated
            .per_ms_rate_mbps
            .iter()
            .map(|r| r * MBPS)
            .collect(),
        per_bs_rate_bps: truncated
            .per_bs_rate_mbps
            .iter()
            .map(|r| r * MBPS)
            .collect(),
        femto_backhaul_used_bps: femto * MBPS,
        operator_carried_bps: operator * MBPS,
        net_utility: truncated.net_utility,
        multipath_net_utility: out.multipath.net_utility,
        dual_bound: out.bound,
        solver_iters: out.iters,
        wall_time_s: start.elapsed().as_secs_f64(),
        zero_rate_ms: truncated.zero_rate_ms,
        trace: out.trace,
    })
}

/// Aggregate metrics over a set of drops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_drops: usize,
    pub n_ue: usize,
    /// Mean over all UEs of all drops, Mbps.
    pub mean_rate_mbps: f64,
    /// Mean over drops of the per-drop 5th-percentile UE rate, Mbps.
    pub edge_rate_mbps: f64,
    /// Geometric mean over all (floored) UE rates, Mbps.
    pub geomean_rate_mbps: f64,
    pub dual_gap_median: f64,
    pub mean_femto_backhaul_mbps: f64,
    pub mean_operator_carried_mbps: f64,
    pub mean_net_utility: f64,
}

/// Linear-interpolation percentile of a sorted sample (the `(n-1) q`
/// rank convention).
pub fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn metrics(results: &[DropResult], floor_mbps: f64) -> Summary {
    assert!(!results.is_empty(), "metrics need at least one drop");
    let mut all_rates_mbps = Vec::new();
    let mut edge_sum = 0.0;
    let mut log_sum = 0.0;
    let mut femto = 0.0;
    let mut operator = 0.0;
    let mut net = 0.0;
    let mut gaps: Vec<f64> = results.iter().map(DropResult::dual_gap).collect();
    for d in results {
        let mut rates: Vec<f64> = d.per_ms_rate_bps.iter().map(|r| r / MBPS).collect();
        rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edge_sum += percentile_linear(&rates, 0.05);
        for r in &rates {
            log_sum += r.max(floor_mbps).ln();
        }
        all_rates_mbps.extend_from_slice(&rates);
        femto += d.femto_backhaul_used_bps / MBPS;
        operator += d.operator_carried_bps / MBPS;
        net += d.net_utility;
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = results.len() as f64;
    let n_ue = all_rates_mbps.len();
    Summary {
        n_drops: results.len(),
        n_ue,
        mean_rate_mbps: all_rates_mbps.iter().sum::<f64>() / n_ue as f64,
        edge_rate_mbps: edge_sum / n,
        geomean_rate_mbps: (log_sum / n_ue as f64).exp(),
        dual_gap_median: percentile_linear(&gaps, 0.5),
        mean_femto_backhaul_mbps: femto / n,
        mean_operator_carried_mbps: operator / n,
        mean_net_utility: net / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    AdoptionRate,
    Price,
    SplitFactor,
}

impl SweepVariable {
    fn tag(self) -> u64 {
        match self {
            SweepVariable::AdoptionRate => 1,
            SweepVariable::Price => 2,
            SweepVariable::SplitFactor => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub drops_per_point: usize,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep values must be non-empty"));
        }
        if self.drops_per_point == 0 {
            return Err(Error::config("drops_per_point must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PointRow {
    pub label: String,
    pub value: f64,
    pub summary: Summary,
    pub gain_mean: f64,
    pub gain_edge: f64,
    pub gain_geomean: f64,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<PointRow>,
    /// Pooled per-UE rates (Mbps, sorted) per point, for CDF output.
    pub cdf: Vec<(String, Vec<f64>)>,
    pub results: Vec<(String, Vec<DropResult>)>,
}

/// Applies a sweep value to the base context.
fn apply_value(base: &DropContext, variable: SweepVariable, value: f64) -> DropContext {
    let mut ctx = base.clone();
    match variable {
        SweepVariable::AdoptionRate => ctx.scenario.adoption_rate = value,
        SweepVariable::Price => ctx.economics.price_per_mbps = value,
        SweepVariable::SplitFactor => {
            // Denser operator tier, no femtocells, UE population pinned
            // to the unscaled level.
            let base_cells = base.operator_cells();
            ctx.scenario.n_operator_sites =
                round_half_even(value * base.scenario.n_operator_sites as f64).max(1);
            ctx.scenario.adoption_rate = 0.0;
            ctx.scenario.ue_count_override = Some(
                base.scenario
                    .ue_count_override
                    .unwrap_or(base.scenario.ue_per_operator_cell * base_cells),
            );
        }
    }
    ctx
}

pub fn sweep(base: &DropContext, spec: &SweepSpec, base_seed: u64) -> Result<SweepOutput> {
    spec.validate()?;
    let mut jobs = Vec::new();
    let mut seen = HashSet::new();
    for (pi, &value) in spec.values.iter().enumerate() {
        let ctx = apply_value(base, spec.variable, value);
        for d in 0..spec.drops_per_point {
            let seed = derive_seed(base_seed, &[spec.variable.tag(), value.to_bits(), d as u64]);
            if !seen.insert(seed) {
                return Err(Error::model(format!(
                    "derived seed collision at value {value}, drop {d}"
                )));
            }
            jobs.push((pi, seed, ctx.clone()));
        }
    }

    let results: Result<Vec<DropResult>> = jobs
        .par_iter()
        .map(|(_, seed, ctx)| run_drop(ctx, *seed))
        .collect();
    let results = results?;

    let mut per_point: Vec<Vec<DropResult>> = (0..spec.values.len()).map(|_| Vec::new()).collect();
    for ((pi, _, _), r) in jobs.iter().zip(results) {
        per_point[*pi].push(r);
    }
    for point in &mut per_point {
        point.sort_by_key(|r| r.seed);
    }

    let summaries: Vec<Summary> = per_point
        .iter()
        .map(|rs| metrics(rs, base.economics.floor_mbps()))
        .collect();
    let baseline = baseline_index(spec, &summaries);
    let base_summary = summaries[baseline];

    let mut rows = Vec::new();
    let mut cdf = Vec::new();
    let mut out_results = Vec::new();
    for ((value, summary), drops) in spec.values.iter().zip(&summaries).zip(per_point) {
        let label = output::fmt_g6(*value);
        rows.push(PointRow {
            label: label.clone(),
            value: *value,
            summary: *summary,
            gain_mean: summary.mean_rate_mbps / base_summary.mean_rate_mbps,
            gain_edge: summary.edge_rate_mbps / base_summary.edge_rate_mbps,
            gain_geomean: summary.geomean_rate_mbps / base_summary.geomean_rate_mbps,
        });
        let mut pooled: Vec<f64> = drops
            .iter()
            .flat_map(|d| d.per_ms_rate_bps.iter().map(|r| r / MBPS))
            .collect();
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cdf.push((label.clone(), pooled));
        out_results.push((label, drops));
    }
    Ok(SweepOutput {
        rows,
        cdf,
        results: out_results,
    })
}

/// The row gains are measured against: no-femto / no-split / no-offload.
fn baseline_index(spec: &SweepSpec, _summaries: &[Summary]) -> usize {
    let pick = |pred: &dyn Fn(f64) -> bool| spec.values.iter().position(|v| pred(*v)).unwrap_or(0);
    match spec.variable {
        SweepVariable::AdoptionRate => pick(&|v| v == 0.0),
        SweepVariable::Price => pick(&|v: f64| v.is_infinite()),
        SweepVariable::SplitFactor => pick(&|v| v == 1.0),
    }
}

#[derive(Debug, Clone)]
pub struct BackhaulRow {
    /// "cell_splitting" or "femto_offload".
    pub method: &'static str,
    pub param: f64,
    pub additional_backhaul_mbps: f64,
    pub geomean_rate_mbps: f64,
}

#[derive(Debug)]
pub struct BackhaulOutput {
    pub baseline: Summary,
    pub rows: Vec<BackhaulRow>,
}

/// Cell splitting vs. femto offload: capacity (geometric mean rate) as
/// a function of the additional backhaul each method needs. All points
/// of both curves share one seed set.
pub fn compare_backhaul(
    base: &DropContext,
    split_factors: &[f64],
    prices_desc: &[f64],
    adoption: f64,
    drops: usize,
    base_seed: u64,
) -> Result<BackhaulOutput> {
    if split_factors.iter().any(|a| *a < 1.0) {
        return Err(Error::config("split factors must be >= 1"));
    }
    if prices_desc.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::config("price grid must be descending"));
    }
    if drops == 0 {
        return Err(Error::config("drops must be >= 1"));
    }
    let seeds: Vec<u64> = (0..drops)
        .map(|d| derive_seed(base_seed, &[9, d as u64]))
        .collect();

    let run_point = |ctx: &DropContext| -> Result<Vec<DropResult>> {
        let mut rs: Vec<DropResult> = seeds
            .par_iter()
            .map(|s| run_drop(ctx, *s))
            .collect::<Result<_>>()?;
        rs.sort_by_key(|r| r.seed);
        Ok(rs)
    };

    // Operator-only baseline (alpha = 1, no femtos).
    let baseline_ctx = apply_value(base, SweepVariable::SplitFactor, 1.0);
    let floor = base.economics.floor_mbps();
    let baseline = metrics(&run_point(&baseline_ctx)?, floor);

    let mut rows = Vec::new();
    for &alpha in split_factors {
        let ctx = apply_value(base, SweepVariable::SplitFactor, alpha);
        let s = metrics(&run_point(&ctx)?, floor);
        rows.push(BackhaulRow {
            method: "cell_splitting",
            param: alpha,
            additional_backhaul_mbps: s.mean_operator_carried_mbps
                - baseline.mean_operator_carried_mbps,
            geomean_rate_mbps: s.geomean_rate_mbps,
        });
    }
    for &price in prices_desc {
        let mut ctx = base.clone();
        ctx.scenario.adoption_rate = adoption;
        ctx.scenario.ue_count_override = Some(
            base.scenario
                .ue_count_override
                .unwrap_or(base.scenario.ue_per_operator_cell * base.operator_cells()),
        );
        ctx.economics.price_per_mbps = price;
        let s = metrics(&run_point(&ctx)?, floor);
        rows.push(BackhaulRow {
            method: "femto_offload",
            param: price,
            additional_backhaul_mbps: s.mean_femto_backhaul_mbps,
            geomean_rate_mbps: s.geomean_rate_mbps,
        });
    }
    Ok(BackhaulOutput { baseline, rows })
}
