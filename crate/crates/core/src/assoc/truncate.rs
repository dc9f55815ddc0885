//! Single-path truncation: keep each mobile's largest-rate link, zero
//! the rest, recompute interference exactly, and re-derive rates with
//! per-cell backhaul apportioned to the retained users proportionally
//! to their pre-truncation rates (surplus redistributed).

use super::problem::Problem;
use super::Solution;

/// Truncates a multipath solution to one serving cell per mobile.
/// Ties break to the lower BS id; already-single-path inputs are fixed
/// points up to floating-point noise.
pub fn truncate_single_path(sol: &Solution, problem: &Problem) -> Solution {
    let mut out = truncate_no_feas(sol, problem);
    let (feasibility, _) = problem.feasibility(&out.theta);
    out.feasibility = feasibility;
    out
}

/// Truncation without the final feasibility sweep (the solver calls
/// this once per iteration and scores candidates by net utility only).
pub(crate) fn truncate_no_feas(sol: &Solution, problem: &Problem) -> Solution {
    let lay = problem.layout;
    let n_links = lay.n_links;

    // Kept link per MS: argmax pre-truncation rate, ties to lower BS id
    // (candidate lists are ascending in BS id, so strict `>` suffices).
    let mut keep = vec![false; n_links];
    for links in &problem.graph.gamma_ms {
        let mut best: Option<(usize, f64)> = None;
        for &l in links {
            let r = sol.theta[lay.r(l)];
            match best {
                Some((_, br)) if r <= br => {}
                _ => best = Some((l, r)),
            }
        }
        if let Some((l, _)) = best {
            keep[l] = true;
        }
    }

    let mut theta = vec![0.0; lay.len()];
    for l in 0..n_links {
        if keep[l] {
            theta[lay.w(l)] = sol.theta[lay.w(l)];
        }
    }
    let loads = problem.bs_loads_mhz(&theta);
    let z = problem.interference_norm(&loads);
    for l in 0..n_links {
        theta[lay.z(l)] = z[l];
    }

    // Per-cell rates: what the kept bandwidth supports, rationed into
    // the backhaul cap.
    let mut per_bs = vec![0.0; problem.n_bs()];
    for j in 0..problem.n_bs() {
        let retained: Vec<usize> = problem.graph.gamma_bs[j]
            .iter()
            .copied()
            .filter(|&l| keep[l])
            .collect();
        if retained.is_empty() {
            continue;
        }
        let demand: Vec<f64> = retained
            .iter()
            .map(|&l| theta[lay.w(l)] * problem.rho(l, theta[lay.z(l)]))
            .collect();
        let weights: Vec<f64> = retained.iter().map(|&l| sol.theta[lay.r(l)]).collect();
        let granted = ration(&demand, &weights, problem.cap_mbps[j]);
        for (k, &l) in retained.iter().enumerate() {
            theta[lay.r(l)] = granted[k];
            per_bs[j] += granted[k];
        }
        theta[lay.rbs(j)] = per_bs[j];
    }

    let mut per_ms = vec![0.0; problem.n_ms()];
    let mut zero_rate_ms = 0;
    for i in 0..problem.n_ms() {
        per_ms[i] = problem.graph.gamma_ms[i]
            .iter()
            .map(|&l| theta[lay.r(l)])
            .sum();
        theta[lay.rms(i)] = per_ms[i];
        if per_ms[i] <= 0.0 {
            zero_rate_ms += 1;
        }
    }

    let net = problem.net_utility(&per_ms, &per_bs);
    Solution {
        theta,
        net_utility: net,
        feasibility: 0.0,
        single_path: true,
        per_ms_rate_mbps: per_ms,
        per_bs_rate_mbps: per_bs,
        zero_rate_ms,
    }
}

/// Grants `min(demand, share)` with shares proportional to `weights`
/// and surplus redistributed until stable. Zero total weight falls back
/// to equal weighting.
pub(crate) fn ration(demand: &[f64], weights: &[f64], cap: f64) -> Vec<f64> {
    let n = demand.len();
    let total: f64 = demand.iter().sum();
    if cap.is_infinite() || total <= cap {
        return demand.to_vec();
    }
    let mut granted = vec![0.0; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut remaining = cap;
    loop {
        let wsum: f64 = active.iter().map(|&k| weights[k]).sum();
        let share = |k: usize| {
            if wsum > 0.0 {
                remaining * weights[k] / wsum
            } else {
                remaining / active.len() as f64
            }
        };
        let satisfied: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&k| demand[k] <= share(k))
            .collect();
        if satisfied.is_empty() {
            for &k in &active {
                granted[k] = share(k);
            }
            return granted;
        }
        for &k in &satisfied {
            granted[k] = demand[k];
            remaining -= demand[k];
        }
        active.retain(|k| !satisfied.contains(k));
        if active.is_empty() {
            return granted;
        }
        remaining = remaining.max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc::{assemble, dual_ascent, SolverConfig};
    use crate::channel::{build_link_graph, ChannelParams, Coupling};
    use crate::economics::EconomicsModel;
    use crate::geometry::Area;
    use crate::scenario::{generate_stochastic, Environment, ScenarioConfig};

    fn problem(seed: u64, n_ops: usize, adoption: f64, n_ue: usize) -> Problem {
        let mut sc = ScenarioConfig::new(Environment::Urban, Area::new(500.0, 500.0, true));
        sc.n_operator_sites = n_ops;
        sc.ap_count = 20;
        sc.adoption_rate = adoption;
        sc.ue_count_override = Some(n_ue);
        let s = generate_stochastic(&sc, seed).unwrap();
        let g = build_link_graph(&s, &ChannelParams::default(), Coupling::CoChannel, seed).unwrap();
        assemble(g, &s, &EconomicsModel::default()).unwrap()
    }

    #[test]
    fn keeps_the_largest_rate_link() {
        let p = problem(1, 2, 0.0, 1);
        let lay = p.layout;
        assert!(p.n_links() >= 2);
        let mut sol_theta = vec![0.0; lay.len()];
        // Two links for MS 0: rates 2 and 3; bandwidth on both.
        let links = p.graph.gamma_ms[0].clone();
        sol_theta[lay.r(links[0])] = 2.0;
        sol_theta[lay.r(links[1])] = 3.0;
        sol_theta[lay.w(links[0])] = 1.0;
        sol_theta[lay.w(links[1])] = 1.0;
        let sol = Solution {
            theta: sol_theta,
            net_utility: 0.0,
            feasibility: 0.0,
            single_path: false,
            per_ms_rate_mbps: vec![5.0],
            per_bs_rate_mbps: vec![2.0, 3.0],
            zero_rate_ms: 0,
        };
        let t = truncate_single_path(&sol, &p);
        assert!(t.single_path);
        assert_eq!(t.theta[lay.r(links[0])], 0.0);
        assert_eq!(t.theta[lay.w(links[0])], 0.0);
        assert!(t.theta[lay.r(links[1])] > 0.0);
    }

    #[test]
    fn truncation_is_idempotent() {
        for seed in 0..5u64 {
            let p = problem(seed, 2, 0.5, 4);
            let out = dual_ascent(&p, &SolverConfig::default(), seed, false).unwrap();
            let once = truncate_single_path(&out.multipath, &p);
            let twice = truncate_single_path(&once, &p);
            for (a, b) in once.theta.iter().zip(&twice.theta) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            }
            assert!((once.net_utility - twice.net_utility).abs() < 1e-9);
        }
    }

    #[test]
    fn truncated_solutions_stay_feasible() {
        for seed in 0..20u64 {
            let p = problem(seed, 2, 0.5, 5);
            let out = dual_ascent(&p, &SolverConfig::default(), seed, false).unwrap();
            let t = truncate_single_path(&out.multipath, &p);
            assert!(
                t.feasibility <= 1e-9,
                "seed {seed}: violation {}",
                t.feasibility
            );
            // Every MS draws from at most one cell.
            let lay = p.layout;
            for links in &p.graph.gamma_ms {
                let active = links.iter().filter(|&&l| t.theta[lay.r(l)] > 0.0).count();
                assert!(active <= 1);
            }
            // Backhaul caps hold.
            for j in 0..p.n_bs() {
                assert!(t.per_bs_rate_mbps[j] <= p.cap_mbps[j] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rationing_redistributes_surplus() {
        // Demands 3 and 8 against cap 10 with equal weights: the light
        // user keeps 3, the heavy one takes the remaining 7.
        let granted = ration(&[3.0, 8.0], &[5.0, 5.0], 10.0);
        assert!((granted[0] - 3.0).abs() < 1e-12);
        assert!((granted[1] - 7.0).abs() < 1e-12);
        // Under no cap pressure everyone gets their demand.
        assert_eq!(ration(&[3.0, 8.0], &[1.0, 1.0], 100.0), vec![3.0, 8.0]);
        // Zero weights fall back to equal split.
        let granted = ration(&[10.0, 10.0], &[0.0, 0.0], 10.0);
        assert!((granted[0] - 5.0).abs() < 1e-12);
        assert!((granted[1] - 5.0).abs() < 1e-12);
    }
}
