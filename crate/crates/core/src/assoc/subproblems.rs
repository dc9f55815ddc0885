//! Separable subproblems of the augmented dual maximization.
//!
//! With a quadratic prox about the previous iterate, the per-link rate,
//! per-BS rate and per-MS rate subproblems have closed forms; the
//! (bandwidth, interference) pair is solved by an outer log-grid search
//! in z with the inner bandwidth problem closed-form, polished by one
//! golden-section refinement between the winning grid neighbors.
//!
//! The `bound_*` variants drop the prox and maximize over explicit
//! boxes; those maxima are exact (each objective is piecewise convex in
//! z, so segment endpoints suffice), which keeps the weak-duality bound
//! valid.

/// `argmin phi(r) + q r` over `r >= 0`, `phi(r) = tau/2 (r - prev)^2`.
#[inline]
pub fn prox_r(prev: f64, q: f64, tau: f64) -> f64 {
    (prev - q / tau).max(0.0)
}

/// `argmin p r + phi(r) + lam r` over `0 <= r <= cap` (cap may be inf).
#[inline]
pub fn prox_rbs(prev: f64, price_plus_lam: f64, tau: f64, cap: f64) -> f64 {
    (prev - price_plus_lam / tau).clamp(0.0, cap)
}

/// `argmax log r - phi(r) - lam r` over `r > 0`: the positive root of
/// `tau r^2 + (lam - tau prev) r - 1 = 0`, evaluated stably.
#[inline]
pub fn prox_rms(prev: f64, lam: f64, tau: f64) -> f64 {
    let b = lam - tau * prev;
    let disc = (b * b + 4.0 * tau).sqrt();
    if b > 0.0 {
        2.0 / (b + disc)
    } else {
        (disc - b) / (2.0 * tau)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WzArgs {
    pub mu_r: f64,
    pub lam_w: f64,
    pub lam_z: f64,
    pub w_prev: f64,
    pub z_prev: f64,
    pub tau: f64,
    pub w_max: f64,
}

/// Inner bandwidth optimum and joint objective at a fixed z.
#[inline]
fn wz_at(z: f64, rho_z: f64, a: &WzArgs) -> (f64, f64) {
    let w = (a.w_prev + (a.mu_r * rho_z - a.lam_w) / a.tau).clamp(0.0, a.w_max);
    let dw = w - a.w_prev;
    let dz = z - a.z_prev;
    let obj = a.mu_r * w * rho_z - a.lam_z * z - a.lam_w * w - 0.5 * a.tau * (dw * dw + dz * dz);
    (w, obj)
}

/// Maximizes `mu_r w rho(z) - lam_z z - lam_w w - phi(w, z)` over
/// `w in [0, w_max]`, `z` in the grid span. `rho_row[t]` must equal
/// `rho(z_grid[t])`.
pub fn prox_wz(
    args: &WzArgs,
    z_grid: &[f64],
    rho_row: &[f64],
    rho: impl Fn(f64) -> f64,
) -> (f64, f64) {
    debug_assert_eq!(z_grid.len(), rho_row.len());
    let mut best_t = 0usize;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0); // (obj, w, z)
    for (t, (&z, &r)) in z_grid.iter().zip(rho_row).enumerate() {
        let (w, obj) = wz_at(z, r, args);
        if obj > best.0 {
            best = (obj, w, z);
            best_t = t;
        }
    }
    // Golden-section polish between the neighbors of the winning point.
    let lo = z_grid[best_t.saturating_sub(1)];
    let hi = z_grid[(best_t + 1).min(z_grid.len() - 1)];
    if hi > lo {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = wz_at(x1, rho(x1), args).1;
        let mut f2 = wz_at(x2, rho(x2), args).1;
        for _ in 0..25 {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = wz_at(x1, rho(x1), args).1;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = wz_at(x2, rho(x2), args).1;
            }
        }
        let z_ref = if f1 >= f2 { x1 } else { x2 };
        let (w_ref, obj_ref) = wz_at(z_ref, rho(z_ref), args);
        if obj_ref > best.0 {
            best = (obj_ref, w_ref, z_ref);
        }
    }
    (best.1, best.2)
}

/// Prox-free maximum of `-(q) r` over `[0, cap]`.
#[inline]
pub fn bound_linear(q: f64, cap: f64) -> (f64, f64) {
    if q < 0.0 {
        (-q * cap, cap)
    } else {
        (0.0, 0.0)
    }
}

/// Prox-free maximum of `log(max(r, floor)) - lam r` over `[0, cap]`.
pub fn bound_rms(lam: f64, cap: f64, floor: f64) -> (f64, f64) {
    let eval = |r: f64| (r.max(floor)).ln() - lam * r;
    let mut best = (eval(0.0), 0.0);
    for cand in [floor.min(cap), cap] {
        let v = eval(cand);
        if v > best.0 {
            best = (v, cand);
        }
    }
    if lam > 0.0 {
        let interior = (1.0 / lam).clamp(floor, cap);
        let v = eval(interior);
        if v > best.0 {
            best = (v, interior);
        }
    }
    best
}

/// Prox-free maximum of `mu_r w rho(z) - lam_z z - lam_w w` over
/// `w in [0, w_max]`, `z in [0, z_hi]`. Exact: the objective after
/// maximizing w is piecewise convex in z with breakpoints where the
/// rho cap ends and where `mu_r rho(z) = lam_w`.
pub fn bound_wz(
    mu_r: f64,
    lam_w: f64,
    lam_z: f64,
    w_max: f64,
    snr_eff: f64,
    rho_max: f64,
    z_hi: f64,
) -> (f64, f64, f64) {
    let (keep_val, keep_z) = bound_wz_loaded(mu_r, lam_w, lam_z, w_max, snr_eff, rho_max, z_hi);
    let (idle_val, idle_z) = bound_wz_idle(lam_z, z_hi);
    if keep_val > idle_val {
        (keep_val, w_max, keep_z)
    } else {
        (idle_val, 0.0, idle_z)
    }
}

/// The `w = w_max` branch of the (w, z) bound subproblem (may be
/// negative). Candidates: both ends, the end of the rho cap, and the
/// crossing where the bandwidth price eats the rate reward; between
/// them the objective is convex in z.
pub fn bound_wz_loaded(
    mu_r: f64,
    lam_w: f64,
    lam_z: f64,
    w_max: f64,
    snr_eff: f64,
    rho_max: f64,
    z_hi: f64,
) -> (f64, f64) {
    let rho = |z: f64| (1.0 + snr_eff / (1.0 + z)).log2().min(rho_max);
    let mut cands = [0.0f64, z_hi, f64::NAN, f64::NAN];
    let mut n = 2;
    let cap_end = snr_eff / (2f64.powf(rho_max) - 1.0) - 1.0;
    if cap_end > 0.0 && cap_end < z_hi {
        cands[n] = cap_end;
        n += 1;
    }
    if mu_r > 0.0 && lam_w > 0.0 {
        let t = lam_w / mu_r;
        let denom = 2f64.powf(t) - 1.0;
        if denom > 0.0 {
            let cross = snr_eff / denom - 1.0;
            if cross > 0.0 && cross < z_hi {
                cands[n] = cross;
                n += 1;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &z in &cands[..n] {
        let val = w_max * (mu_r * rho(z) - lam_w) - lam_z * z;
        if val > best.0 {
            best = (val, z);
        }
    }
    best
}

/// The `w = 0` branch: only the interference reward `-lam_z z` is left.
#[inline]
pub fn bound_wz_idle(lam_z: f64, z_hi: f64) -> (f64, f64) {
    if lam_z < 0.0 {
        (-lam_z * z_hi, z_hi)
    } else {
        (0.0, 0.0)
    }
}
