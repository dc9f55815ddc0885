//! Property tests for the numeric kernels.

use obsim_core::assoc::subproblems::{prox_r, prox_rbs, prox_rms};
use obsim_core::experiments::output::fmt_g6;
use obsim_core::geometry::{wrap_angle_deg, Area};
use proptest::prelude::*;

proptest! {
    // First-order conditions: interior solutions are stationary, box
    // solutions sit on their boundary.
    #[test]
    fn prox_r_first_order(prev in 0.0..100.0f64, q in -20.0..20.0f64, tau in 0.05..10.0f64) {
        let r = prox_r(prev, q, tau);
        if r > 0.0 {
            let grad = -q - tau * (r - prev);
            prop_assert!(grad.abs() < 1e-8);
        } else {
            prop_assert!(-q - tau * (0.0 - prev) <= 1e-8);
        }
    }

    #[test]
    fn prox_rbs_first_order(
        prev in 0.0..100.0f64,
        q in -20.0..20.0f64,
        tau in 0.05..10.0f64,
        cap in 0.1..80.0f64,
    ) {
        let r = prox_rbs(prev, q, tau, cap);
        prop_assert!((0.0..=cap).contains(&r));
        let grad = -q - tau * (r - prev);
        if r > 0.0 && r < cap {
            prop_assert!(grad.abs() < 1e-8);
        } else if r == 0.0 {
            prop_assert!(grad <= 1e-8);
        } else {
            prop_assert!(grad >= -1e-8);
        }
    }

    #[test]
    fn prox_rms_is_stationary_and_positive(
        prev in 0.0..100.0f64,
        lam in -5.0..50.0f64,
        tau in 0.05..10.0f64,
    ) {
        let r = prox_rms(prev, lam, tau);
        prop_assert!(r > 0.0);
        let resid = 1.0 / r - tau * (r - prev) - lam;
        prop_assert!(resid.abs() < 1e-8, "residual {resid}");
    }

    // Torus distance is a symmetric pseudometric bounded by the half
    // diagonal.
    #[test]
    fn torus_distance_symmetric_and_bounded(
        ax in 0.0..1000.0f64, ay in 0.0..800.0f64,
        bx in 0.0..1000.0f64, by in 0.0..800.0f64,
    ) {
        let area = Area::new(1000.0, 800.0, true);
        let d1 = area.distance((ax, ay), (bx, by));
        let d2 = area.distance((bx, by), (ax, ay));
        prop_assert!((d1 - d2).abs() < 1e-9);
        let half_diag = (500.0f64 * 500.0 + 400.0 * 400.0).sqrt();
        prop_assert!(d1 <= half_diag + 1e-9);
    }

    #[test]
    fn wrapped_angles_stay_in_range(deg in -1e4..1e4f64) {
        let w = wrap_angle_deg(deg);
        prop_assert!(w > -180.0 && w <= 180.0);
        // Same direction modulo full turns.
        let diff = (deg - w).rem_euclid(360.0);
        prop_assert!(diff.abs() < 1e-6 || (diff - 360.0).abs() < 1e-6);
    }

    // The CSV float format keeps 6 significant digits.
    #[test]
    fn fmt_g6_parses_back_close(x in prop::num::f64::NORMAL) {
        prop_assume!(x.abs() > 1e-300 && x.abs() < 1e300);
        let s = fmt_g6(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!(
            ((back - x) / x).abs() < 1e-5,
            "{x} -> {s} -> {back}"
        );
    }
}
