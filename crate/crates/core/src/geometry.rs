//! Planar geometry: the simulation rectangle, torus (wrap-around)
//! distances and bearings, and hexagonal grid placement.

use serde::{Deserialize, Serialize};

/// Simulation rectangle `[0, width) x [0, height)` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
    /// When set, all distances are torus distances (minimum over the 9
    /// periodic images of the rectangle).
    pub wrap_around: bool,
}

impl Area {
    pub fn new(width_m: f64, height_m: f64, wrap_around: bool) -> Self {
        Area {
            width_m,
            height_m,
            wrap_around,
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= 0.0 && p.0 < self.width_m && p.1 >= 0.0 && p.1 < self.height_m
    }

    /// Displacement from `a` to `b` using the nearest periodic image.
    pub fn delta(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        let mut dx = b.0 - a.0;
        let mut dy = b.1 - a.1;
        if self.wrap_around {
            let (mut best, mut best_d2) = ((dx, dy), dx * dx + dy * dy);
            for ix in [-1.0, 0.0, 1.0] {
                for iy in [-1.0, 0.0, 1.0] {
                    let cx = dx + ix * self.width_m;
                    let cy = dy + iy * self.height_m;
                    let d2 = cx * cx + cy * cy;
                    if d2 < best_d2 {
                        best = (cx, cy);
                        best_d2 = d2;
                    }
                }
            }
            dx = best.0;
            dy = best.1;
        }
        (dx, dy)
    }

    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = self.delta(a, b);
        (dx * dx + dy * dy).sqrt()
    }

    /// Bearing from `a` to `b` in degrees, measured counter-clockwise from
    /// the +x axis, in (-180, 180].
    pub fn bearing_deg(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = self.delta(a, b);
        let deg = dy.atan2(dx).to_degrees();
        wrap_angle_deg(deg)
    }
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_angle_deg(mut deg: f64) -> f64 {
    deg %= 360.0;
    if deg <= -180.0 {
        deg += 360.0;
    } else if deg > 180.0 {
        deg -= 360.0;
    }
    deg
}

/// Positions of `n_sites` on a rows-by-columns grid with every other row
/// shifted half a column, the standard flattened hexagonal layout. Rows
/// and columns are chosen from the factorization of `n_sites` whose cell
/// aspect is closest to the ideal `dy/dx = sqrt(3)/2`; the grid becomes
/// an exact triangular lattice on the torus when the row count is even
/// and the area aspect matches.
pub fn hex_grid(area: &Area, n_sites: usize) -> Vec<(f64, f64)> {
    let (cols, rows) = best_hex_factorization(area, n_sites);
    let dx = area.width_m / cols as f64;
    let dy = area.height_m / rows as f64;
    let mut out = Vec::with_capacity(n_sites);
    for r in 0..rows {
        let shift = if r % 2 == 1 { 0.5 * dx } else { 0.0 };
        for c in 0..cols {
            let x = (c as f64 + 0.5) * dx + shift;
            let y = (r as f64 + 0.5) * dy;
            out.push((x % area.width_m, y));
        }
    }
    out
}

/// Inter-site distance implied by the grid (horizontal neighbor spacing).
pub fn hex_isd(area: &Area, n_sites: usize) -> f64 {
    let (cols, _) = best_hex_factorization(area, n_sites);
    area.width_m / cols as f64
}

fn best_hex_factorization(area: &Area, n_sites: usize) -> (usize, usize) {
    let ideal = 3.0f64.sqrt() / 2.0;
    let mut best = (n_sites, 1);
    let mut best_err = f64::INFINITY;
    for rows in 1..=n_sites {
        if !n_sites.is_multiple_of(rows) {
            continue;
        }
        let cols = n_sites / rows;
        let dx = area.width_m / cols as f64;
        let dy = area.height_m / rows as f64;
        let err = (dy / dx - ideal).abs();
        if err < best_err {
            best_err = err;
            best = (cols, rows);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_takes_nearest_image() {
        let area = Area::new(1000.0, 1000.0, true);
        assert!((area.distance((10.0, 500.0), (990.0, 500.0)) - 20.0).abs() < 1e-12);
        assert!((area.distance((500.0, 10.0), (500.0, 990.0)) - 20.0).abs() < 1e-12);
        // Corner wrap.
        let d = area.distance((5.0, 5.0), (995.0, 995.0));
        assert!((d - (200.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_wrap_is_euclidean() {
        let area = Area::new(1000.0, 1000.0, false);
        assert!((area.distance((10.0, 500.0), (990.0, 500.0)) - 980.0).abs() < 1e-12);
    }

    #[test]
    fn bearing_points_at_target() {
        let area = Area::new(1000.0, 1000.0, false);
        assert!((area.bearing_deg((0.0, 0.0), (10.0, 0.0)) - 0.0).abs() < 1e-12);
        assert!((area.bearing_deg((0.0, 0.0), (0.0, 10.0)) - 90.0).abs() < 1e-12);
        assert!((area.bearing_deg((10.0, 10.0), (0.0, 0.0)) + 135.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle_deg(180.0), 180.0);
        assert_eq!(wrap_angle_deg(-180.0), 180.0);
        assert!((wrap_angle_deg(350.0) + 10.0).abs() < 1e-12);
        assert!((wrap_angle_deg(-350.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn hex_grid_produces_requested_count_inside_area() {
        let area = Area::new(1000.0, 1000.0, true);
        for n in [1, 3, 4, 9, 16] {
            let pts = hex_grid(&area, n);
            assert_eq!(pts.len(), n);
            assert!(pts.iter().all(|&p| area.contains(p)));
        }
    }

    #[test]
    fn hex_grid_is_triangular_lattice_when_aspect_matches() {
        // 4 columns x 4 rows with dy = dx*sqrt(3)/2 exactly.
        let dx = 250.0;
        let area = Area::new(4.0 * dx, 4.0 * dx * 3.0f64.sqrt() / 2.0, true);
        let pts = hex_grid(&area, 16);
        for &p in &pts {
            let mut dists: Vec<f64> = pts
                .iter()
                .filter(|&&q| q != p)
                .map(|&q| area.distance(p, q))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for d in &dists[..6] {
                assert!((d - dx).abs() / dx < 1e-9, "neighbor at {d}, expected {dx}");
            }
            assert!(dists[6] > dx * 1.5);
        }
    }
}
