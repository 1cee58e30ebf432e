//! Positivity-set geometry: inner/outer radii, flatness, and the radial
//! minorant.
//!
//! The discrete positivity set at level θ is `S = {cells: u > θ}`.  The
//! outer radius is the largest center distance in `S` plus half a cell;
//! the inner radius is the smallest center distance *outside* `S` minus
//! half a cell, clamped into `[0, r_out]` so degenerate one-cell sets
//! stay consistent.  Flatness `1 − r_in/r_out` is zero exactly when the
//! boundary is a sphere about the origin (up to grid resolution).

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};
use crate::grid::ScalarField;
use crate::radial::RadialField;

/// Inner/outer radii and flatness of one snapshot at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGeometry {
    pub time: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub flatness: f64,
    pub level: f64,
    pub extinct: bool,
}

impl BoundaryGeometry {
    fn extinct_at(time: f64, level: f64) -> Self {
        Self { time, r_in: 0.0, r_out: 0.0, flatness: 0.0, level, extinct: true }
    }
}

/// Measure the positivity set of a Cartesian snapshot.
pub fn boundary_geometry(field: &ScalarField, level: f64) -> BoundaryGeometry {
    let grid = field.grid();
    let n = grid.cells_per_axis();
    let half_cell = 0.5 * grid.spacing();

    let mut max_inside: Option<f64> = None;
    let mut min_outside = f64::INFINITY;
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = grid.cell_center(ix, iy);
            let dist = x.hypot(y);
            if field.value(ix, iy) > level {
                max_inside = Some(max_inside.map_or(dist, |m: f64| m.max(dist)));
            } else {
                min_outside = min_outside.min(dist);
            }
        }
    }

    match max_inside {
        None => BoundaryGeometry::extinct_at(field.time(), level),
        Some(max_in) => {
            let r_out = max_in + half_cell;
            let r_in = (min_outside - half_cell).clamp(0.0, r_out);
            BoundaryGeometry {
                time: field.time(),
                r_in,
                r_out,
                flatness: if r_out > 0.0 { 1.0 - r_in / r_out } else { 0.0 },
                level,
                extinct: false,
            }
        }
    }
}

/// Radial counterpart: the same definitions restricted to nodes.
pub fn boundary_geometry_radial(field: &RadialField, level: f64) -> BoundaryGeometry {
    let h = field.spacing();
    let half_cell = 0.5 * h;
    let mut max_inside: Option<f64> = None;
    let mut min_outside = f64::INFINITY;
    for (i, &v) in field.values().iter().enumerate() {
        let r = i as f64 * h;
        if v > level {
            max_inside = Some(max_inside.map_or(r, |m: f64| m.max(r)));
        } else {
            min_outside = min_outside.min(r);
        }
    }
    match max_inside {
        None => BoundaryGeometry::extinct_at(field.time(), level),
        Some(max_in) => {
            let r_out = max_in + half_cell;
            let r_in = (min_outside - half_cell).clamp(0.0, r_out);
            BoundaryGeometry {
                time: field.time(),
                r_in,
                r_out,
                flatness: if r_out > 0.0 { 1.0 - r_in / r_out } else { 0.0 },
                level,
                extinct: false,
            }
        }
    }
}

/// Smallest angular sample count per circle.
const MIN_ANGULAR_SAMPLES: usize = 64;

/// The maximal radial function below the field: for each radius, the
/// minimum of bilinear samples over at least `max(64, ⌈2πr/h⌉)` equally
/// spaced angles.
pub fn radial_minorant(field: &ScalarField, radial_samples: usize) -> Result<RadialField> {
    if radial_samples < MIN_ANGULAR_SAMPLES {
        return Err(FlameError::InvalidParameter(format!(
            "radial_samples must be at least {MIN_ANGULAR_SAMPLES}, got {radial_samples}"
        )));
    }
    let grid = field.grid();
    let h = grid.spacing();
    // keep every sample circle strictly inside the domain square
    let r_max = grid.half_width() - h;
    let mut values = Vec::with_capacity(radial_samples);
    let dr = r_max / (radial_samples - 1) as f64;
    for j in 0..radial_samples {
        let r = j as f64 * dr;
        values.push(angular_minimum(field, r, 1));
    }
    RadialField::from_values(2, r_max, field.time(), values)
}

/// Minimum of bilinear samples on the circle of radius `r`;
/// `oversample` multiplies the uniform angular count (used by test
/// oracles).
///
/// Between cell edges the interpolant is smooth, but its gradient kinks
/// where the circle crosses a cell edge, so the circle is additionally
/// sampled at every edge-crossing angle; the sampled minimum is then
/// second-order accurate in the arc gap.
pub fn angular_minimum(field: &ScalarField, r: f64, oversample: usize) -> f64 {
    if r == 0.0 {
        return field.sample(0.0, 0.0).unwrap_or(0.0);
    }
    let h = field.grid().spacing();
    let count = (8 * (2.0 * std::f64::consts::PI * r / h).ceil() as usize)
        .max(4 * MIN_ANGULAR_SAMPLES)
        * oversample.max(1);
    let mut min = f64::INFINITY;
    let mut probe = |theta: f64| {
        let (x, y) = (r * theta.cos(), r * theta.sin());
        if let Ok(v) = field.sample(x, y) {
            min = min.min(v);
        }
    };
    for k in 0..count {
        probe(2.0 * std::f64::consts::PI * k as f64 / count as f64);
    }
    // bilinear patches are delimited by the lines through cell centers;
    // probe every crossing of those crease lines
    let grid = field.grid();
    let n = grid.cells_per_axis();
    let c = (n - 1) as f64 / 2.0;
    for k in 0..n {
        let e = (k as f64 - c) * h;
        if e.abs() >= r {
            continue;
        }
        let a = (e / r).acos();
        probe(a);
        probe(-a);
        let b = (e / r).asin();
        probe(b);
        probe(std::f64::consts::PI - b);
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> GridSpec {
        GridSpec::new(1.5, 128).unwrap()
    }

    /// Exhaustive oracle recomputing both radii from scratch.
    fn geometry_oracle(field: &ScalarField, level: f64) -> (Option<f64>, f64) {
        let g = field.grid();
        let n = g.cells_per_axis();
        let mut max_in = None;
        let mut min_out = f64::INFINITY;
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = g.cell_center(ix, iy);
                let d = (x * x + y * y).sqrt();
                if field.value(ix, iy) > level {
                    max_in = Some(max_in.map_or(d, |m: f64| m.max(d)));
                } else if d < min_out {
                    min_out = d;
                }
            }
        }
        (max_in, min_out)
    }

    #[test]
    fn radial_cap_has_round_boundary() {
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| 0.5 * (1.0 - x * x - y * y).max(0.0));
        // level well below the values at |x| = 0.9: u(0.9) = 0.095
        let geo = boundary_geometry(&f, 0.01);
        let h = grid().spacing();
        let expect = (1.0 - 0.02f64).sqrt(); // where 0.5(1-r²) = 0.01
        assert!((geo.r_out - expect).abs() < 2.0 * h, "r_out {}", geo.r_out);
        assert!((geo.r_in - expect).abs() < 2.0 * h, "r_in {}", geo.r_in);
        assert!(geo.flatness < 2.5 * h / geo.r_out);
        assert!(!geo.extinct);
    }

    #[test]
    fn star_shaped_set_measures_cosine_extremes() {
        // positive exactly on |x| < 1 + 0.1 cos 6θ
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| {
            let r = x.hypot(y);
            let th = y.atan2(x);
            if r < 1.0 + 0.1 * (6.0 * th).cos() {
                1.0
            } else {
                0.0
            }
        });
        let geo = boundary_geometry(&f, 0.5);
        let h = grid().spacing();
        assert!((geo.r_in - 0.9).abs() < 2.0 * h, "r_in {}", geo.r_in);
        assert!((geo.r_out - 1.1).abs() < 2.0 * h, "r_out {}", geo.r_out);
        assert!((geo.flatness - (1.0 - 0.9 / 1.1)).abs() < 3.0 * h, "flatness {}", geo.flatness);
    }

    #[test]
    fn random_masks_match_exhaustive_oracle() {
        let g = grid();
        let n = g.cells_per_axis();
        let mut state = 0xabcdef01u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..20 {
            let mut values = vec![0.0; n * n];
            for v in values.iter_mut() {
                *v = next();
            }
            let f = ScalarField::from_values(g, 0.0, values).unwrap();
            let level = 0.6;
            let geo = boundary_geometry(&f, level);
            let (max_in, min_out) = geometry_oracle(&f, level);
            let h = g.spacing();
            match max_in {
                None => assert!(geo.extinct),
                Some(mi) => {
                    assert_eq!(geo.r_out, mi + 0.5 * h);
                    assert_eq!(geo.r_in, (min_out - 0.5 * h).clamp(0.0, geo.r_out));
                }
            }
        }
    }

    #[test]
    fn empty_set_is_extinct() {
        let f = ScalarField::zeros(grid(), 1.25);
        let geo = boundary_geometry(&f, 0.01);
        assert!(geo.extinct);
        assert_eq!(geo.r_in, 0.0);
        assert_eq!(geo.r_out, 0.0);
        assert_eq!(geo.time, 1.25);
    }

    #[test]
    fn single_cell_set_keeps_radii_ordered() {
        let g = grid();
        let n = g.cells_per_axis();
        let mut values = vec![0.0; n * n];
        values[(n / 2) * n + n / 2] = 1.0;
        let f = ScalarField::from_values(g, 0.0, values).unwrap();
        let geo = boundary_geometry(&f, 0.5);
        assert!(geo.r_in <= geo.r_out);
        assert!(geo.flatness >= 0.0 && geo.flatness < 1.0);
    }

    #[test]
    fn level_monotonicity() {
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| 0.5 * (1.0 - x * x - y * y).max(0.0));
        let lo = boundary_geometry(&f, 0.01);
        let hi = boundary_geometry(&f, 0.2);
        assert!(hi.r_out <= lo.r_out, "raising the level cannot grow r_out");
    }

    #[test]
    fn nested_fields_have_ordered_radii() {
        let small = ScalarField::from_fn(grid(), 0.0, |x, y| 0.4 * (0.8 - x * x - y * y).max(0.0));
        let large = ScalarField::from_fn(grid(), 0.0, |x, y| 0.5 * (1.0 - x * x - y * y).max(0.0));
        let level = 0.05;
        let a = boundary_geometry(&small, level);
        let b = boundary_geometry(&large, level);
        assert!(a.r_out <= b.r_out);
        assert!(a.r_in <= b.r_in);
    }

    #[test]
    fn minorant_of_radial_field_is_its_profile() {
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| 0.5 * (1.0 - x * x - y * y).max(0.0));
        let minorant = radial_minorant(&f, 128).unwrap();
        let h = grid().spacing();
        for i in 0..minorant.cells() {
            let r = minorant.radius(i);
            let expect = 0.5 * (1.0 - r * r).max(0.0);
            assert!(
                (minorant.values()[i] - expect).abs() < 6.0 * h * h + 1e-12,
                "r={r}: {} vs {expect}",
                minorant.values()[i]
            );
        }
    }

    #[test]
    fn minorant_of_cosine_modulated_field() {
        // u = g(r)(1 + 0.2 cos θ) with g ≥ 0 → minorant ≈ 0.8 g(r)
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| {
            let r = x.hypot(y);
            let th = y.atan2(x);
            (1.0 - r * r).max(0.0) * (1.0 + 0.2 * th.cos())
        });
        let minorant = radial_minorant(&f, 128).unwrap();
        let h = grid().spacing();
        for i in 0..minorant.cells() {
            let r = minorant.radius(i);
            // below ~3 cells the circle cannot resolve the angular dip
            if r > 1.0 || r < 3.0 * h {
                continue;
            }
            let expect = 0.8 * (1.0 - r * r).max(0.0);
            assert!(
                (minorant.values()[i] - expect).abs() < 0.02 + 6.0 * h * h,
                "r={r}: {} vs {expect}",
                minorant.values()[i]
            );
        }
    }

    #[test]
    fn minorant_is_below_the_field() {
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| {
            (1.1 - x.abs() - 0.7 * y.abs()).max(0.0) * (1.0 + 0.3 * (3.0 * x).sin())
        });
        let minorant = radial_minorant(&f, 200).unwrap();
        // at sampled points of the field, the minorant at that radius
        // cannot exceed the field value (up to interpolation slack)
        let g = f.grid();
        let n = g.cells_per_axis();
        for iy in (1..n - 1).step_by(3) {
            for ix in (1..n - 1).step_by(3) {
                let (x, y) = g.cell_center(ix, iy);
                let r = x.hypot(y);
                if r < minorant.r_max() {
                    let m = minorant.sample(r);
                    assert!(
                        m <= f.value(ix, iy) + 0.02,
                        "minorant {m} above field {} at r={r}",
                        f.value(ix, iy)
                    );
                }
            }
        }
    }

    #[test]
    fn minorant_matches_dense_angle_oracle() {
        // smooth angular harmonic: r^5 cos 5θ = Re((x+iy)^5) is a
        // polynomial, so the sampled field has no kink at the origin
        let f = ScalarField::from_fn(grid(), 0.0, |x, y| {
            let r = x.hypot(y);
            let harmonic = (r / 1.2).powi(5) * (5.0 * y.atan2(x)).cos();
            0.5 * (1.2 - x * x - y * y).max(0.0) * (1.0 + 0.25 * harmonic)
        });
        let samples = 96;
        let minorant = radial_minorant(&f, samples).unwrap();
        for j in 0..samples {
            let r = minorant.radius(j);
            let oracle = angular_minimum(&f, r, 4);
            let got = minorant.values()[j];
            assert!(
                (got - oracle).abs() <= 1e-3 * oracle.abs().max(1e-3),
                "r={r}: {got} vs dense {oracle}"
            );
        }
    }

    #[test]
    fn minorant_rejects_too_few_samples() {
        let f = ScalarField::zeros(grid(), 0.0);
        assert!(radial_minorant(&f, 32).is_err());
    }
}
