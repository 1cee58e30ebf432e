//! Initial data `u₀ = φ₀ + ρ`: a radial cap plus a nonnegative angular
//! perturbation, with the hypothesis checks reported (never enforced).
//!
//! `φ₀(x) = A (1 − |x|²)₊` and `ρ(x) = α s(|x|) cos²(mθ/2)` with `s` a
//! C² bump on the envelope interval.  The squared cosine keeps ρ ≥ 0;
//! mode `m` gives angular period `2π/m`.

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};
use crate::grid::{GridSpec, ScalarField};

/// Construction parameters for the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    /// Cap amplitude A ∈ (0, 1/2]; keeps |∇φ₀| = 2A·r ≤ 1 on the unit
    /// sphere.
    pub cap_amplitude: f64,
    /// Perturbation amplitude α ≥ 0.
    pub perturbation_amplitude: f64,
    /// Angular mode m ≥ 1 (period 2π/m).
    pub angular_mode: usize,
    /// Radial support `[r_lo, r_hi]` of the perturbation envelope.
    pub envelope: (f64, f64),
    /// Global size bound M of the hypotheses: support in B_M,
    /// |∇u₀| ≤ M, max φ₀ ≥ 1/M.
    pub size_bound: f64,
    /// Spatial dimension (2 for the Cartesian solver).
    pub dimension: usize,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            cap_amplitude: 0.5,
            perturbation_amplitude: 0.0,
            angular_mode: 12,
            envelope: (0.5, 0.9),
            size_bound: 2.0,
            dimension: 2,
        }
    }
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cap_amplitude > 0.0 && self.cap_amplitude <= 0.5) {
            return Err(FlameError::InvalidParameter(format!(
                "cap_amplitude must lie in (0, 1/2], got {}",
                self.cap_amplitude
            )));
        }
        if self.perturbation_amplitude < 0.0 {
            return Err(FlameError::InvalidParameter(
                "perturbation_amplitude must be nonnegative".into(),
            ));
        }
        if self.angular_mode == 0 {
            return Err(FlameError::InvalidParameter("angular_mode must be ≥ 1".into()));
        }
        let (lo, hi) = self.envelope;
        if !(0.0 <= lo && lo < hi) {
            return Err(FlameError::InvalidParameter(format!(
                "envelope must satisfy 0 ≤ r_lo < r_hi, got ({lo}, {hi})"
            )));
        }
        if !(self.size_bound > 1.0) {
            return Err(FlameError::InvalidParameter(format!(
                "size_bound M must exceed 1, got {}",
                self.size_bound
            )));
        }
        if self.cap_amplitude < 1.0 / self.size_bound {
            return Err(FlameError::InvalidParameter(format!(
                "max φ₀ = {} is below 1/M = {}",
                self.cap_amplitude,
                1.0 / self.size_bound
            )));
        }
        if self.dimension != 2 {
            return Err(FlameError::InvalidParameter(
                "Cartesian initial data is 2-D; use the radial solver for other n".into(),
            ));
        }
        Ok(())
    }

    /// Whether the angular period 2π/m is within the perturbation
    /// amplitude (the периодicity hypothesis); recorded, not enforced.
    pub fn period_condition_met(&self) -> bool {
        2.0 * std::f64::consts::PI / self.angular_mode as f64 <= self.perturbation_amplitude
    }

    /// C² envelope bump: 64 q³(1−q)³ on [r_lo, r_hi], zero outside.
    pub fn envelope_value(&self, r: f64) -> f64 {
        let (lo, hi) = self.envelope;
        if r <= lo || r >= hi {
            return 0.0;
        }
        let q = (r - lo) / (hi - lo);
        64.0 * q.powi(3) * (1.0 - q).powi(3)
    }

    /// u₀ at a point.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        let cap = self.cap_amplitude * (1.0 - r * r).max(0.0);
        let rho = if self.perturbation_amplitude > 0.0 {
            let theta = y.atan2(x);
            let c = (self.angular_mode as f64 * theta / 2.0).cos();
            self.perturbation_amplitude * self.envelope_value(r) * c * c
        } else {
            0.0
        };
        cap + rho
    }
}

/// Sample the initial data on a grid.
pub fn build(spec: &InitialDataSpec, grid: GridSpec) -> Result<ScalarField> {
    spec.validate()?;
    if grid.half_width() <= spec.size_bound {
        return Err(FlameError::Config(format!(
            "grid half_width {} must strictly exceed the size bound M = {}",
            grid.half_width(),
            spec.size_bound
        )));
    }
    let support_radius = 1.0f64.max(spec.envelope.1);
    if support_radius > spec.size_bound {
        return Err(FlameError::Config(format!(
            "initial support radius {support_radius} escapes B_M with M = {}",
            spec.size_bound
        )));
    }
    Ok(ScalarField::from_fn(grid, 0.0, |x, y| spec.value(x, y)))
}

/// Measured hypothesis checks for one initial field.
///
/// The shrinking-support condition (Δu₀ ≤ 0 on the positivity set,
/// |∇u₀| ≤ 1 near the boundary) guarantees uniqueness of the limit
/// solution; runs that fail it are permitted but flagged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub support_radius: f64,
    pub size_bound: f64,
    /// (a) support contained in B_M.
    pub support_ok: bool,
    pub gradient_sup: f64,
    /// (b) |∇u₀| ≤ M.
    pub gradient_ok: bool,
    pub cap_peak: f64,
    /// (c) max φ₀ ≥ 1/M.
    pub peak_ok: bool,
    /// Max discrete Laplacian over the interior of the positivity set.
    pub concavity_max: f64,
    pub concavity_ok: bool,
    /// Worst cell for the concavity check.
    pub concavity_worst_cell: Option<(usize, usize)>,
    /// Max |∇u₀| within two cells of the discrete boundary.
    pub boundary_gradient_max: f64,
    pub boundary_gradient_ok: bool,
    /// Both parts of the shrinking-support condition.
    pub shrinking_support_ok: bool,
    pub period_condition_met: bool,
}

/// Measure the hypotheses on a sampled field.  Reports, never errors.
pub fn validate(field: &ScalarField, spec: &InitialDataSpec) -> ValidationReport {
    let grid = field.grid();
    let n = grid.cells_per_axis();
    let h = grid.spacing();

    let mut support_radius = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            if field.value(ix, iy) > 0.0 {
                let (x, y) = grid.cell_center(ix, iy);
                support_radius = support_radius.max(x.hypot(y) + 0.5 * h);
            }
        }
    }

    let gradient = field.gradient_magnitude();
    let gradient_sup = gradient.max_value();

    // interior of the positivity set: positive cells whose whole stencil
    // is positive
    let lap = field.laplacian();
    let mut concavity_max = f64::NEG_INFINITY;
    let mut concavity_worst_cell = None;
    let positive = |ix: usize, iy: usize| field.value(ix, iy) > 0.0;
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            if positive(ix, iy)
                && positive(ix - 1, iy)
                && positive(ix + 1, iy)
                && positive(ix, iy - 1)
                && positive(ix, iy + 1)
            {
                let v = lap.value(ix, iy);
                if v > concavity_max {
                    concavity_max = v;
                    concavity_worst_cell = Some((ix, iy));
                }
            }
        }
    }
    if !concavity_max.is_finite() {
        concavity_max = 0.0;
        concavity_worst_cell = None;
    }

    // boundary cells: positive with a non-positive 4-neighbor; measure
    // |∇u₀| within a 2-cell dilation of that set
    let mut near_boundary = vec![false; n * n];
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            if positive(ix, iy)
                && (!positive(ix - 1, iy)
                    || !positive(ix + 1, iy)
                    || !positive(ix, iy - 1)
                    || !positive(ix, iy + 1))
            {
                for dy in -2i64..=2 {
                    for dx in -2i64..=2 {
                        let jx = ix as i64 + dx;
                        let jy = iy as i64 + dy;
                        if jx >= 0 && jy >= 0 && (jx as usize) < n && (jy as usize) < n {
                            near_boundary[jy as usize * n + jx as usize] = true;
                        }
                    }
                }
            }
        }
    }
    let mut boundary_gradient_max = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            if near_boundary[iy * n + ix] {
                boundary_gradient_max = boundary_gradient_max.max(gradient.value(ix, iy));
            }
        }
    }

    // stencil slack: the discrete Laplacian of the exact cap carries
    // O(1) error across the support kink, the gradient O(h)
    let concavity_ok = concavity_max <= 1e-9;
    let boundary_gradient_ok = boundary_gradient_max <= 1.0 + 10.0 * h;

    ValidationReport {
        support_radius,
        size_bound: spec.size_bound,
        support_ok: support_radius <= spec.size_bound,
        gradient_sup,
        gradient_ok: gradient_sup <= spec.size_bound + 10.0 * h,
        cap_peak: spec.cap_amplitude,
        peak_ok: spec.cap_amplitude >= 1.0 / spec.size_bound,
        concavity_max,
        concavity_ok,
        concavity_worst_cell,
        boundary_gradient_max,
        boundary_gradient_ok,
        shrinking_support_ok: concavity_ok && boundary_gradient_ok,
        period_condition_met: spec.period_condition_met(),
    }
}
