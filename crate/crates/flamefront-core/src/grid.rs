//! Uniform Cartesian grids and the discrete differential operators.
//!
//! Fields live on cell centers of an origin-centered square `[-W, W]^2`
//! and are immutable snapshots: operators allocate fresh outputs.  The
//! outermost cell ring carries the homogeneous Dirichlet far-field
//! condition and is kept at zero by every operator.

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

/// Smallest cell count per axis that the operators accept.
pub const MIN_CELLS_PER_AXIS: usize = 16;

/// Geometry of an origin-centered uniform square grid.
///
/// Cell centers sit at `-W + (i + 1/2) h` per axis, so the grid is
/// symmetric under reflection through either axis; an odd cell count
/// additionally places a center at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    cells_per_axis: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, cells_per_axis: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(FlameError::InvalidParameter(format!(
                "grid half_width must be positive and finite, got {half_width}"
            )));
        }
        if cells_per_axis < MIN_CELLS_PER_AXIS {
            return Err(FlameError::InvalidParameter(format!(
                "cells_per_axis must be at least {MIN_CELLS_PER_AXIS}, got {cells_per_axis}"
            )));
        }
        Ok(Self { half_width, cells_per_axis })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Cell spacing `2W / cells_per_axis`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells_per_axis as f64
    }

    /// Spatial dimension of Cartesian fields (fixed at 2).
    pub fn dimension(&self) -> usize {
        2
    }

    /// Index of the grid's center in continuous cell coordinates.
    fn center_index(&self) -> f64 {
        (self.cells_per_axis - 1) as f64 / 2.0
    }

    /// Center coordinates of cell `(ix, iy)`.
    ///
    /// Computed as `(i − (n−1)/2)·h`: the offset negates exactly under
    /// `i → n−1−i`, so mirrored cells get exactly negated coordinates
    /// and reflection symmetry of sampled radial data is exact.
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let h = self.spacing();
        let c = self.center_index();
        ((ix as f64 - c) * h, (iy as f64 - c) * h)
    }
}

/// A scalar field sampled at cell centers, together with its time stamp.
///
/// Values are nonnegative (the temperature deficit of the model) and zero
/// on the outermost cell ring.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    time: f64,
}

impl ScalarField {
    /// Zero field on `grid` at time `time`.
    pub fn zeros(grid: GridSpec, time: f64) -> Self {
        let n = grid.cells_per_axis();
        Self { grid, values: vec![0.0; n * n], time }
    }

    /// Sample `f(x, y)` at interior cell centers, clamping negatives to
    /// zero and forcing the boundary ring to zero.
    pub fn from_fn(grid: GridSpec, time: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.cells_per_axis();
        let mut field = Self::zeros(grid, time);
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let (x, y) = grid.cell_center(ix, iy);
                field.values[iy * n + ix] = f(x, y).max(0.0);
            }
        }
        field
    }

    /// Raw constructor for tests and file readers; boundary ring is
    /// zeroed, values are not sign-clamped.
    pub fn from_values(grid: GridSpec, time: f64, mut values: Vec<f64>) -> Result<Self> {
        let n = grid.cells_per_axis();
        if values.len() != n * n {
            return Err(FlameError::InvalidParameter(format!(
                "expected {} values for a {n}x{n} grid, got {}",
                n * n,
                values.len()
            )));
        }
        for ix in 0..n {
            values[ix] = 0.0;
            values[(n - 1) * n + ix] = 0.0;
            values[ix * n] = 0.0;
            values[ix * n + n - 1] = 0.0;
        }
        Ok(Self { grid, values, time })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.cells_per_axis() + ix]
    }

    /// Maximum cell value (0 for the empty field).
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Integral of the field, `h^2 Σ u`.
    pub fn mass(&self) -> f64 {
        let h = self.grid.spacing();
        h * h * self.values.iter().sum::<f64>()
    }

    /// Five-point Laplacian at interior cells; zero on the boundary ring.
    pub fn laplacian(&self) -> ScalarField {
        let n = self.grid.cells_per_axis();
        let h2 = self.grid.spacing() * self.grid.spacing();
        let mut out = ScalarField::zeros(self.grid, self.time);
        for iy in 1..n - 1 {
            let row = iy * n;
            for ix in 1..n - 1 {
                let c = self.values[row + ix];
                let sum = self.values[row + ix - 1]
                    + self.values[row + ix + 1]
                    + self.values[row - n + ix]
                    + self.values[row + n + ix];
                out.values[row + ix] = (sum - 4.0 * c) / h2;
            }
        }
        out
    }

    /// Magnitude of the central-difference gradient at interior cells.
    ///
    /// Cells adjacent to the boundary ring use one-sided differences in
    /// the constrained direction; the ring itself is zero.
    pub fn gradient_magnitude(&self) -> ScalarField {
        let n = self.grid.cells_per_axis();
        let h = self.grid.spacing();
        let mut out = ScalarField::zeros(self.grid, self.time);
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let gx = if ix == 1 {
                    (self.value(ix + 1, iy) - self.value(ix, iy)) / h
                } else if ix == n - 2 {
                    (self.value(ix, iy) - self.value(ix - 1, iy)) / h
                } else {
                    (self.value(ix + 1, iy) - self.value(ix - 1, iy)) / (2.0 * h)
                };
                let gy = if iy == 1 {
                    (self.value(ix, iy + 1) - self.value(ix, iy)) / h
                } else if iy == n - 2 {
                    (self.value(ix, iy) - self.value(ix, iy - 1)) / h
                } else {
                    (self.value(ix, iy + 1) - self.value(ix, iy - 1)) / (2.0 * h)
                };
                out.values[iy * n + ix] = gx.hypot(gy);
            }
        }
        out
    }

    /// Bilinear interpolation of cell values at `(x, y)`.
    ///
    /// In the outer half-cell margin (inside the square but beyond the
    /// last cell centers) the interpolation degenerates to the boundary
    /// value, which is zero.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        let w = self.grid.half_width();
        if !(x.abs() <= w && y.abs() <= w) {
            return Err(FlameError::OutOfDomain { x, y, half_width: w });
        }
        let n = self.grid.cells_per_axis();
        let h = self.grid.spacing();
        // continuous cell-index coordinates: cell i has center at index i
        let fx = x / h + self.grid.center_index();
        let fy = y / h + self.grid.center_index();
        let ix = (fx.floor() as isize).clamp(0, n as isize - 2) as usize;
        let iy = (fy.floor() as isize).clamp(0, n as isize - 2) as usize;
        // snap sub-ulp offsets so sampling at a cell center returns that
        // cell's value exactly
        let snap = |t: f64| {
            if t < 1e-12 {
                0.0
            } else if t > 1.0 - 1e-12 {
                1.0
            } else {
                t
            }
        };
        let tx = snap((fx - ix as f64).clamp(0.0, 1.0));
        let ty = snap((fy - iy as f64).clamp(0.0, 1.0));
        let v00 = self.value(ix, iy);
        let v10 = self.value(ix + 1, iy);
        let v01 = self.value(ix, iy + 1);
        let v11 = self.value(ix + 1, iy + 1);
        Ok(v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty)
    }
}
