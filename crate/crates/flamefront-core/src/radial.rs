//! 1-D radial solver for `u_t = u_rr + ((n-1)/r) u_r − (1/ε) β(u/ε)` in
//! integer dimension `n ≥ 1`.
//!
//! Node 0 sits at the origin, where the operator takes its regular limit
//! `Δu(0) ≈ 2n (u₁ − u₀)/h²` (second order, preserves the symmetry
//! condition `u_r(0) = 0`).  The stability bound is
//! `dt ≤ cfl · min(h²/(2n), ε²/sup|β'|)`.

use crate::analysis;
use crate::cartesian::{RunOutcome, RunRecord, SolverParams, TimeSeries};
use crate::error::{FlameError, Result};
use crate::geometry;
use crate::reaction::BetaKernel;

/// Largest supported dimension; the radial reduction is exercised for
/// n in 1..=6.
pub const MAX_DIMENSION: usize = 6;

/// A radially symmetric field on uniform nodes `r_i = i·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    dimension: usize,
    r_max: f64,
    values: Vec<f64>,
    time: f64,
}

impl RadialField {
    pub fn new(dimension: usize, r_max: f64, cells: usize, time: f64) -> Result<Self> {
        if dimension < 1 || dimension > MAX_DIMENSION {
            return Err(FlameError::InvalidParameter(format!(
                "radial dimension must lie in 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        if !(r_max > 0.0) || cells < 8 {
            return Err(FlameError::InvalidParameter(format!(
                "need r_max > 0 and at least 8 nodes, got r_max={r_max}, cells={cells}"
            )));
        }
        Ok(Self { dimension, r_max, values: vec![0.0; cells], time })
    }

    /// Sample `f(r)` at the nodes, clamping negatives and zeroing the
    /// outermost node.
    pub fn from_fn(
        dimension: usize,
        r_max: f64,
        cells: usize,
        time: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut field = Self::new(dimension, r_max, cells, time)?;
        let h = field.spacing();
        for i in 0..cells - 1 {
            field.values[i] = f(i as f64 * h).max(0.0);
        }
        Ok(field)
    }

    pub fn from_values(dimension: usize, r_max: f64, time: f64, mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 8 {
            return Err(FlameError::InvalidParameter(
                "radial field needs at least 8 nodes".into(),
            ));
        }
        if let Some(last) = values.last_mut() {
            *last = 0.0;
        }
        let cells = values.len();
        let mut field = Self::new(dimension, r_max, cells, time)?;
        field.values = values;
        Ok(field)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.values.len() - 1) as f64
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

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Mass `∫ u dV` with the n-dimensional volume element
    /// `ω_n r^{n-1} dr` (unit-sphere area factor included).
    pub fn mass(&self) -> f64 {
        let n = self.dimension as f64;
        let h = self.spacing();
        let omega = unit_sphere_area(self.dimension);
        let mut sum = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let r = i as f64 * h;
            let weight = if i == 0 { 0.0 } else { r.powf(n - 1.0) };
            sum += v * weight;
        }
        omega * sum * h
    }

    /// Linear interpolation of node values at radius `r`; zero outside.
    pub fn sample(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            return 0.0;
        }
        let h = self.spacing();
        let j = ((r / h) as usize).min(self.values.len() - 2);
        let t = (r - j as f64 * h) / h;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    /// Radial Laplacian `u_rr + ((n-1)/r) u_r`: regular limit at the
    /// origin, central differences inside, zero at the outermost node.
    pub fn radial_laplacian(&self) -> RadialField {
        let cells = self.values.len();
        let h = self.spacing();
        let n = self.dimension as f64;
        let mut out = self.clone();
        out.values.fill(0.0);
        out.values[0] = 2.0 * n * (self.values[1] - self.values[0]) / (h * h);
        for i in 1..cells - 1 {
            let r = i as f64 * h;
            let u_rr = (self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1]) / (h * h);
            let u_r = (self.values[i + 1] - self.values[i - 1]) / (2.0 * h);
            out.values[i] = u_rr + (n - 1.0) / r * u_r;
        }
        out
    }
}

fn unit_sphere_area(dimension: usize) -> f64 {
    use std::f64::consts::PI;
    match dimension {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        6 => PI * PI * PI,
        _ => unreachable!("dimension validated at construction"),
    }
}

/// One explicit Euler step of the radial problem.
pub fn radial_step(
    field: &RadialField,
    params: &SolverParams,
    kernel: &BetaKernel,
) -> Result<RadialField> {
    params.validate()?;
    let h = field.spacing();
    let n = field.dimension() as f64;
    let dt = params.time_step(h * h / (2.0 * n), kernel)?;
    let mut out = field.clone();
    radial_step_into(field, &mut out, dt, params.eps, kernel);
    out.set_time(field.time() + dt);
    Ok(out)
}

fn radial_step_into(
    src: &RadialField,
    dst: &mut RadialField,
    dt: f64,
    eps: f64,
    kernel: &BetaKernel,
) {
    let cells = src.values.len();
    let h = src.spacing();
    let n = src.dimension as f64;
    let lam = dt / (h * h);
    let inv_eps = 1.0 / eps;
    let u = &src.values;
    let out = &mut dst.values;

    // origin: u0 + dt·2n(u1-u0)/h², a convex combination under the bound
    {
        let c = u[0];
        let diffused = (1.0 - 2.0 * n * lam) * c + 2.0 * n * lam * u[1];
        let sink = kernel.beta(c * inv_eps) * inv_eps;
        let limited = sink.min(c / dt);
        out[0] = (diffused - dt * limited).clamp(0.0, c.max(u[1]));
    }
    for i in 1..cells - 1 {
        let r = i as f64 * h;
        let drift = (n - 1.0) * h / (2.0 * r);
        let c = u[i];
        let lo = u[i - 1];
        let hi = u[i + 1];
        let diffused = (1.0 - 2.0 * lam) * c + lam * ((1.0 - drift) * lo + (1.0 + drift) * hi);
        let sink = kernel.beta(c * inv_eps) * inv_eps;
        let limited = sink.min(c / dt);
        out[i] = (diffused - dt * limited).clamp(0.0, c.max(lo).max(hi));
    }
    out[cells - 1] = 0.0;
}

/// Integrate a radial field to extinction (or the step cap).
pub fn radial_run(
    initial: &RadialField,
    params: &SolverParams,
    kernel: &BetaKernel,
) -> Result<RunRecord<RadialField>> {
    params.validate()?;
    let h = initial.spacing();
    let n = initial.dimension() as f64;
    let dt = params.time_step(h * h / (2.0 * n), kernel)?;
    let threshold = params.threshold();
    let warnings = params.resolution_warnings(h);

    let mut record_times = params.record_times.clone();
    record_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_record = 0usize;

    let mut record = RunRecord {
        snapshots: Vec::new(),
        series: TimeSeries::default(),
        geometry: Vec::new(),
        extinction_time_estimate: None,
        steps_taken: 0,
        outcome: RunOutcome::MaxStepsReached,
        max_principle_violations: 0,
        warnings,
    };

    let mut field = initial.clone();
    let mut scratch = initial.clone();
    let mut t = initial.time();
    let mut max_u = field.max_value();
    record.series.push_row(t, max_u, field.mass());
    record.geometry.push(geometry::boundary_geometry_radial(&field, threshold));
    while next_record < record_times.len() && t >= record_times[next_record] {
        record.snapshots.push(field.clone());
        next_record += 1;
    }

    if max_u < threshold {
        record.outcome = RunOutcome::Extinct;
        record.extinction_time_estimate = Some(t);
        return Ok(record);
    }

    for step_index in 1..=params.max_steps {
        radial_step_into(&field, &mut scratch, dt, params.eps, kernel);
        t = initial.time() + step_index as f64 * dt;
        scratch.set_time(t);
        std::mem::swap(&mut field, &mut scratch);

        let new_max = field.max_value();
        if new_max > max_u {
            record.max_principle_violations += 1;
        }
        max_u = new_max;
        record.series.push_row(t, new_max, field.mass());
        record.steps_taken = step_index;

        while next_record < record_times.len() && t >= record_times[next_record] {
            record.snapshots.push(field.clone());
            next_record += 1;
        }
        if step_index % params.geometry_stride == 0 {
            record
                .geometry
                .push(geometry::boundary_geometry_radial(&field, threshold));
        }

        if new_max < threshold {
            record.outcome = RunOutcome::Extinct;
            if step_index % params.geometry_stride != 0 {
                record
                    .geometry
                    .push(geometry::boundary_geometry_radial(&field, threshold));
            }
            break;
        }
    }

    if record.extinct() {
        record.extinction_time_estimate =
            Some(analysis::extinction_time(&record.series, threshold));
    }
    Ok(record)
}

impl TimeSeries {
    pub(crate) fn push_row(&mut self, t: f64, max_value: f64, mass: f64) {
        self.times.push(t);
        self.max_values.push(max_value);
        self.masses.push(mass);
    }
}
