//! Explicit finite-difference time integrator for the 2-D regularized
//! problem `u_t = Δu − (1/ε) β(u/ε)`, tracked to extinction.
//!
//! The scheme is explicit Euler under the stability bound
//! `dt ≤ cfl · min(h²/4, ε²/sup|β'|)`.  The diffusion update is computed
//! as a convex combination of stencil values and the sink is limited per
//! cell, after which the result is clamped to `[0, stencil max]`; the
//! discrete maximum principle and nonnegativity therefore hold exactly
//! (not merely up to rounding), mirroring the comparison-principle
//! structure of the continuous problem.

use crate::analysis;
use crate::error::{FlameError, Result};
use crate::geometry::{self, BoundaryGeometry};
use crate::grid::ScalarField;
use crate::reaction::BetaKernel;

/// Parameters of a regularized run.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Regularization scale ε of the reaction layer.
    pub eps: f64,
    /// Safety factor in (0, 1] multiplying the stability bound.
    pub cfl_safety: f64,
    /// Times at which full field snapshots are stored (each captured at
    /// the nearest step time ≥ the requested time).
    pub record_times: Vec<f64>,
    /// Max-value level declaring extinction; defaults to ε/10.
    pub extinction_threshold: Option<f64>,
    /// Step cap; exceeding it flags the run incomplete.
    pub max_steps: usize,
    /// Override of the time step; must satisfy the stability bound.
    pub dt_override: Option<f64>,
    /// Boundary geometry is sampled every this many steps.
    pub geometry_stride: usize,
}

impl SolverParams {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            cfl_safety: 0.8,
            record_times: Vec::new(),
            extinction_threshold: None,
            max_steps: 50_000_000,
            dt_override: None,
            geometry_stride: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(FlameError::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(FlameError::InvalidParameter(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if let Some(th) = self.extinction_threshold {
            if !(th > 0.0) {
                return Err(FlameError::InvalidParameter(format!(
                    "extinction_threshold must be positive, got {th}"
                )));
            }
        }
        if self.max_steps == 0 || self.geometry_stride == 0 {
            return Err(FlameError::InvalidParameter(
                "max_steps and geometry_stride must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Extinction level: explicit threshold or the ε/10 default.
    pub fn threshold(&self) -> f64 {
        self.extinction_threshold.unwrap_or(self.eps / 10.0)
    }

    /// Stable step for a given diffusion limit (`h²/4` in 2-D Cartesian,
    /// `h²/(2n)` radially).
    pub fn stability_bound(&self, diffusion_limit: f64, kernel: &BetaKernel) -> f64 {
        diffusion_limit.min(self.eps * self.eps / kernel.derivative_bound())
    }

    /// Actual step: the override when present, else cfl · bound.
    /// Errors if the override violates the bound.
    pub fn time_step(&self, diffusion_limit: f64, kernel: &BetaKernel) -> Result<f64> {
        let bound = self.stability_bound(diffusion_limit, kernel);
        match self.dt_override {
            Some(dt) if dt > bound => Err(FlameError::Config(format!(
                "dt override {dt} violates the stability bound {bound}"
            ))),
            Some(dt) if dt <= 0.0 => Err(FlameError::Config(format!(
                "dt override must be positive, got {dt}"
            ))),
            Some(dt) => Ok(dt),
            None => Ok(self.cfl_safety * bound),
        }
    }

    /// Advisory resolution check: the reaction layer should span at
    /// least ~4 cells.
    pub fn resolution_warnings(&self, spacing: f64) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.eps < 4.0 * spacing {
            warnings.push(format!(
                "reaction layer under-resolved: eps = {} < 4h = {}",
                self.eps,
                4.0 * spacing
            ));
        }
        warnings
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// Max value fell below the extinction threshold.
    Extinct,
    /// The step cap was reached first; the record is partial.
    MaxStepsReached,
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub max_values: Vec<f64>,
    pub masses: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, max_value: f64, mass: f64) {
        self.times.push(t);
        self.max_values.push(max_value);
        self.masses.push(mass);
    }
}

/// Everything a run produces: snapshots, scalar series, geometry series,
/// and the extinction estimate.
#[derive(Debug, Clone)]
pub struct RunRecord<F> {
    pub snapshots: Vec<F>,
    pub series: TimeSeries,
    pub geometry: Vec<BoundaryGeometry>,
    pub extinction_time_estimate: Option<f64>,
    pub steps_taken: usize,
    pub outcome: RunOutcome,
    /// Count of steps where the cell max increased (expected 0: the
    /// clamped scheme enforces the discrete maximum principle exactly).
    pub max_principle_violations: usize,
    pub warnings: Vec<String>,
}

impl<F> RunRecord<F> {
    pub fn extinct(&self) -> bool {
        self.outcome == RunOutcome::Extinct
    }
}

/// One explicit Euler step.  Validates parameters and the stability
/// bound; inside run loops use the internal kernel directly.
pub fn step(field: &ScalarField, params: &SolverParams, kernel: &BetaKernel) -> Result<ScalarField> {
    params.validate()?;
    let h = field.grid().spacing();
    let dt = params.time_step(h * h / 4.0, kernel)?;
    let mut out = field.clone();
    step_into(field, &mut out, dt, params.eps, kernel);
    out.set_time(field.time() + dt);
    Ok(out)
}

/// The update kernel: diffusion as a convex combination, sink limited to
/// the available value, result clamped to `[0, stencil max]`.
/// Returns (max, sum) of the updated field.
fn step_into(
    src: &ScalarField,
    dst: &mut ScalarField,
    dt: f64,
    eps: f64,
    kernel: &BetaKernel,
) -> (f64, f64) {
    let n = src.grid().cells_per_axis();
    let h = src.grid().spacing();
    let lam = dt / (h * h);
    let center_coeff = 1.0 - 4.0 * lam;
    let inv_eps = 1.0 / eps;
    let u = src.values();
    let out = dst.values_mut();
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for iy in 1..n - 1 {
        let row = iy * n;
        for ix in 1..n - 1 {
            let c = u[row + ix];
            let w = u[row + ix - 1];
            let e = u[row + ix + 1];
            let s = u[row - n + ix];
            let nn = u[row + n + ix];
            let diffused = center_coeff * c + lam * (w + e + s + nn);
            let sink = kernel.beta(c * inv_eps) * inv_eps;
            let limited = sink.min(c / dt);
            let stencil_max = c.max(w).max(e).max(s).max(nn);
            let v = (diffused - dt * limited).clamp(0.0, stencil_max);
            out[row + ix] = v;
            max = max.max(v);
            sum += v;
        }
    }
    (max, sum)
}

struct RunLoop {
    dt: f64,
    threshold: f64,
    record_times: Vec<f64>,
    next_record: usize,
    geometry_stride: usize,
}

impl RunLoop {
    fn new(params: &SolverParams, dt: f64) -> Self {
        let mut record_times = params.record_times.clone();
        record_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self {
            dt,
            threshold: params.threshold(),
            record_times,
            next_record: 0,
            geometry_stride: params.geometry_stride,
        }
    }
}

/// Integrate to extinction (or the step cap).
pub fn run(
    initial: &ScalarField,
    params: &SolverParams,
    kernel: &BetaKernel,
) -> Result<RunRecord<ScalarField>> {
    params.validate()?;
    let h = initial.grid().spacing();
    let dt = params.time_step(h * h / 4.0, kernel)?;
    let mut ctl = RunLoop::new(params, dt);
    let warnings = params.resolution_warnings(h);

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
    let (mut max_u, mass) = (field.max_value(), field.mass());
    record.series.push(t, max_u, mass);
    record.geometry.push(geometry::boundary_geometry(&field, ctl.threshold));
    capture_due(&mut ctl, &mut record.snapshots, &field, t);

    if max_u < ctl.threshold {
        record.outcome = RunOutcome::Extinct;
        record.extinction_time_estimate = Some(t);
        return Ok(record);
    }

    for step_index in 1..=params.max_steps {
        step_into(&field, &mut scratch, ctl.dt, params.eps, kernel);
        t = initial.time() + step_index as f64 * ctl.dt;
        scratch.set_time(t);
        std::mem::swap(&mut field, &mut scratch);

        let (new_max, new_mass) = max_and_mass(&field);
        if new_max > max_u {
            record.max_principle_violations += 1;
        }
        max_u = new_max;
        record.series.push(t, new_max, new_mass);
        record.steps_taken = step_index;

        capture_due(&mut ctl, &mut record.snapshots, &field, t);
        if step_index % ctl.geometry_stride == 0 {
            record.geometry.push(geometry::boundary_geometry(&field, ctl.threshold));
        }

        if new_max < ctl.threshold {
            record.outcome = RunOutcome::Extinct;
            if step_index % ctl.geometry_stride != 0 {
                record.geometry.push(geometry::boundary_geometry(&field, ctl.threshold));
            }
            break;
        }
    }

    if record.extinct() {
        record.extinction_time_estimate =
            Some(analysis::extinction_time(&record.series, ctl.threshold));
    }
    Ok(record)
}

fn capture_due(ctl: &mut RunLoop, snapshots: &mut Vec<ScalarField>, field: &ScalarField, t: f64) {
    while ctl.next_record < ctl.record_times.len() && t >= ctl.record_times[ctl.next_record] {
        snapshots.push(field.clone());
        ctl.next_record += 1;
    }
}

fn max_and_mass(field: &ScalarField) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for &v in field.values() {
        max = max.max(v);
        sum += v;
    }
    let h = field.grid().spacing();
    (max, sum * h * h)
}

/// Run to extinction twice: a first pass to estimate T̂, then a rerun
/// that captures snapshots at the dyadic times `t_k = (1 − 2⁻ᵏ) T̂`.
///
/// T̂ is unknowable before a run finishes, so dyadic-time snapshots need
/// the second pass; determinism makes the two passes identical.
pub fn run_with_dyadic_snapshots(
    initial: &ScalarField,
    params: &SolverParams,
    kernel: &BetaKernel,
    k_max: usize,
) -> Result<(RunRecord<ScalarField>, crate::analysis::DyadicSchedule)> {
    let first = run(initial, params, kernel)?;
    let t_hat = match (first.outcome, first.extinction_time_estimate) {
        (RunOutcome::Extinct, Some(t)) if t > 0.0 => t,
        _ => {
            return Err(FlameError::Estimation(
                "dyadic schedule needs an extinct run with T̂ > 0".into(),
            ))
        }
    };
    let schedule = crate::analysis::dyadic_times(t_hat, k_max)?;
    let mut with_snapshots = params.clone();
    with_snapshots.record_times = schedule.times.clone();
    let record = run(initial, &with_snapshots, kernel)?;
    Ok((record, schedule))
}

/// Advance an ordered pair on the same step schedule and report the
/// worst pointwise ordering violation `max (u_low − u_high)₊`.
pub fn run_pair_ordered(
    initial_low: &ScalarField,
    initial_high: &ScalarField,
    params: &SolverParams,
    kernel: &BetaKernel,
) -> Result<(RunRecord<ScalarField>, RunRecord<ScalarField>, f64)> {
    params.validate()?;
    if initial_low.grid() != initial_high.grid() {
        return Err(FlameError::InvalidParameter(
            "ordered pair must share one grid".into(),
        ));
    }
    let ordered = initial_low
        .values()
        .iter()
        .zip(initial_high.values())
        .all(|(lo, hi)| lo <= hi);
    if !ordered {
        return Err(FlameError::InvalidParameter(
            "initial data not ordered: low exceeds high somewhere".into(),
        ));
    }

    let h = initial_low.grid().spacing();
    let dt = params.time_step(h * h / 4.0, kernel)?;
    let threshold = params.threshold();

    let mut low = initial_low.clone();
    let mut high = initial_high.clone();
    let mut scratch = initial_low.clone();
    let mut violation = 0.0f64;
    let mut steps = 0usize;
    while steps < params.max_steps
        && (low.max_value() >= threshold || high.max_value() >= threshold)
    {
        step_into(&low, &mut scratch, dt, params.eps, kernel);
        std::mem::swap(&mut low, &mut scratch);
        step_into(&high, &mut scratch, dt, params.eps, kernel);
        std::mem::swap(&mut high, &mut scratch);
        steps += 1;
        for (lo, hi) in low.values().iter().zip(high.values()) {
            violation = violation.max(lo - hi);
        }
    }
    violation = violation.max(0.0);

    // full records for the callers that want the dynamics
    let record_low = run(initial_low, params, kernel)?;
    let record_high = run(initial_high, params, kernel)?;
    Ok((record_low, record_high, violation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn small_grid() -> GridSpec {
        GridSpec::new(1.5, 48).unwrap()
    }

    fn cap(grid: GridSpec, amplitude: f64) -> ScalarField {
        ScalarField::from_fn(grid, 0.0, move |x, y| amplitude * (1.0 - x * x - y * y).max(0.0))
    }

    /// Straight-loop reference step, written independently of the
    /// production kernel.
    fn reference_step(field: &ScalarField, dt: f64, eps: f64, kernel: &BetaKernel) -> Vec<f64> {
        let n = field.grid().cells_per_axis();
        let h = field.grid().spacing();
        let mut out = vec![0.0; n * n];
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let c = field.value(ix, iy);
                let nb = [
                    field.value(ix - 1, iy),
                    field.value(ix + 1, iy),
                    field.value(ix, iy - 1),
                    field.value(ix, iy + 1),
                ];
                let lam = dt / (h * h);
                let diffused = (1.0 - 4.0 * lam) * c + lam * (nb[0] + nb[1] + nb[2] + nb[3]);
                let sink = kernel.beta(c / eps) / eps;
                let v = diffused - dt * sink.min(c / dt);
                let cap = c.max(nb[0]).max(nb[1]).max(nb[2]).max(nb[3]);
                out[iy * n + ix] = v.clamp(0.0, cap);
            }
        }
        out
    }

    #[test]
    fn zero_field_is_fixed_point() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.05);
        let zero = ScalarField::zeros(small_grid(), 0.0);
        let next = step(&zero, &params, &kernel).unwrap();
        assert!(next.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plateau_above_layer_feels_only_diffusion() {
        let kernel = BetaKernel::smooth_bump();
        let eps = 0.05;
        let params = SolverParams::new(eps);
        let g = small_grid();
        // constant 2ε on a large ball: deep cells see Δu = 0, β = 0
        let f = ScalarField::from_fn(g, 0.0, |x, y| {
            if x.hypot(y) < 1.2 {
                2.0 * eps
            } else {
                0.0
            }
        });
        let next = step(&f, &params, &kernel).unwrap();
        let n = g.cells_per_axis();
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let (x, y) = g.cell_center(ix, iy);
                let r = x.hypot(y);
                if r < 0.8 {
                    assert_eq!(next.value(ix, iy), 2.0 * eps, "deep interior unchanged");
                }
                if r > 1.1 && r < 1.3 {
                    assert!(next.value(ix, iy) <= 2.0 * eps);
                }
            }
        }
    }

    #[test]
    fn single_step_matches_reference_oracle() {
        let kernel = BetaKernel::smooth_bump();
        let eps = 0.04;
        let params = SolverParams::new(eps);
        let g = small_grid();
        let f = ScalarField::from_fn(g, 0.0, |x, y| {
            0.3 * (-(x * x + y * y) / 0.18).exp()
        });
        let h = g.spacing();
        let dt = params.time_step(h * h / 4.0, &kernel).unwrap();
        let next = step(&f, &params, &kernel).unwrap();
        let oracle = reference_step(&f, dt, eps, &kernel);
        for (a, b) in next.values().iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn empty_initial_extinct_immediately() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.05);
        let record = run(&ScalarField::zeros(small_grid(), 0.0), &params, &kernel).unwrap();
        assert!(record.extinct());
        assert_eq!(record.extinction_time_estimate, Some(0.0));
        assert_eq!(record.steps_taken, 0);
        assert_eq!(record.series.len(), 1);
    }

    #[test]
    fn cap_run_is_monotone_and_extinguishes() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.05);
        let record = run(&cap(small_grid(), 0.5), &params, &kernel).unwrap();
        assert!(record.extinct(), "cap must burn out");
        assert_eq!(record.max_principle_violations, 0);
        let m = &record.series.max_values;
        for w in m.windows(2) {
            assert!(w[1] <= w[0], "max_u must be nonincreasing");
        }
        let t_hat = record.extinction_time_estimate.unwrap();
        assert!(t_hat > 0.0 && t_hat.is_finite());
    }

    #[test]
    fn runs_are_deterministic() {
        let kernel = BetaKernel::smooth_bump();
        let mut params = SolverParams::new(0.06);
        params.record_times = vec![0.0, 0.01];
        let a = run(&cap(small_grid(), 0.4), &params, &kernel).unwrap();
        let b = run(&cap(small_grid(), 0.4), &params, &kernel).unwrap();
        assert_eq!(a.series.times, b.series.times);
        assert_eq!(a.series.max_values, b.series.max_values);
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn support_never_outruns_one_cell_per_step() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.05);
        let g = small_grid();
        let f = ScalarField::from_fn(g, 0.0, |x, y| 0.3 * (0.25 - x * x - y * y).max(0.0));
        let h = g.spacing();
        let steps = 40usize;
        let mut cur = f.clone();
        let dt = params.time_step(h * h / 4.0, &kernel).unwrap();
        for _ in 0..steps {
            let mut next = cur.clone();
            step_into(&cur, &mut next, dt, params.eps, &kernel);
            cur = next;
        }
        let initial_bound = 0.5; // support radius of the initial cap
        let n = g.cells_per_axis();
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = g.cell_center(ix, iy);
                if x.hypot(y) > initial_bound + (steps as f64 + 1.0) * h {
                    assert_eq!(cur.value(ix, iy), 0.0);
                }
            }
        }
    }

    #[test]
    fn ordered_pair_identical_inputs_has_zero_violation() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.06);
        let f = cap(small_grid(), 0.4);
        let (_, _, violation) = run_pair_ordered(&f, &f, &params, &kernel).unwrap();
        assert_eq!(violation, 0.0);
    }

    #[test]
    fn ordered_pair_scaled_cap_stays_ordered() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.06);
        let low = cap(small_grid(), 0.4);
        let high = cap(small_grid(), 0.44);
        let (_, _, violation) = run_pair_ordered(&low, &high, &params, &kernel).unwrap();
        assert!(violation <= 1e-12, "ordering violation {violation}");
    }

    #[test]
    fn ordered_pair_zero_low_is_exact() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.06);
        let low = ScalarField::zeros(small_grid(), 0.0);
        let high = cap(small_grid(), 0.4);
        let (_, _, violation) = run_pair_ordered(&low, &high, &params, &kernel).unwrap();
        assert_eq!(violation, 0.0);
    }

    #[test]
    fn unordered_pair_rejected() {
        let kernel = BetaKernel::smooth_bump();
        let params = SolverParams::new(0.06);
        let low = cap(small_grid(), 0.5);
        let high = cap(small_grid(), 0.4);
        assert!(run_pair_ordered(&low, &high, &params, &kernel).is_err());
    }

    #[test]
    fn dt_override_must_respect_bound() {
        let kernel = BetaKernel::smooth_bump();
        let mut params = SolverParams::new(0.05);
        params.dt_override = Some(1.0);
        let f = cap(small_grid(), 0.4);
        assert!(matches!(run(&f, &params, &kernel), Err(FlameError::Config(_))));
    }
}
