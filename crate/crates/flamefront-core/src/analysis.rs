//! Quantitative post-processing: extinction estimates, √(T−t) scaling,
//! dyadic flatness decay, interior radial approximation, and convergence
//! to the self-similar profile.
//!
//! All functions here are pure consumers of immutable run records.

use serde::{Deserialize, Serialize};

use crate::cartesian::TimeSeries;
use crate::error::{FlameError, Result};
use crate::geometry::BoundaryGeometry;
use crate::grid::ScalarField;
use crate::radial::RadialField;
use crate::self_similar::SelfSimilarProfile;

/// How the extinction time was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtinctionMethod {
    /// Least-squares root of `(max u)²` against `t`: the √(T−t) law
    /// makes the square asymptotically linear and removes the bias the
    /// ε-layer puts on the raw threshold crossing.
    SquareLawFit,
    /// First time the max fell below the threshold.
    ThresholdCrossing,
}

/// Extinction time estimate with fit diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtinctionEstimate {
    pub t_hat: f64,
    pub method: ExtinctionMethod,
    pub fit_window: (f64, f64),
    /// RMS residual of the square-law fit relative to the data range.
    pub fit_residual: f64,
}

/// Minimum sample count for the square-law fit.
const MIN_FIT_SAMPLES: usize = 8;

/// Estimate the extinction time of a finished run.
///
/// The fit runs over the last decade of max values (`max u ≤ 10 m_end`)
/// and falls back to the threshold crossing when its relative residual
/// exceeds 10%.
pub fn estimate_extinction(series: &TimeSeries, threshold: f64) -> Result<ExtinctionEstimate> {
    if series.is_empty() {
        return Err(FlameError::Estimation("empty series".into()));
    }
    let last_max = *series.max_values.last().unwrap();
    if last_max >= threshold {
        return Err(FlameError::Estimation(format!(
            "run did not reach extinction: final max {last_max} ≥ threshold {threshold}"
        )));
    }
    let crossing_time = *series.times.last().unwrap();
    if series.len() == 1 {
        return Ok(ExtinctionEstimate {
            t_hat: crossing_time,
            method: ExtinctionMethod::ThresholdCrossing,
            fit_window: (crossing_time, crossing_time),
            fit_residual: 0.0,
        });
    }

    // last time still above the threshold: a lower bound for T̂
    let last_above = series
        .times
        .iter()
        .zip(&series.max_values)
        .rev()
        .find(|(_, &m)| m > threshold)
        .map(|(&t, _)| t)
        .unwrap_or(crossing_time);

    let m_end = series
        .max_values
        .iter()
        .rev()
        .find(|&&m| m > 0.0)
        .copied()
        .unwrap_or(threshold);
    let mut idx: Vec<usize> = (0..series.len())
        .filter(|&i| series.max_values[i] <= 10.0 * m_end)
        .collect();
    if idx.len() < MIN_FIT_SAMPLES {
        let start = series.len().saturating_sub(MIN_FIT_SAMPLES);
        idx = (start..series.len()).collect();
    }
    if idx.len() < 2 {
        return Ok(ExtinctionEstimate {
            t_hat: crossing_time,
            method: ExtinctionMethod::ThresholdCrossing,
            fit_window: (crossing_time, crossing_time),
            fit_residual: 0.0,
        });
    }

    let (t_lo, t_hi) = (series.times[idx[0]], series.times[*idx.last().unwrap()]);
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (series.times[i], series.max_values[i] * series.max_values[i]))
        .collect();
    let (slope, intercept) = least_squares(&pts);
    let mut residual_sq = 0.0;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for &(t, y) in &pts {
        let r = y - (slope * t + intercept);
        residual_sq += r * r;
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let rms = (residual_sq / pts.len() as f64).sqrt();
    let range = (ymax - ymin).max(f64::MIN_POSITIVE);
    let relative = rms / range;

    if slope < 0.0 && relative <= 0.10 {
        let root = -intercept / slope;
        Ok(ExtinctionEstimate {
            t_hat: root.max(last_above),
            method: ExtinctionMethod::SquareLawFit,
            fit_window: (t_lo, t_hi),
            fit_residual: relative,
        })
    } else {
        Ok(ExtinctionEstimate {
            t_hat: crossing_time,
            method: ExtinctionMethod::ThresholdCrossing,
            fit_window: (t_lo, t_hi),
            fit_residual: relative,
        })
    }
}

/// Convenience for run loops: estimate, falling back to the final time.
pub(crate) fn extinction_time(series: &TimeSeries, threshold: f64) -> f64 {
    estimate_extinction(series, threshold)
        .map(|e| e.t_hat)
        .unwrap_or_else(|_| series.times.last().copied().unwrap_or(0.0))
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < f64::MIN_POSITIVE {
        return (0.0, sy / n);
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// The dyadic rescaling times `t_i = (1 − 2⁻ⁱ) T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadicSchedule {
    pub extinction_time: f64,
    pub times: Vec<f64>,
}

impl DyadicSchedule {
    /// Level index of `times[j]` (levels start at 1).
    pub fn level(&self, j: usize) -> usize {
        j + 1
    }
}

/// Build the dyadic schedule for levels `1..=k_max`.
pub fn dyadic_times(extinction_time: f64, k_max: usize) -> Result<DyadicSchedule> {
    if !(extinction_time > 0.0) {
        return Err(FlameError::InvalidParameter(format!(
            "dyadic schedule needs T > 0, got {extinction_time}"
        )));
    }
    let times = (1..=k_max as i32)
        .map(|i| extinction_time - extinction_time * 0.5f64.powi(i))
        .collect();
    Ok(DyadicSchedule { extinction_time, times })
}

/// Extremes of `max u(t) / √(T̂ − t)` over a fractional window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SqrtLawRatio {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples_used: usize,
    /// Samples in the window at or past T̂ (guarded out of the ratio).
    pub samples_excluded: usize,
}

pub fn sqrt_law_ratio(
    series: &TimeSeries,
    t_hat: f64,
    window: (f64, f64),
) -> Result<SqrtLawRatio> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(FlameError::InvalidParameter(format!(
            "window fractions must satisfy 0 < lo < hi < 1, got ({lo}, {hi})"
        )));
    }
    let (t_lo, t_hi) = (lo * t_hat, hi * t_hat);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (&t, &m) in series.times.iter().zip(&series.max_values) {
        if t < t_lo || t > t_hi {
            continue;
        }
        if t >= t_hat {
            excluded += 1;
            continue;
        }
        let ratio = m / (t_hat - t).sqrt();
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(FlameError::Estimation(
            "no samples inside the ratio window".into(),
        ));
    }
    Ok(SqrtLawRatio { min_ratio, max_ratio, samples_used: used, samples_excluded: excluded })
}

/// One dyadic level of the flatness diagnostic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlatnessLevel {
    pub level: usize,
    pub time: f64,
    pub flatness: f64,
    pub r_in: f64,
    /// Measurement floor `2h / r_in` at this level.
    pub floor: f64,
    pub resolved: bool,
}

/// Geometric-decay fit of the dyadic flatness sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatnessFit {
    /// Resolved levels `(k, δ_k)` used by the fit.
    pub dyadic_flatness: Vec<(usize, f64)>,
    /// Fitted ratio ĥ of `δ_k ≈ C ĥ^k`.
    pub h_hat: f64,
    /// RMS log-residual relative to the fitted log-range.
    pub log_fit_residual: f64,
    pub resolved_levels: usize,
    /// Every sampled level with its resolution diagnostics.
    pub all_levels: Vec<FlatnessLevel>,
}

/// Radii smaller than this many cells are below the geometry guard.
const RESOLUTION_GUARD_CELLS: f64 = 8.0;

/// Fit `log δ_k = log C + k log ĥ` over the resolved dyadic levels.
///
/// A level is resolved when `r_in ≥ 8h` and the measured flatness sits
/// above the grid noise floor `2h/r_in`; unresolved levels would
/// fabricate decay (or mask it) and are excluded.
pub fn flatness_decay_fit(
    geometry: &[BoundaryGeometry],
    schedule: &DyadicSchedule,
    spacing: f64,
) -> Result<FlatnessFit> {
    if geometry.is_empty() {
        return Err(FlameError::InsufficientResolution("no geometry samples".into()));
    }
    let mut all_levels = Vec::new();
    for (j, &t_k) in schedule.times.iter().enumerate() {
        let nearest = geometry
            .iter()
            .min_by(|a, b| {
                (a.time - t_k)
                    .abs()
                    .partial_cmp(&(b.time - t_k).abs())
                    .unwrap()
            })
            .unwrap();
        let level = schedule.level(j);
        let floor = if nearest.r_in > 0.0 {
            2.0 * spacing / nearest.r_in
        } else {
            f64::INFINITY
        };
        let resolved = !nearest.extinct
            && nearest.r_in >= RESOLUTION_GUARD_CELLS * spacing
            && nearest.flatness >= floor
            && nearest.flatness > 0.0;
        all_levels.push(FlatnessLevel {
            level,
            time: nearest.time,
            flatness: nearest.flatness,
            r_in: nearest.r_in,
            floor,
            resolved,
        });
    }

    let resolved: Vec<&FlatnessLevel> = all_levels.iter().filter(|l| l.resolved).collect();
    if resolved.len() < 3 {
        return Err(FlameError::InsufficientResolution(format!(
            "{} resolved dyadic levels, need at least 3",
            resolved.len()
        )));
    }

    let pts: Vec<(f64, f64)> = resolved
        .iter()
        .map(|l| (l.level as f64, l.flatness.ln()))
        .collect();
    let (slope, intercept) = least_squares(&pts);
    let mut residual_sq = 0.0;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for &(k, y) in &pts {
        let r = y - (slope * k + intercept);
        residual_sq += r * r;
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let rms = (residual_sq / pts.len() as f64).sqrt();
    let range = ymax - ymin;
    let log_fit_residual = if range > 0.0 { rms / range } else if rms == 0.0 { 0.0 } else { f64::INFINITY };

    Ok(FlatnessFit {
        dyadic_flatness: resolved.iter().map(|l| (l.level, l.flatness)).collect(),
        h_hat: slope.exp(),
        log_fit_residual,
        resolved_levels: resolved.len(),
        all_levels,
    })
}

/// Interior excess of the field over its radial minorant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InteriorRatio {
    /// `sup (u/φ − 1)` over the inner ball, clamped at zero.
    pub sup_ratio: f64,
    pub cells_considered: usize,
    /// Cells skipped because the minorant sat below the level there.
    pub cells_excluded: usize,
    /// Radius of the inner ball `(1 − α^{2/3}) r_in`.
    pub inner_radius: f64,
}

/// Exponent of the interior shrink factor `1 − α^ε` (ε = 2/3).
pub const INTERIOR_EXPONENT: f64 = 2.0 / 3.0;

/// Measure `sup (u/φ − 1)` over `|x| ≤ (1 − α^{2/3}) r_in`, with the
/// minorant φ sampled at `|x|`.  Cells where the minorant sits below
/// `level` are excluded (and counted).
pub fn interior_ratio(
    field: &ScalarField,
    minorant: &RadialField,
    r_in: f64,
    alpha: f64,
    level: f64,
) -> Result<InteriorRatio> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FlameError::InvalidParameter(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let grid = field.grid();
    let h = grid.spacing();
    let inner_radius = (1.0 - alpha.powf(INTERIOR_EXPONENT)) * r_in;
    if inner_radius < 4.0 * h {
        return Err(FlameError::InsufficientResolution(format!(
            "inner ball radius {inner_radius} spans fewer than 4 cells (h = {h})"
        )));
    }
    let n = grid.cells_per_axis();
    let mut sup: f64 = f64::NEG_INFINITY;
    let mut considered = 0usize;
    let mut excluded = 0usize;
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = grid.cell_center(ix, iy);
            let r = x.hypot(y);
            if r > inner_radius {
                continue;
            }
            let phi = minorant.sample(r);
            if phi < level {
                excluded += 1;
                continue;
            }
            sup = sup.max(field.value(ix, iy) / phi - 1.0);
            considered += 1;
        }
    }
    if considered == 0 {
        return Err(FlameError::InsufficientResolution(
            "no interior cells above the level".into(),
        ));
    }
    Ok(InteriorRatio {
        sup_ratio: sup.max(0.0),
        cells_considered: considered,
        cells_excluded: excluded,
        inner_radius,
    })
}

/// `sup |(T̂−t)^{-1/2} u − f(|x|/√(T̂−t))|` over the grid.
pub fn self_similar_error(
    field: &ScalarField,
    t: f64,
    t_hat: f64,
    profile: &SelfSimilarProfile,
) -> Result<f64> {
    if t >= t_hat {
        return Err(FlameError::InvalidParameter(format!(
            "need t < T̂ for the rescaling, got t = {t}, T̂ = {t_hat}"
        )));
    }
    let root = (t_hat - t).sqrt();
    let grid = field.grid();
    let n = grid.cells_per_axis();
    let mut sup: f64 = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = grid.cell_center(ix, iy);
            let rescaled = field.value(ix, iy) / root;
            let target = profile.eval(x.hypot(y) / root);
            sup = sup.max((rescaled - target).abs());
        }
    }
    Ok(sup)
}

/// Radial counterpart of [`self_similar_error`].
pub fn self_similar_error_radial(
    field: &RadialField,
    t: f64,
    t_hat: f64,
    profile: &SelfSimilarProfile,
) -> Result<f64> {
    if t >= t_hat {
        return Err(FlameError::InvalidParameter(format!(
            "need t < T̂ for the rescaling, got t = {t}, T̂ = {t_hat}"
        )));
    }
    let root = (t_hat - t).sqrt();
    let mut sup: f64 = 0.0;
    for (i, &v) in field.values().iter().enumerate() {
        let r = field.radius(i);
        sup = sup.max((v / root - profile.eval(r / root)).abs());
    }
    Ok(sup)
}

/// `sup |∇u| / max(1, M)` over recorded snapshots.
pub fn gradient_bound_check(snapshots: &[ScalarField], size_bound: f64) -> f64 {
    let denom = size_bound.max(1.0);
    snapshots
        .iter()
        .map(|s| s.gradient_magnitude().max_value())
        .fold(0.0, f64::max)
        / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryGeometry;

    fn synthetic_series(f: impl Fn(f64) -> f64, t0: f64, t1: f64, count: usize) -> TimeSeries {
        let mut s = TimeSeries::default();
        for i in 0..count {
            let t = t0 + (t1 - t0) * i as f64 / (count - 1) as f64;
            s.times.push(t);
            s.max_values.push(f(t));
            s.masses.push(0.0);
        }
        s
    }

    #[test]
    fn recovers_exact_square_law_root() {
        let series = synthetic_series(|t| 2.0 * (1.0 - t).sqrt(), 0.5, 0.99, 200);
        let est = estimate_extinction(&series, 0.25).unwrap();
        assert_eq!(est.method, ExtinctionMethod::SquareLawFit);
        assert!((est.t_hat - 1.0).abs() < 1e-6, "T̂ = {}", est.t_hat);
    }

    #[test]
    fn tolerates_one_percent_noise() {
        let mut phase = 0.3f64;
        let mut noise = move || {
            phase = (phase * 997.0 + 0.123).fract();
            1.0 + 0.01 * (2.0 * phase - 1.0)
        };
        let mut series = synthetic_series(|t| 2.0 * (1.0 - t).sqrt(), 0.5, 0.99, 300);
        for m in series.max_values.iter_mut() {
            *m *= noise();
        }
        // keep the series formally extinct at its end
        let last = series.max_values.last_mut().unwrap();
        *last = last.min(0.2499);
        let est = estimate_extinction(&series, 0.25).unwrap();
        assert!((est.t_hat - 1.0).abs() < 1e-2, "T̂ = {}", est.t_hat);
    }

    #[test]
    fn non_extinct_series_is_an_error() {
        let series = synthetic_series(|_| 1.0, 0.0, 1.0, 50);
        assert!(matches!(
            estimate_extinction(&series, 0.25),
            Err(FlameError::Estimation(_))
        ));
    }

    #[test]
    fn dyadic_schedule_basics() {
        let s = dyadic_times(1.0, 8).unwrap();
        assert_eq!(s.times[0], 0.5);
        assert_eq!(s.times[1], 0.75);
        assert_eq!(s.times[2], 0.875);
        assert!(dyadic_times(0.0, 3).is_err());
    }

    #[test]
    fn dyadic_recurrence_holds_to_rounding() {
        // the times carry one rounding each, so the recurrence holds to
        // a couple of ulp in units of T
        for &t_final in &[1.0, 0.1875, 3.7e-3, 123.456] {
            let s = dyadic_times(t_final, 30).unwrap();
            for i in 0..s.times.len() - 1 {
                let lhs = s.times[i + 1] - s.times[i];
                let rhs = (t_final - s.times[i]) / 2.0;
                assert!(
                    (lhs - rhs).abs() <= 2.0 * f64::EPSILON * t_final,
                    "recurrence at i={i}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn sqrt_ratio_on_exact_self_similar_series() {
        let a1 = 0.98;
        let series = synthetic_series(move |t| a1 * (1.0 - t).sqrt(), 0.01, 0.999, 2000);
        let r = sqrt_law_ratio(&series, 1.0, (0.5, 0.95)).unwrap();
        assert!((r.min_ratio - a1).abs() < 1e-12);
        assert!((r.max_ratio - a1).abs() < 1e-12);
        assert_eq!(r.samples_excluded, 0);
    }

    #[test]
    fn sqrt_ratio_guards_bad_windows() {
        let series = synthetic_series(|t| (1.0 - t).max(0.0).sqrt(), 0.01, 0.9, 100);
        // inverted and out-of-range fractions
        assert!(sqrt_law_ratio(&series, 1.0, (0.9, 0.2)).is_err());
        assert!(sqrt_law_ratio(&series, 1.0, (0.0, 0.5)).is_err());
        assert!(sqrt_law_ratio(&series, 1.0, (0.5, 1.0)).is_err());
        // window beyond the recorded data: no usable samples
        assert!(matches!(
            sqrt_law_ratio(&series, 10.0, (0.5, 0.95)),
            Err(FlameError::Estimation(_))
        ));
    }

    fn geometry_from_deltas(deltas: &[(usize, f64)], t_final: f64) -> Vec<BoundaryGeometry> {
        // place a sample exactly at each dyadic time with the target
        // flatness and a comfortably resolved inner radius
        deltas
            .iter()
            .map(|&(k, delta)| {
                let t = t_final - t_final * 0.5f64.powi(k as i32);
                BoundaryGeometry {
                    time: t,
                    r_in: 1.0,
                    r_out: 1.0 / (1.0 - delta),
                    flatness: delta,
                    level: 0.01,
                    extinct: false,
                }
            })
            .collect()
    }

    #[test]
    fn exact_geometric_decay_is_fit_exactly() {
        let deltas: Vec<(usize, f64)> = (1..=8).map(|k| (k, 0.1 * 0.6f64.powi(k as i32))).collect();
        let geometry = geometry_from_deltas(&deltas, 1.0);
        let schedule = dyadic_times(1.0, 8).unwrap();
        let fit = flatness_decay_fit(&geometry, &schedule, 1e-4).unwrap();
        assert!((fit.h_hat - 0.6).abs() < 1e-10, "ĥ = {}", fit.h_hat);
        assert!(fit.log_fit_residual < 1e-10);
        assert_eq!(fit.resolved_levels, 8);
    }

    #[test]
    fn noisy_geometric_decay_recovers_ratio() {
        let mut phase = 0.7f64;
        let mut noise = move || {
            phase = (phase * 877.0 + 0.321).fract();
            1.0 + 0.05 * (2.0 * phase - 1.0)
        };
        let deltas: Vec<(usize, f64)> = (1..=8)
            .map(|k| (k, 0.1 * 0.6f64.powi(k as i32) * noise()))
            .collect();
        let geometry = geometry_from_deltas(&deltas, 1.0);
        let schedule = dyadic_times(1.0, 8).unwrap();
        let fit = flatness_decay_fit(&geometry, &schedule, 1e-4).unwrap();
        assert!((fit.h_hat - 0.6).abs() < 0.05, "ĥ = {}", fit.h_hat);
    }

    #[test]
    fn fit_is_scale_invariant() {
        let deltas: Vec<(usize, f64)> = (1..=6).map(|k| (k, 0.2 * 0.55f64.powi(k as i32))).collect();
        let scaled: Vec<(usize, f64)> = deltas.iter().map(|&(k, d)| (k, 3.7 * d)).collect();
        let schedule = dyadic_times(1.0, 6).unwrap();
        let a = flatness_decay_fit(&geometry_from_deltas(&deltas, 1.0), &schedule, 1e-6).unwrap();
        let b = flatness_decay_fit(&geometry_from_deltas(&scaled, 1.0), &schedule, 1e-6).unwrap();
        assert!((a.h_hat - b.h_hat).abs() < 1e-12);
    }

    #[test]
    fn degenerate_radial_flatness_is_rejected_by_the_floor() {
        // flatness at the grid noise level on a shrinking radius
        let spacing = 0.01;
        let geometry: Vec<BoundaryGeometry> = (1..=8)
            .map(|k| {
                let r_in = 1.0 * 0.5f64.powi(k as i32 / 2);
                BoundaryGeometry {
                    time: 1.0 - 0.5f64.powi(k as i32),
                    r_in,
                    r_out: r_in + spacing,
                    flatness: spacing / (r_in + spacing), // below 2h/r_in
                    level: 0.01,
                    extinct: false,
                }
            })
            .collect();
        let schedule = dyadic_times(1.0, 8).unwrap();
        assert!(matches!(
            flatness_decay_fit(&geometry, &schedule, spacing),
            Err(FlameError::InsufficientResolution(_))
        ));
    }

    #[test]
    fn gradient_check_zero_field() {
        let g = crate::grid::GridSpec::new(1.0, 32).unwrap();
        let f = ScalarField::zeros(g, 0.0);
        assert_eq!(gradient_bound_check(&[f], 2.0), 0.0);
    }
}
