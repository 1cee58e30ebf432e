//! The quantitative criteria suite.
//!
//! Each criterion runs a self-contained experiment and reports one
//! pass/fail outcome with its measured numbers.  The flame runs behind
//! criteria 4, 5, and 7 are shared through a process-wide cache so the
//! suite stays inside its time budget whether the criteria are invoked
//! from the CLI or as parallel test cases.

use std::sync::OnceLock;
use std::time::Instant;

use crate::analysis::{self, DyadicSchedule, FlatnessFit};
use crate::cartesian::{self, RunRecord, SolverParams};
use crate::error::Result;
use crate::geometry;
use crate::grid::{GridSpec, ScalarField};
use crate::initial::{self, InitialDataSpec};
use crate::radial::{self, RadialField};
use crate::reaction::BetaKernel;
use crate::self_similar::{self, ProfileIntegrator};

/// Experiment sizes for the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    /// Laptop-sized grids (256², ε = 0.04); finishes in a couple of
    /// minutes.
    Quick,
    /// The full configuration, including the 512² flatness-decay run.
    Full,
}

/// One criterion's result.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    /// One printable pass/fail line.
    pub fn line(&self) -> String {
        format!(
            "{} {:2} {:<28} [{:7.2}s] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

fn outcome(
    id: usize,
    name: &'static str,
    started: Instant,
    budget_seconds: f64,
    result: Result<(bool, String)>,
) -> CriterionOutcome {
    let seconds = started.elapsed().as_secs_f64();
    match result {
        Ok((passed_core, detail)) => {
            let within_budget = seconds <= budget_seconds;
            let detail = if within_budget {
                detail
            } else {
                format!("{detail}; exceeded {budget_seconds}s budget")
            };
            CriterionOutcome { id, name, passed: passed_core && within_budget, detail, seconds }
        }
        Err(err) => CriterionOutcome { id, name, passed: false, detail: err.to_string(), seconds },
    }
}

/// Run every criterion in order.
pub fn run_all(level: VerifyLevel) -> Vec<CriterionOutcome> {
    vec![
        criterion_1_profile(),
        criterion_2_self_similar_reproduction(level),
        criterion_3_sqrt_law(),
        criterion_4_flatness_decay(level),
        criterion_5_interior_improvement(level),
        criterion_6_comparison_principle(),
        criterion_7_maximum_principle(level),
        criterion_8_geometry_oracles(),
        criterion_9_eps_limit(),
        criterion_10_determinism(),
    ]
}

// ---------------------------------------------------------------------
// criterion 1: self-similar profile correctness
// ---------------------------------------------------------------------

pub fn criterion_1_profile() -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let mut worst_f = 0.0f64;
        let mut worst_df = 0.0f64;
        let mut worst_res = 0.0f64;
        let mut worst_stab = 0.0f64;
        for n in 1..=3usize {
            let p = self_similar::solve_profile(n, 1e-10)?;
            let last = p.samples().last().unwrap();
            worst_f = worst_f.max(last.f.abs());
            worst_df = worst_df.max((last.df + 1.0).abs());
            // residual over ≥1000 of the stored samples
            worst_res = worst_res.max(p.ode_residual_sup());
            // step halving stability
            let r_a = self_similar::support_radius_at_step(n, 5e-4)?;
            let r_b = self_similar::support_radius_at_step(n, 2.5e-4)?;
            worst_stab = worst_stab.max((r_a - r_b).abs());
            // cross-integrator agreement
            let q = self_similar::solve_profile_with(n, 1e-10, ProfileIntegrator::Dopri54)?;
            worst_stab = worst_stab.max((p.support_radius() - q.support_radius()).abs());
        }
        let pass = worst_f < 1e-10 && worst_df < 1e-8 && worst_res <= 1e-8 && worst_stab < 1e-9;
        Ok((
            pass,
            format!(
                "|f(R)|≤{worst_f:.2e} |f'(R)+1|≤{worst_df:.2e} residual≤{worst_res:.2e} R-stability≤{worst_stab:.2e}"
            ),
        ))
    };
    outcome(1, "self-similar profile", start, 1.0, body())
}

// ---------------------------------------------------------------------
// criterion 2: radial solver reproduces the self-similar solution
// ---------------------------------------------------------------------

struct SelfSimRun {
    t_hat_error: f64,
    rescaled_error: f64,
}

fn self_similar_radial_run(eps: f64, inv_spacing: usize) -> Result<SelfSimRun> {
    let profile = self_similar::solve_profile(2, 1e-10)?;
    let h = 1.0 / inv_spacing as f64;
    let r_target = profile.support_radius() + 0.3;
    let cells = (r_target / h).ceil() as usize + 1;
    let r_max = (cells - 1) as f64 * h;
    let initial = RadialField::from_fn(2, r_max, cells, 0.0, |r| profile.eval(r))?;

    let mut params = SolverParams::new(eps);
    params.record_times = vec![0.5];
    let record = radial::radial_run(&initial, &params, &BetaKernel::smooth_bump())?;
    if !record.extinct() {
        return Err(crate::error::FlameError::Estimation(
            "self-similar run did not reach extinction".into(),
        ));
    }
    let t_hat = record.extinction_time_estimate.unwrap();
    let snapshot = record
        .snapshots
        .first()
        .ok_or_else(|| crate::error::FlameError::Estimation("missing t=0.5 snapshot".into()))?;
    let rescaled_error =
        analysis::self_similar_error_radial(snapshot, snapshot.time(), t_hat, &profile)?;
    Ok(SelfSimRun { t_hat_error: (t_hat - 1.0).abs(), rescaled_error })
}

pub fn criterion_2_self_similar_reproduction(level: VerifyLevel) -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let profile = self_similar::solve_profile(2, 1e-10)?;
        let (base, refined) = match level {
            VerifyLevel::Full => (
                self_similar_radial_run(0.02, 256)?,
                self_similar_radial_run(0.01, 512)?,
            ),
            VerifyLevel::Quick => (
                self_similar_radial_run(0.04, 128)?,
                self_similar_radial_run(0.02, 256)?,
            ),
        };
        let tol_err = 0.10 * profile.peak();
        let pass = base.t_hat_error <= 0.05
            && base.rescaled_error <= tol_err
            && refined.t_hat_error < base.t_hat_error
            && refined.rescaled_error < base.rescaled_error;
        Ok((
            pass,
            format!(
                "|T̂−1| {:.4}→{:.4}, sup error {:.4}→{:.4} (10% of a₁ = {:.4})",
                base.t_hat_error,
                refined.t_hat_error,
                base.rescaled_error,
                refined.rescaled_error,
                tol_err
            ),
        ))
    };
    outcome(2, "self-similar reproduction", start, 60.0, body())
}

// ---------------------------------------------------------------------
// criterion 3: √(T−t) law on a generic radial cap
// ---------------------------------------------------------------------

fn radial_cap(cells_per_unit: usize) -> Result<RadialField> {
    let h = 1.0 / cells_per_unit as f64;
    let cells = (1.2 / h).ceil() as usize + 1;
    RadialField::from_fn(2, (cells - 1) as f64 * h, cells, 0.0, |r| {
        0.5 * (1.0 - r * r).max(0.0)
    })
}

pub fn criterion_3_sqrt_law() -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let params = SolverParams::new(0.02);
        let record = radial::radial_run(&radial_cap(512)?, &params, &BetaKernel::smooth_bump())?;
        let t_hat = record
            .extinction_time_estimate
            .ok_or_else(|| crate::error::FlameError::Estimation("no extinction".into()))?;
        let ratio = analysis::sqrt_law_ratio(&record.series, t_hat, (0.5, 0.95))?;
        let spread = ratio.max_ratio / ratio.min_ratio;
        Ok((
            spread <= 2.0,
            format!(
                "max_u/√(T̂−t) ∈ [{:.4}, {:.4}], spread {spread:.4} (≤ 2)",
                ratio.min_ratio, ratio.max_ratio
            ),
        ))
    };
    outcome(3, "sqrt(T-t) law", start, 60.0, body())
}

// ---------------------------------------------------------------------
// criteria 4 & 5: shared flatness-decay experiment
// ---------------------------------------------------------------------

pub struct FlatnessExperiment {
    pub schedule: DyadicSchedule,
    pub record: RunRecord<ScalarField>,
    pub fit: Result<FlatnessFit>,
    pub level: f64,
    pub spacing: f64,
    pub t_hat: f64,
    pub alpha: f64,
}

fn flatness_experiment(level: VerifyLevel) -> Result<FlatnessExperiment> {
    let (cells, eps) = match level {
        VerifyLevel::Quick => (256usize, 0.04),
        VerifyLevel::Full => (512usize, 0.02),
    };
    let alpha = 0.1;
    let spec = InitialDataSpec {
        cap_amplitude: 0.5,
        perturbation_amplitude: alpha,
        angular_mode: 12,
        ..Default::default()
    };
    let grid = GridSpec::new(2.05, cells)?;
    let field = initial::build(&spec, grid)?;
    let params = SolverParams::new(eps);
    let threshold = params.threshold();

    let (record, schedule) = cartesian::run_with_dyadic_snapshots(&field, &params, &BetaKernel::smooth_bump(), 12)?;
    let t_hat = schedule.extinction_time;
    let fit = analysis::flatness_decay_fit(&record.geometry, &schedule, grid.spacing());
    Ok(FlatnessExperiment {
        schedule,
        record,
        fit,
        level: threshold,
        spacing: grid.spacing(),
        t_hat,
        alpha,
    })
}

fn shared_flatness(level: VerifyLevel) -> &'static Result<FlatnessExperiment> {
    static QUICK: OnceLock<Result<FlatnessExperiment>> = OnceLock::new();
    static FULL: OnceLock<Result<FlatnessExperiment>> = OnceLock::new();
    match level {
        VerifyLevel::Quick => QUICK.get_or_init(|| flatness_experiment(VerifyLevel::Quick)),
        VerifyLevel::Full => FULL.get_or_init(|| flatness_experiment(VerifyLevel::Full)),
    }
}

pub fn criterion_4_flatness_decay(level: VerifyLevel) -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let exp = match shared_flatness(level) {
            Ok(e) => e,
            Err(err) => return Ok((false, format!("experiment failed: {err}"))),
        };
        let levels_line = exp
            .fit
            .as_ref()
            .map(|f| &f.all_levels)
            .map(|ls| {
                ls.iter()
                    .map(|l| {
                        format!(
                            "k={} δ={:.4}{}",
                            l.level,
                            l.flatness,
                            if l.resolved { "" } else { "*" }
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_default();
        match &exp.fit {
            Err(err) => Ok((false, format!("flatness fit rejected: {err}"))),
            Ok(fit) => {
                let resolved: Vec<(usize, f64)> = fit
                    .dyadic_flatness
                    .iter()
                    .copied()
                    .filter(|&(k, _)| k >= 2)
                    .collect();
                if resolved.len() < 3 {
                    return Ok((
                        false,
                        format!(
                            "only {} resolved levels with k ≥ 2 ({levels_line})",
                            resolved.len()
                        ),
                    ));
                }
                let nonincreasing = resolved.windows(2).all(|w| w[1].1 <= w[0].1);
                let mut two_level_decay = true;
                for &(k, d) in &resolved {
                    if let Some(&(_, d2)) = resolved.iter().find(|&&(kk, _)| kk == k + 2) {
                        if d2 > 0.8 * d {
                            two_level_decay = false;
                        }
                    }
                }
                let pass = nonincreasing
                    && two_level_decay
                    && fit.h_hat < 1.0
                    && fit.log_fit_residual < 0.25;
                Ok((
                    pass,
                    format!(
                        "ĥ={:.4} residual={:.1}% nonincreasing={nonincreasing} δ_(k+2)≤0.8δ_k={two_level_decay}; {levels_line}",
                        fit.h_hat,
                        100.0 * fit.log_fit_residual
                    ),
                ))
            }
        }
    };
    outcome(4, "flatness decay", start, 900.0, body())
}

pub fn criterion_5_interior_improvement(level: VerifyLevel) -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let exp = match shared_flatness(level) {
            Ok(e) => e,
            Err(err) => return Ok((false, format!("experiment failed: {err}"))),
        };
        let mut ratios: Vec<(usize, f64)> = Vec::new();
        for (j, snapshot) in exp.record.snapshots.iter().enumerate() {
            let k = exp.schedule.level(j);
            if k < 2 {
                continue;
            }
            let geo = geometry::boundary_geometry(snapshot, exp.level);
            if geo.extinct || geo.r_in < 8.0 * exp.spacing {
                continue;
            }
            let minorant = geometry::radial_minorant(snapshot, 256)?;
            match analysis::interior_ratio(snapshot, &minorant, geo.r_in, exp.alpha, exp.level) {
                Ok(r) => ratios.push((k, r.sup_ratio)),
                Err(crate::error::FlameError::InsufficientResolution(_)) => break,
                Err(e) => return Err(e),
            }
        }
        if ratios.len() < 3 {
            return Ok((false, format!("only {} resolved interior ratios", ratios.len())));
        }
        let nonincreasing = ratios.windows(2).all(|w| w[1].1 <= w[0].1);
        let line = ratios
            .iter()
            .map(|(k, r)| format!("k={k} ratio={r:.5}"))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((nonincreasing, format!("nonincreasing={nonincreasing}; {line}")))
    };
    outcome(5, "interior improvement", start, 300.0, body())
}

// ---------------------------------------------------------------------
// criterion 6: comparison principle
// ---------------------------------------------------------------------

pub fn criterion_6_comparison_principle() -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let grid = GridSpec::new(1.5, 128)?;
        let low = ScalarField::from_fn(grid, 0.0, |x, y| 0.4 * (1.0 - x * x - y * y).max(0.0));
        let high = ScalarField::from_fn(grid, 0.0, |x, y| {
            1.1 * 0.4 * (1.0 - x * x - y * y).max(0.0)
        });
        let params = SolverParams::new(0.05);
        let (_, _, violation) =
            cartesian::run_pair_ordered(&low, &high, &params, &BetaKernel::smooth_bump())?;
        Ok((
            violation <= 1e-12,
            format!("ordering violation {violation:.3e} (≤ 1e-12)"),
        ))
    };
    outcome(6, "comparison principle", start, 120.0, body())
}

// ---------------------------------------------------------------------
// criterion 7: discrete maximum principle
// ---------------------------------------------------------------------

pub fn criterion_7_maximum_principle(level: VerifyLevel) -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let mut checked = 0usize;
        let mut violations = 0usize;
        let mut monotone = true;

        let mut absorb = |series: &[f64], v: usize| {
            checked += 1;
            violations += v;
            if series.windows(2).any(|w| w[1] > w[0]) {
                monotone = false;
            }
        };

        // the shared flame run
        if let Ok(exp) = shared_flatness(level) {
            absorb(&exp.record.series.max_values, exp.record.max_principle_violations);
        }
        // a radial cap run
        let radial_record =
            radial::radial_run(&radial_cap(256)?, &SolverParams::new(0.04), &BetaKernel::smooth_bump())?;
        absorb(&radial_record.series.max_values, radial_record.max_principle_violations);
        // a perturbed Cartesian run on a small grid, polynomial kernel
        let spec = InitialDataSpec {
            perturbation_amplitude: 0.08,
            angular_mode: 6,
            ..Default::default()
        };
        let field = initial::build(&spec, GridSpec::new(2.05, 128)?)?;
        let record = cartesian::run(&field, &SolverParams::new(0.06), &BetaKernel::poly_bump())?;
        absorb(&record.series.max_values, record.max_principle_violations);

        Ok((
            monotone && violations == 0,
            format!("{checked} runs checked, {violations} violations, step-monotone={monotone}"),
        ))
    };
    outcome(7, "discrete maximum principle", start, 300.0, body())
}

// ---------------------------------------------------------------------
// criterion 8: geometry oracles
// ---------------------------------------------------------------------

struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn criterion_8_geometry_oracles() -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let grid = GridSpec::new(1.5, 96)?;
        let n = grid.cells_per_axis();
        let mut rng = SplitMix64(0x5eed_cafe_f00d_0001);
        let mut radii_exact = true;
        let mut minorant_worst = 0.0f64;

        for case in 0..50 {
            // geometry: white-noise mask against the exhaustive scan
            let mut values = vec![0.0; n * n];
            for v in values.iter_mut() {
                *v = rng.next_f64();
            }
            let field = ScalarField::from_values(grid, 0.0, values)?;
            let level = 0.3 + 0.4 * rng.next_f64();
            let geo = geometry::boundary_geometry(&field, level);
            let (mut max_in, mut min_out) = (None::<f64>, f64::INFINITY);
            for iy in 0..n {
                for ix in 0..n {
                    let (x, y) = grid.cell_center(ix, iy);
                    let d = x.hypot(y);
                    if field.value(ix, iy) > level {
                        max_in = Some(max_in.map_or(d, |m: f64| m.max(d)));
                    } else {
                        min_out = min_out.min(d);
                    }
                }
            }
            let h = grid.spacing();
            match max_in {
                None => radii_exact &= geo.extinct,
                Some(mi) => {
                    radii_exact &= geo.r_out == mi + 0.5 * h;
                    radii_exact &= geo.r_in == (min_out - 0.5 * h).clamp(0.0, geo.r_out);
                }
            }

            // minorant: smooth random field against a 4x-dense oracle;
            // r^m cos(mθ+φ) is polynomial in (x, y), so the sampled
            // field stays smooth through the origin
            let amp = 0.1 + 0.3 * rng.next_f64();
            let mode = 1 + (case % 7);
            let phase = rng.next_f64() * std::f64::consts::TAU;
            let smooth = ScalarField::from_fn(grid, 0.0, |x, y| {
                let r = x.hypot(y);
                let th = y.atan2(x);
                let harmonic = (r / 1.3).powi(mode as i32) * (mode as f64 * th + phase).cos();
                (1.3 - r * r).max(0.0) * (1.0 + amp * harmonic)
            });
            let minorant = geometry::radial_minorant(&smooth, 96)?;
            for j in 0..minorant.cells() {
                let r = minorant.radius(j);
                let oracle = geometry::angular_minimum(&smooth, r, 4);
                let got = minorant.values()[j];
                let rel = (got - oracle).abs() / oracle.abs().max(1e-3);
                minorant_worst = minorant_worst.max(rel);
            }
        }
        let pass = radii_exact && minorant_worst <= 1e-3;
        Ok((
            pass,
            format!("radii exact on 50 masks: {radii_exact}; minorant worst rel {minorant_worst:.2e} (≤ 1e-3)"),
        ))
    };
    outcome(8, "geometry oracles", start, 120.0, body())
}

// ---------------------------------------------------------------------
// criterion 9: ε-limit consistency
// ---------------------------------------------------------------------

pub fn criterion_9_eps_limit() -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let kernel = BetaKernel::smooth_bump();
        let mut estimates = Vec::new();
        for &eps in &[0.04, 0.02, 0.01] {
            let record = radial::radial_run(&radial_cap(512)?, &SolverParams::new(eps), &kernel)?;
            estimates.push(
                record
                    .extinction_time_estimate
                    .ok_or_else(|| crate::error::FlameError::Estimation("no extinction".into()))?,
            );
        }
        let d1 = (estimates[1] - estimates[0]).abs();
        let d2 = (estimates[2] - estimates[1]).abs();
        Ok((
            d2 < d1,
            format!(
                "T̂(ε) = {:.5}, {:.5}, {:.5}; |ΔT̂| {d1:.5} → {d2:.5} (decreasing)",
                estimates[0], estimates[1], estimates[2]
            ),
        ))
    };
    outcome(9, "eps-limit consistency", start, 120.0, body())
}

// ---------------------------------------------------------------------
// criterion 10: determinism
// ---------------------------------------------------------------------

pub fn criterion_10_determinism() -> CriterionOutcome {
    let start = Instant::now();
    let body = || -> Result<(bool, String)> {
        let spec = InitialDataSpec {
            perturbation_amplitude: 0.05,
            angular_mode: 8,
            ..Default::default()
        };
        let grid = GridSpec::new(2.05, 96)?;
        let field = initial::build(&spec, grid)?;
        let mut params = SolverParams::new(0.06);
        params.record_times = vec![0.0, 0.05];
        let kernel = BetaKernel::smooth_bump();

        let a = cartesian::run(&field, &params, &kernel)?;
        let b = cartesian::run(&field, &params, &kernel)?;
        let repeat_identical = a.series.times == b.series.times
            && a.series.max_values == b.series.max_values
            && a.series.masses == b.series.masses
            && a.snapshots.len() == b.snapshots.len()
            && a.snapshots
                .iter()
                .zip(&b.snapshots)
                .all(|(x, y)| x.values() == y.values());

        // snapshot bytes identical
        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        crate::snapshot::write_grid_text(&a.snapshots[0], &mut bytes_a)?;
        crate::snapshot::write_grid_text(&b.snapshots[0], &mut bytes_b)?;
        let bytes_identical = bytes_a == bytes_b;

        // scheduling independence: the same three runs on threads vs inline
        let eps_list = [0.06f64, 0.05, 0.04];
        let sequential: Vec<Vec<f64>> = eps_list
            .iter()
            .map(|&eps| {
                cartesian::run(&field, &SolverParams::new(eps), &kernel)
                    .map(|r| r.series.max_values)
            })
            .collect::<Result<_>>()?;
        let threaded: Vec<Vec<f64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = eps_list
                .iter()
                .map(|&eps| {
                    let field = &field;
                    let kernel = &kernel;
                    scope.spawn(move || {
                        cartesian::run(field, &SolverParams::new(eps), kernel)
                            .map(|r| r.series.max_values)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap())
                .collect::<Vec<Result<Vec<f64>>>>()
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let schedule_independent = sequential == threaded;

        Ok((
            repeat_identical && bytes_identical && schedule_independent,
            format!(
                "repeat identical: {repeat_identical}; snapshot bytes identical: {bytes_identical}; thread-schedule independent: {schedule_independent}"
            ),
        ))
    };
    outcome(10, "determinism", start, 300.0, body())
}
