//! Self-similar extinction profiles.
//!
//! The profile `f` solves
//!
//! ```text
//! f'' + ((n-1)/r - r/2) f' + f/2 = 0,   f'(0) = 0,  f(R) = 0,  f'(R) = -1
//! ```
//!
//! and generates the closed-form solution
//! `U(x,t) = √(T-t) · f(|x| / √(T-t))`, which vanishes at time `T` with
//! peak `a₁ √(T-t)` and support radius `a₂ √(T-t)` (`a₁ = f(0)`,
//! `a₂ = R`).
//!
//! The ODE is linear and homogeneous, so the two-point problem reduces to
//! one integration: integrate with `f(0) = 1`, find the first zero `R`,
//! and rescale by `λ = -1/f'(R)`.

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

/// No profile zero is expected anywhere near this radius; integration
/// past it signals a fault.
const SEARCH_CAP: f64 = 50.0;

/// Series start offset: the 1/r coefficient is removable only through the
/// regular limit f''(0) = -1/(2n), applied via f ≈ 1 - r²/(4n).
const SERIES_START: f64 = 1e-4;

/// Number of uniformly spaced table samples stored per profile.
const TABLE_SAMPLES: usize = 4096;

/// Integrator used for the profile solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileIntegrator {
    /// Classical fixed-step RK4 with step halving until the zero
    /// location stabilizes.
    Rk4,
    /// Dormand–Prince embedded 5(4) pair with adaptive steps.
    Dopri54,
}

/// One entry of the profile sample table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub f: f64,
    pub df: f64,
}

/// The rescaled profile with its sample table and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarProfile {
    dimension: usize,
    support_radius: f64,
    peak: f64,
    samples: Vec<ProfileSample>,
    ode_residual_sup: f64,
}

#[derive(Clone, Copy)]
struct State {
    f: f64,
    g: f64,
}

#[inline]
fn rhs(n: f64, r: f64, s: State) -> State {
    State {
        f: s.g,
        g: -((n - 1.0) / r - 0.5 * r) * s.g - 0.5 * s.f,
    }
}

#[inline]
fn rk4_step(n: f64, r: f64, s: State, h: f64) -> State {
    let k1 = rhs(n, r, s);
    let k2 = rhs(
        n,
        r + 0.5 * h,
        State { f: s.f + 0.5 * h * k1.f, g: s.g + 0.5 * h * k1.g },
    );
    let k3 = rhs(
        n,
        r + 0.5 * h,
        State { f: s.f + 0.5 * h * k2.f, g: s.g + 0.5 * h * k2.g },
    );
    let k4 = rhs(n, r + h, State { f: s.f + h * k3.f, g: s.g + h * k3.g });
    State {
        f: s.f + h / 6.0 * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f),
        g: s.g + h / 6.0 * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g),
    }
}

fn series_state(n: f64, r: f64) -> State {
    State { f: 1.0 - r * r / (4.0 * n), g: -r / (2.0 * n) }
}

/// March with fixed RK4 steps until f changes sign; return the bracketing
/// interval `(r_lo, state_lo, r_hi)`.
fn bracket_zero_rk4(n: f64, h: f64) -> Result<(f64, State, f64)> {
    let mut r = SERIES_START;
    let mut s = series_state(n, r);
    while r < SEARCH_CAP {
        let s_next = rk4_step(n, r, s, h);
        if s_next.f <= 0.0 {
            return Ok((r, s, r + h));
        }
        r += h;
        s = s_next;
    }
    Err(FlameError::ProfileNotFound { dimension: n as usize, search_cap: SEARCH_CAP })
}

/// Bisection for the zero inside a bracketing step; the trial value at
/// the midpoint is produced by a single RK4 step from the left state, so
/// the local error stays at one-step size.
fn bisect_zero(n: f64, r_lo: f64, s_lo: State, r_hi: f64, tol: f64) -> (f64, State) {
    let mut lo = r_lo;
    let mut hi = r_hi;
    let eval = |r: f64| rk4_step(n, r_lo, s_lo, r - r_lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid).f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    (r, eval(r))
}

/// Zero of the unit profile (f(0)=1) with fixed step `h`.
fn unit_zero_rk4(n: f64, h: f64, tol: f64) -> Result<(f64, State)> {
    let (r_lo, s_lo, r_hi) = bracket_zero_rk4(n, h)?;
    Ok(bisect_zero(n, r_lo, s_lo, r_hi, tol))
}

/// Dormand–Prince 5(4) step; returns (5th-order state, error estimate).
fn dopri_step(n: f64, r: f64, s: State, h: f64) -> (State, f64) {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // 4th-order weights (with the FSAL 7th stage)
    const E1: f64 = 5179.0 / 57600.0;
    const E3: f64 = 7571.0 / 16695.0;
    const E4: f64 = 393.0 / 640.0;
    const E5: f64 = -92097.0 / 339200.0;
    const E6: f64 = 187.0 / 2100.0;
    const E7: f64 = 1.0 / 40.0;

    let add = |s: State, c: f64, k: State| State { f: s.f + c * k.f, g: s.g + c * k.g };
    let k1 = rhs(n, r, s);
    let k2 = rhs(n, r + A21 * h, add(s, h * A21, k1));
    let k3 = rhs(n, r + 0.3 * h, add(add(s, h * A31, k1), h * A32, k2));
    let k4 = rhs(
        n,
        r + 0.8 * h,
        add(add(add(s, h * A41, k1), h * A42, k2), h * A43, k3),
    );
    let k5 = rhs(
        n,
        r + 8.0 / 9.0 * h,
        add(add(add(add(s, h * A51, k1), h * A52, k2), h * A53, k3), h * A54, k4),
    );
    let k6 = rhs(
        n,
        r + h,
        add(
            add(add(add(add(s, h * A61, k1), h * A62, k2), h * A63, k3), h * A64, k4),
            h * A65,
            k5,
        ),
    );
    let y5 = State {
        f: s.f + h * (B1 * k1.f + B3 * k3.f + B4 * k4.f + B5 * k5.f + B6 * k6.f),
        g: s.g + h * (B1 * k1.g + B3 * k3.g + B4 * k4.g + B5 * k5.g + B6 * k6.g),
    };
    let k7 = rhs(n, r + h, y5);
    let y4 = State {
        f: s.f
            + h * (E1 * k1.f + E3 * k3.f + E4 * k4.f + E5 * k5.f + E6 * k6.f + E7 * k7.f),
        g: s.g
            + h * (E1 * k1.g + E3 * k3.g + E4 * k4.g + E5 * k5.g + E6 * k6.g + E7 * k7.g),
    };
    let err = ((y5.f - y4.f).powi(2) + (y5.g - y4.g).powi(2)).sqrt();
    (y5, err)
}

/// Zero of the unit profile via the adaptive 5(4) pair.
fn unit_zero_dopri(n: f64, tol: f64) -> Result<(f64, State)> {
    let mut r = SERIES_START;
    let mut s = series_state(n, r);
    let mut h = 1e-3;
    let atol = tol.min(1e-10);
    while r < SEARCH_CAP {
        let (s_next, err) = dopri_step(n, r, s, h);
        if err > atol {
            h *= 0.5;
            continue;
        }
        if s_next.f <= 0.0 {
            // refine inside [r, r+h] with single RK4 trial steps
            return Ok(bisect_zero(n, r, s, r + h, tol.min(1e-12)));
        }
        r += h;
        s = s_next;
        if err < atol / 32.0 {
            h *= 2.0;
        }
    }
    Err(FlameError::ProfileNotFound { dimension: n as usize, search_cap: SEARCH_CAP })
}

/// Solve the profile for dimension `n`.
///
/// `tolerance` controls the zero search and the step-halving control;
/// accepted range `[1e-12, 1e-6]`.
pub fn solve_profile(n: usize, tolerance: f64) -> Result<SelfSimilarProfile> {
    solve_profile_with(n, tolerance, ProfileIntegrator::Rk4)
}

/// First zero of the unit profile at one fixed RK4 step size; used for
/// step-halving stability studies.
pub fn support_radius_at_step(n: usize, step: f64) -> Result<f64> {
    if n < 1 || !(step > 0.0) {
        return Err(FlameError::InvalidParameter(format!(
            "need n ≥ 1 and step > 0, got n={n}, step={step}"
        )));
    }
    unit_zero_rk4(n as f64, step, 1e-13).map(|(zero, _)| zero)
}

pub fn solve_profile_with(
    n: usize,
    tolerance: f64,
    integrator: ProfileIntegrator,
) -> Result<SelfSimilarProfile> {
    if n < 1 {
        return Err(FlameError::InvalidParameter(format!(
            "profile dimension must be at least 1, got {n}"
        )));
    }
    if !(1e-12..=1e-6).contains(&tolerance) {
        return Err(FlameError::InvalidParameter(format!(
            "profile tolerance must lie in [1e-12, 1e-6], got {tolerance}"
        )));
    }
    let nf = n as f64;
    let (zero, state_at_zero, final_h) = match integrator {
        ProfileIntegrator::Rk4 => {
            // step halving until the zero stabilizes to the tolerance
            let mut h = 1e-2;
            let (mut zero, _) = unit_zero_rk4(nf, h, tolerance.min(1e-12))?;
            loop {
                h *= 0.5;
                let (z2, s2) = unit_zero_rk4(nf, h, tolerance.min(1e-12))?;
                let stable = (z2 - zero).abs() <= tolerance.max(1e-10);
                zero = z2;
                if stable || h < 1e-5 {
                    break (zero, s2, h);
                }
            }
        }
        ProfileIntegrator::Dopri54 => {
            let (zero, state) = unit_zero_dopri(nf, tolerance)?;
            (zero, state, 2e-4)
        }
    };

    // rescale: the ODE is linear homogeneous, so λf is also a solution
    let scale = -1.0 / state_at_zero.g;
    let support_radius = zero;
    let peak = scale;

    let samples = tabulate(nf, support_radius, scale, final_h);
    let ode_residual_sup = table_residual(nf, &samples);

    Ok(SelfSimilarProfile {
        dimension: n,
        support_radius,
        peak,
        samples,
        ode_residual_sup,
    })
}

/// Re-integrate on a uniform grid of `TABLE_SAMPLES` nodes over [0, R],
/// storing the rescaled (f, f').
fn tabulate(n: f64, support_radius: f64, scale: f64, max_step: f64) -> Vec<ProfileSample> {
    let count = TABLE_SAMPLES;
    let dr = support_radius / (count - 1) as f64;
    let mut samples = Vec::with_capacity(count);
    samples.push(ProfileSample { r: 0.0, f: scale, df: 0.0 });

    let mut r = SERIES_START;
    let mut s = series_state(n, r);
    for j in 1..count {
        let target = j as f64 * dr;
        while r < target {
            let step = (target - r).min(max_step);
            s = rk4_step(n, r, s, step);
            r += step;
        }
        samples.push(ProfileSample { r: target, f: scale * s.f, df: scale * s.g });
    }
    // pin the endpoint to the boundary conditions it satisfies by
    // construction of the rescaling
    if let Some(last) = samples.last_mut() {
        last.f = last.f.max(0.0);
    }
    samples
}

/// Sup of |f'' + ((n-1)/r - r/2) f' + f/2| with f'' recovered by
/// fourth-order differencing of the tabulated f' (independent of the
/// integrator's own derivative route).
fn table_residual(n: f64, samples: &[ProfileSample]) -> f64 {
    let count = samples.len();
    if count < 5 {
        return f64::NAN;
    }
    let dr = samples[1].r - samples[0].r;
    let mut sup: f64 = 0.0;
    for j in 2..count - 2 {
        let d2f = (-samples[j + 2].df + 8.0 * samples[j + 1].df - 8.0 * samples[j - 1].df
            + samples[j - 2].df)
            / (12.0 * dr);
        let r = samples[j].r;
        let res = d2f + ((n - 1.0) / r - 0.5 * r) * samples[j].df + 0.5 * samples[j].f;
        sup = sup.max(res.abs());
    }
    sup
}

impl SelfSimilarProfile {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Support radius `R = a₂`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Peak value `a₁ = f(0)`.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn ode_residual_sup(&self) -> f64 {
        self.ode_residual_sup
    }

    /// `f(r)` by cubic Hermite interpolation of the sample table; zero
    /// beyond the support radius.  Radial symmetry: negative arguments
    /// evaluate at |r|.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.support_radius {
            return 0.0;
        }
        let dr = self.samples[1].r - self.samples[0].r;
        let j = ((r / dr) as usize).min(self.samples.len() - 2);
        let a = &self.samples[j];
        let b = &self.samples[j + 1];
        let t = (r - a.r) / dr;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        (h00 * a.f + h10 * dr * a.df + h01 * b.f + h11 * dr * b.df).max(0.0)
    }

    /// `f'(r)` by interpolation of the derivative table.
    pub fn eval_derivative(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.support_radius {
            return 0.0;
        }
        let dr = self.samples[1].r - self.samples[0].r;
        let j = ((r / dr) as usize).min(self.samples.len() - 2);
        let a = &self.samples[j];
        let b = &self.samples[j + 1];
        let t = (r - a.r) / dr;
        a.df * (1.0 - t) + b.df * t
    }

    /// The self-similar solution `U = √(T-t) f(ρ/√(T-t))` at distance
    /// `radius` from the focusing point.
    pub fn space_time_value(&self, radius: f64, t: f64, extinction_time: f64) -> Result<f64> {
        if t > extinction_time {
            return Err(FlameError::InvalidParameter(format!(
                "time {t} past extinction time {extinction_time}"
            )));
        }
        let remaining = extinction_time - t;
        if remaining == 0.0 {
            return Ok(0.0);
        }
        let root = remaining.sqrt();
        Ok(root * self.eval(radius / root))
    }
}

/// `U(x, t)` for a 2-D point.
pub fn self_similar_u(
    profile: &SelfSimilarProfile,
    x: (f64, f64),
    t: f64,
    extinction_time: f64,
) -> Result<f64> {
    profile.space_time_value(x.0.hypot(x.1), t, extinction_time)
}
