//! The regularizing reaction kernel β and the scaled sink term.
//!
//! β is a nonnegative smooth bump supported on `[0, 1]` and normalized to
//! mass `1/2`; the PDE consumes the solution through the sink
//! `(1/ε) β(u/ε)`, which is active only inside the reaction layer
//! `0 < u < ε`.

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

/// Tolerance for the normalization quadrature run at construction.
const QUADRATURE_TOL: f64 = 1e-12;

/// Shape of the bump before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelShape {
    /// `exp(-1/(s(1-s)))` on (0,1): C-infinity, symmetric about 1/2.
    SmoothBump,
    /// `30 s^2 (1-s)^2` on (0,1): C^1 at the endpoints, used to test
    /// insensitivity of the limits to the kernel choice.
    PolyBump,
}

impl KernelShape {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "smooth_bump" => Ok(Self::SmoothBump),
            "poly_bump" => Ok(Self::PolyBump),
            other => Err(FlameError::InvalidParameter(format!(
                "unknown kernel '{other}' (expected smooth_bump or poly_bump)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SmoothBump => "smooth_bump",
            Self::PolyBump => "poly_bump",
        }
    }

    fn raw(&self, s: f64) -> f64 {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        match self {
            Self::SmoothBump => (-1.0 / (s * (1.0 - s))).exp(),
            Self::PolyBump => 30.0 * s * s * (1.0 - s) * (1.0 - s),
        }
    }

    fn raw_derivative(&self, s: f64) -> f64 {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        match self {
            Self::SmoothBump => {
                let w = s * (1.0 - s);
                (-1.0 / w).exp() * (1.0 - 2.0 * s) / (w * w)
            }
            Self::PolyBump => 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        }
    }
}

/// A normalized reaction kernel with cached stiffness data.
#[derive(Debug, Clone)]
pub struct BetaKernel {
    shape: KernelShape,
    normalization: f64,
    quadrature_tolerance: f64,
    derivative_bound: f64,
}

impl BetaKernel {
    /// Default kernel: the smooth bump.
    pub fn smooth_bump() -> Self {
        Self::with_shape(KernelShape::SmoothBump)
    }

    pub fn poly_bump() -> Self {
        Self::with_shape(KernelShape::PolyBump)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::with_shape(KernelShape::from_name(name)?))
    }

    pub fn with_shape(shape: KernelShape) -> Self {
        let raw_mass = adaptive_simpson(|s| shape.raw(s), 0.0, 1.0, QUADRATURE_TOL);
        let normalization = 0.5 / raw_mass;
        let derivative_bound = sup_abs_derivative(shape, normalization);
        let kernel = Self {
            shape,
            normalization,
            quadrature_tolerance: QUADRATURE_TOL,
            derivative_bound,
        };
        // re-verify the mass at construction
        let mass = kernel.mass();
        assert!(
            (mass - 0.5).abs() < 1e-10,
            "kernel normalization failed: mass {mass}"
        );
        kernel
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn quadrature_tolerance(&self) -> f64 {
        self.quadrature_tolerance
    }

    /// β(s): zero outside (0,1), the normalized bump inside.
    #[inline]
    pub fn beta(&self, s: f64) -> f64 {
        self.normalization * self.shape.raw(s)
    }

    /// β'(s) in closed form.
    pub fn beta_derivative(&self, s: f64) -> f64 {
        self.normalization * self.shape.raw_derivative(s)
    }

    /// Mass `∫_0^1 β`, recomputed by quadrature.
    pub fn mass(&self) -> f64 {
        adaptive_simpson(|s| self.beta(s), 0.0, 1.0, self.quadrature_tolerance)
    }

    /// The sink `(1/eps) β(u/eps)`; the PDE step subtracts this value.
    pub fn reaction_sink(&self, u: f64, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(FlameError::InvalidParameter(format!(
                "reaction scale eps must be positive, got {eps}"
            )));
        }
        Ok(self.beta(u / eps) / eps)
    }

    /// Cached `sup |β'|`, the stiffness scale of the sink.
    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }
}

/// `sup_{(0,1)} |β'|` by dense sampling plus golden-section refinement.
fn sup_abs_derivative(shape: KernelShape, normalization: f64) -> f64 {
    let g = |s: f64| (normalization * shape.raw_derivative(s)).abs();
    let samples = 4096;
    let mut best_s = 0.25;
    let mut best = 0.0;
    for i in 1..samples {
        let s = i as f64 / samples as f64;
        let v = g(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    let step = 1.0 / samples as f64;
    golden_section_max(g, (best_s - step).max(0.0), (best_s + step).min(1.0)).max(best)
}

fn golden_section_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-14 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    gc.max(gd)
}

/// Recursive adaptive Simpson quadrature.
fn adaptive_simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth >= 50 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth + 1)
                + recurse(f, m, b, right, tol / 2.0, depth + 1)
        }
    }
    recurse(f, a, b, simpson(f, a, b), tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // frozen from a high-precision quadrature of the raw bump:
    // ∫_0^1 exp(-1/(s(1-s))) ds = 0.0070298584066096562,
    // so c = 0.5/I and β(1/2) = c e^{-4}.
    const NORMALIZATION: f64 = 71.12518788854793;
    const BETA_HALF: f64 = 1.3027032572600139;
    const SUP_DBETA_SMOOTH: f64 = 5.517782574497299;
    // poly bump: 30∫ s²(1-s)² = 1 ⇒ c' = 1/2; sup|β'| = 5√3/3.
    const SUP_DBETA_POLY: f64 = 2.8867513459481288;

    #[test]
    fn zero_outside_support() {
        let k = BetaKernel::smooth_bump();
        assert_eq!(k.beta(1.5), 0.0);
        assert_eq!(k.beta(-0.1), 0.0);
        assert_eq!(k.beta(0.0), 0.0);
        assert_eq!(k.beta(1.0), 0.0);
        assert!(k.beta(0.5) > 0.0);
    }

    #[test]
    fn mass_is_one_half() {
        for k in [BetaKernel::smooth_bump(), BetaKernel::poly_bump()] {
            assert!((k.mass() - 0.5).abs() < 1e-10, "{:?}", k.shape());
        }
    }

    #[test]
    fn normalization_matches_quadrature_oracle() {
        let k = BetaKernel::smooth_bump();
        assert!(
            (k.normalization() - NORMALIZATION).abs() < 1e-9 * NORMALIZATION,
            "c = {}",
            k.normalization()
        );
        let p = BetaKernel::poly_bump();
        assert!((p.normalization() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn symmetric_about_one_half() {
        let k = BetaKernel::smooth_bump();
        for i in 1..200 {
            let s = i as f64 / 200.0;
            assert!((k.beta(s) - k.beta(1.0 - s)).abs() <= 1e-14 * k.beta(s).max(1.0));
        }
    }

    #[test]
    fn sink_outside_layer_is_zero() {
        let k = BetaKernel::smooth_bump();
        let eps = 0.05;
        assert_eq!(k.reaction_sink(2.0 * eps, eps).unwrap(), 0.0);
        assert_eq!(k.reaction_sink(0.0, eps).unwrap(), 0.0);
        assert_eq!(k.reaction_sink(eps, eps).unwrap(), 0.0);
    }

    #[test]
    fn sink_matches_direct_formula_at_half_eps() {
        let k = BetaKernel::smooth_bump();
        let eps = 0.02;
        let got = k.reaction_sink(eps / 2.0, eps).unwrap();
        let expect = BETA_HALF / eps;
        assert!((got - expect).abs() < 1e-8 * expect, "got {got}, expect {expect}");
    }

    #[test]
    fn sink_nonnegative_and_rejects_bad_eps() {
        let k = BetaKernel::smooth_bump();
        for i in 0..100 {
            let u = i as f64 * 0.001;
            assert!(k.reaction_sink(u, 0.03).unwrap() >= 0.0);
        }
        assert!(k.reaction_sink(0.5, 0.0).is_err());
        assert!(k.reaction_sink(0.5, -1.0).is_err());
    }

    #[test]
    fn derivative_bound_dominates_samples_and_is_stable() {
        let k = BetaKernel::smooth_bump();
        let bound = k.derivative_bound();
        assert!(bound > 0.0);
        assert!(bound >= k.beta_derivative(0.9).abs());
        // frozen oracle value from a high-precision maximization
        assert!(
            (bound - SUP_DBETA_SMOOTH).abs() < 1e-6 * SUP_DBETA_SMOOTH,
            "sup|β'| = {bound}"
        );
        // doubling the sampling density must not move the sup by more
        // than 1e-6 relative: compare against a denser direct scan
        let mut dense = 0.0f64;
        for i in 1..16384 {
            dense = dense.max(k.beta_derivative(i as f64 / 16384.0).abs());
        }
        assert!((bound - dense).abs() <= 1e-6 * bound + 1e-12);
        assert!(bound >= dense - 1e-12);
    }

    #[test]
    fn poly_derivative_bound_matches_closed_form() {
        let k = BetaKernel::poly_bump();
        assert!(
            (k.derivative_bound() - SUP_DBETA_POLY).abs() < 1e-6 * SUP_DBETA_POLY,
            "poly sup|β'| = {}",
            k.derivative_bound()
        );
    }

    #[test]
    fn kernel_lookup_by_name() {
        assert_eq!(
            BetaKernel::by_name("smooth_bump").unwrap().shape(),
            KernelShape::SmoothBump
        );
        assert_eq!(
            BetaKernel::by_name("poly_bump").unwrap().shape(),
            KernelShape::PolyBump
        );
        assert!(BetaKernel::by_name("gaussian").is_err());
    }
}
