//! Smooth cutoffs χ(· < κ), χ(· > κ), their complements, the convex
//! regularizer `breve_f`, and the weighted norm `⟨y⟩_m`.
//!
//! Every cutoff is a rescaled copy of one normalized CDF
//! `Φ(s) = ∫_{-1}^s b / Z` of the bump `b(s) = exp(-1/(1-s²))`.
//! `Φ` and its first moment are tabulated once on 64 panels and
//! completed inside a panel with 16-point Gauss-Legendre.

use alloc::boxed::Box;
use alloc::vec::Vec;
use num_traits::Float;
use once_cell::race::OnceBox;

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;

const PANELS: usize = 64;
const GL_POINTS: usize = 16;

/// Default position of the upper window edge, as a fraction of the way
/// from the plateau edge to the threshold.
pub const DEFAULT_WINDOW: f64 = 0.75;
/// Default mollification half-width of `breve_f`.
pub const DEFAULT_BREVE_WIDTH: f64 = 0.25;

/// The unnormalized bump, zero outside (-1, 1).
pub fn bump(s: f64) -> f64 {
    if s <= -1.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

struct Table {
    z: f64,
    /// Cumulative ∫ b and ∫ s b at panel starts (unnormalized).
    f0: Vec<f64>,
    f1: Vec<f64>,
    gx: Vec<f64>,
    gw: Vec<f64>,
}

impl Table {
    fn build() -> Self {
        let (gx, gw) = gauss_legendre(GL_POINTS);
        let h = 2.0 / PANELS as f64;
        let mut f0 = Vec::with_capacity(PANELS + 1);
        let mut f1 = Vec::with_capacity(PANELS + 1);
        let (mut a0, mut a1) = (0.0, 0.0);
        f0.push(0.0);
        f1.push(0.0);
        for p in 0..PANELS {
            let a = -1.0 + p as f64 * h;
            let (p0, p1) = panel_moments(&gx, &gw, a, a + h);
            a0 += p0;
            a1 += p1;
            f0.push(a0);
            f1.push(a1);
        }
        Table {
            z: a0,
            f0,
            f1,
            gx,
            gw,
        }
    }

    /// Normalized (∫_{-1}^s b, ∫_{-1}^s s' b) / Z.
    fn moments(&self, s: f64) -> (f64, f64) {
        if s <= -1.0 {
            return (0.0, 0.0);
        }
        if s >= 1.0 {
            return (1.0, self.f1[PANELS] / self.z);
        }
        let h = 2.0 / PANELS as f64;
        let p = (((s + 1.0) / h) as usize).min(PANELS - 1);
        let a = -1.0 + p as f64 * h;
        let (p0, p1) = panel_moments(&self.gx, &self.gw, a, s);
        ((self.f0[p] + p0) / self.z, (self.f1[p] + p1) / self.z)
    }
}

fn panel_moments(gx: &[f64], gw: &[f64], a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    for (x, w) in gx.iter().zip(gw) {
        let s = c + r * x;
        let v = w * bump(s);
        m0 += v;
        m1 += v * s;
    }
    (r * m0, r * m1)
}

fn table() -> &'static Table {
    static TABLE: OnceBox<Table> = OnceBox::new();
    TABLE.get_or_init(|| Box::new(Table::build()))
}

/// `Z = ∫ b`.
pub fn bump_mass() -> f64 {
    table().z
}

/// `Φ(s)`, increasing from 0 at s = -1 to 1 at s = 1.
pub fn bump_cdf(s: f64) -> f64 {
    table().moments(s).0
}

fn bump_first_moment(s: f64) -> f64 {
    table().moments(s).1
}

/// `Φ'(s)` and `Φ''(s)`.
fn bump_cdf_derivatives(s: f64) -> (f64, f64) {
    if s <= -1.0 || s >= 1.0 {
        return (0.0, 0.0);
    }
    let z = bump_mass();
    let b = bump(s);
    let one = 1.0 - s * s;
    (b / z, b * (-2.0 * s / (one * one)) / z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    /// χ(t < κ): 1 below the window, 0 from its upper edge on.
    Below,
    /// χ(t > κ) = χ(-t < -κ).
    Above,
}

/// One member of the cutoff family.
///
/// For `Below` with `κ > 0` the value is 1 for `t ≤ 3κ/4` and 0 for `t ≥ hi`
/// with `hi < κ`; for `κ < 0` the plateau ends at `4κ/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff {
    pub kind: CutoffKind,
    pub threshold: f64,
    /// Transition window of the underlying `Below` profile (in its own variable).
    pub window: (f64, f64),
}

impl SmoothCutoff {
    pub fn new(kind: CutoffKind, threshold: f64) -> Result<Self> {
        Self::with_window(kind, threshold, DEFAULT_WINDOW)
    }

    /// `fraction ∈ (0, 1)` places the upper edge at `lo + fraction·(κ - lo)`.
    pub fn with_window(kind: CutoffKind, threshold: f64, fraction: f64) -> Result<Self> {
        if threshold == 0.0 || !threshold.is_finite() {
            return Err(invalid("threshold", "cutoff threshold must be finite and nonzero"));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(invalid("cutoff.window", "window fraction must lie in (0, 1)"));
        }
        let k = match kind {
            CutoffKind::Below => threshold,
            CutoffKind::Above => -threshold,
        };
        let lo = if k > 0.0 { 0.75 * k } else { k * 4.0 / 3.0 };
        let hi = lo + fraction * (k - lo);
        Ok(SmoothCutoff {
            kind,
            threshold,
            window: (lo, hi),
        })
    }

    #[inline]
    fn arg(&self, t: f64) -> (f64, f64) {
        let t = match self.kind {
            CutoffKind::Below => t,
            CutoffKind::Above => -t,
        };
        let (lo, hi) = self.window;
        ((2.0 * t - lo - hi) / (hi - lo), 2.0 / (hi - lo))
    }

    pub fn value(&self, t: f64) -> f64 {
        let (s, _) = self.arg(t);
        1.0 - bump_cdf(s)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (s, ds) = self.arg(t);
        let sign = match self.kind {
            CutoffKind::Below => 1.0,
            CutoffKind::Above => -1.0,
        };
        -sign * bump_cdf_derivatives(s).0 * ds
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let (s, ds) = self.arg(t);
        -bump_cdf_derivatives(s).1 * ds * ds
    }
}

/// χ(t < κ).
pub fn chi_below(kappa: f64, t: f64) -> Result<f64> {
    Ok(SmoothCutoff::new(CutoffKind::Below, kappa)?.value(t))
}

/// χ(t > κ) = χ(-t < -κ).
pub fn chi_above(kappa: f64, t: f64) -> Result<f64> {
    Ok(SmoothCutoff::new(CutoffKind::Above, kappa)?.value(t))
}

/// χ^⊥(t < κ) = 1 - χ(t < κ).
pub fn chi_perp_below(kappa: f64, t: f64) -> Result<f64> {
    Ok(1.0 - chi_below(kappa, t)?)
}

/// χ^⊥(t > κ) = 1 - χ(t > κ).
pub fn chi_perp_above(kappa: f64, t: f64) -> Result<f64> {
    Ok(1.0 - chi_above(kappa, t)?)
}

/// Mollification of `max(1, t)` with the bump at half-width `w`.
///
/// Convex, `≥ max(1, t)`, equal to 1 for `t ≤ 1 - w` and to `t` for `t ≥ 1 + w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexRegularizer {
    pub width: f64,
}

impl Default for ConvexRegularizer {
    fn default() -> Self {
        ConvexRegularizer {
            width: DEFAULT_BREVE_WIDTH,
        }
    }
}

impl ConvexRegularizer {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 0.5) {
            return Err(invalid("breve_f.width", "half-width must lie in (0, 1/2]"));
        }
        Ok(ConvexRegularizer { width })
    }

    pub fn value(&self, t: f64) -> f64 {
        let w = self.width;
        let u = t - 1.0;
        if u <= -w {
            1.0
        } else if u >= w {
            t
        } else {
            let s = u / w;
            1.0 + u * bump_cdf(s) - w * bump_first_moment(s)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        bump_cdf((t - 1.0) / self.width)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        bump_cdf_derivatives((t - 1.0) / self.width).0 / self.width
    }
}

/// `breve_f` at the default half-width.
pub fn breve_f(t: f64) -> f64 {
    ConvexRegularizer::default().value(t)
}

/// `⟨y⟩_m = (m² + |y|²)^{1/2}`, defined for `m ≥ 1`.
pub fn weighted_norm(y: &[f64], m: u32) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "weighted norm needs m >= 1"));
    }
    let mf = m as f64;
    Ok((mf * mf + y.iter().map(|v| v * v).sum::<f64>()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};
    use proptest::prelude::*;

    #[test]
    fn cdf_matches_adaptive_quadrature() {
        let tol = Tolerance::new(1e-14, 1e-13);
        let z = integrate(bump, -1.0, 1.0, tol).unwrap().value;
        assert!((bump_mass() - z).abs() < 1e-14);
        for &s in &[-0.95, -0.5, -0.1, 0.0, 0.3, 0.77, 0.999] {
            let want = integrate(bump, -1.0, s, tol).unwrap().value / z;
            assert!((bump_cdf(s) - want).abs() < 1e-13, "s = {s}");
        }
        assert!((2.0 * bump_cdf(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_below_examples() {
        assert_eq!(chi_below(1.0, 0.5).unwrap(), 1.0);
        assert_eq!(chi_below(1.0, 1.1).unwrap(), 0.0);
        let v = chi_below(1.0, 0.9).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(chi_below(1.0, 0.91).unwrap() < v);
        assert!(chi_below(0.0, 0.5).is_err());
        // negative threshold: plateau up to 4κ/3, support below κ
        assert_eq!(chi_below(-1.0, -4.0 / 3.0).unwrap(), 1.0);
        assert_eq!(chi_below(-1.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn breve_f_examples() {
        assert_eq!(breve_f(0.0), 1.0);
        assert_eq!(breve_f(3.0), 3.0);
        let v = breve_f(1.0);
        assert!(v > 1.0 && v < 1.5);
        // oracle: (max(1, ·) * ρ_w)(1) by direct quadrature of the convolution
        let w = DEFAULT_BREVE_WIDTH;
        let tol = Tolerance::new(1e-14, 1e-13);
        let z = integrate(bump, -1.0, 1.0, tol).unwrap().value;
        let conv = integrate(|v: f64| (1.0f64).max(1.0 - v) * bump(v / w) / (w * z), -w, w, tol)
            .unwrap()
            .value;
        assert!((v - conv).abs() < 1e-13);
    }

    #[test]
    fn weighted_norm_examples() {
        assert_eq!(weighted_norm(&[0.0, 0.0], 3).unwrap(), 3.0);
        assert!(weighted_norm(&[3.0, 4.0], 0).is_err());
        assert!((weighted_norm(&[3.0, 4.0], 1).unwrap() - 26f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let c = SmoothCutoff::new(CutoffKind::Above, 2.0).unwrap();
        let h = 1e-5;
        for i in 0..40 {
            let t = -2.0 + 0.1 * i as f64;
            let d = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            assert!((c.derivative(t) - d).abs() < 1e-7, "t = {t}");
            let d2 = (c.derivative(t + h) - c.derivative(t - h)) / (2.0 * h);
            assert!((c.second_derivative(t) - d2).abs() < 1e-5, "t = {t}");
        }
        let r = ConvexRegularizer::default();
        for i in 0..30 {
            let t = 0.6 + 0.027 * i as f64;
            let d = (r.value(t + h) - r.value(t - h)) / (2.0 * h);
            assert!((r.derivative(t) - d).abs() < 1e-8);
            let d2 = (r.derivative(t + h) - r.derivative(t - h)) / (2.0 * h);
            assert!((r.second_derivative(t) - d2).abs() < 1e-5);
        }
    }

    fn kappa() -> impl Strategy<Value = f64> {
        prop_oneof![0.01f64..100.0, -100.0f64..-0.01]
    }

    proptest! {
        #[test]
        fn complement_sums_to_one(k in kappa(), t in -200.0f64..200.0) {
            prop_assert_eq!(chi_below(k, t).unwrap() + chi_perp_below(k, t).unwrap(), 1.0);
        }

        #[test]
        fn above_is_reflected_below(k in kappa(), t in -200.0f64..200.0) {
            prop_assert_eq!(chi_above(k, t).unwrap(), chi_below(-k, -t).unwrap());
        }

        #[test]
        fn plateau_support_and_range(k in kappa(), t in -200.0f64..200.0) {
            let v = chi_below(k, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            let plateau = if k > 0.0 { 0.75 * k } else { k * 4.0 / 3.0 };
            if t <= plateau { prop_assert_eq!(v, 1.0); }
            if t >= k { prop_assert_eq!(v, 0.0); }
        }

        #[test]
        fn monotone_with_bounded_slope(k in kappa(), t in -200.0f64..200.0, dt in 0.0f64..1.0) {
            let c = SmoothCutoff::new(CutoffKind::Below, k).unwrap();
            let (lo, hi) = c.window;
            let step = dt * (hi - lo);
            prop_assert!(c.value(t + step) <= c.value(t));
            // |χ'| ≤ 2 max Φ' / width, and max Φ' = e^{-1}/Z
            let bound = 2.0 * (-1.0f64).exp() / bump_mass() / (hi - lo);
            prop_assert!(c.derivative(t).abs() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn divided_differences_stay_finite(k in kappa(), s in 0.0f64..1.0) {
            let c = SmoothCutoff::new(CutoffKind::Below, k).unwrap();
            let (lo, hi) = c.window;
            let h = (hi - lo) / 50.0;
            let t0 = lo + s * (hi - lo);
            let v: Vec<f64> = (0..5).map(|i| c.value(t0 + i as f64 * h)).collect();
            let d4 = (v[4] - 4.0 * v[3] + 6.0 * v[2] - 4.0 * v[1] + v[0]) / h.powi(4);
            prop_assert!(d4.is_finite());
        }

        #[test]
        fn breve_f_is_convex_and_dominates(t1 in -3.0f64..4.0, a in 0.001f64..1.0, b in 0.001f64..1.0) {
            let t2 = t1 + a;
            let t3 = t2 + b;
            let (f1, f2, f3) = (breve_f(t1), breve_f(t2), breve_f(t3));
            let chord = f1 + (f3 - f1) * (t2 - t1) / (t3 - t1);
            prop_assert!(f2 <= chord + 1e-14);
            prop_assert!(f2 >= t2.max(1.0) - 1e-15);
            if t1 <= 0.5 { prop_assert_eq!(f1, 1.0); }
            if t3 >= 2.0 { prop_assert_eq!(f3, t3); }
        }
    }
}
