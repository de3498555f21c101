//! Adaptive Gauss-Kronrod quadrature for real and complex integrands,
//! fixed Gauss-Legendre rules, and half-line helpers.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Kronrod abscissae (descending, last is the centre).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Stopping rule for adaptive integration: `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel with its 7-point Gauss embedded error estimate.
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = fc.magnitude() * WGK[7];
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk = resk + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let habs = half.abs();
    let value = resk * half;
    resabs *= habs;
    resasc *= habs;
    let mut err = ((resk - resg) * half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[a, b]`, starting from the given breakpoints.
pub fn integrate_breaks<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate<T>> {
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        total = total + v;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    loop {
        let target = tol.abs.max(tol.rel * total.magnitude());
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Accuracy {
                op: "adaptive quadrature",
                achieved: total_err,
                requested: target,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine resolution
            heap.push(worst);
            let target = tol.abs.max(tol.rel * total.magnitude());
            return Err(Error::Accuracy {
                op: "adaptive quadrature",
                achieved: total_err,
                requested: target,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // resum to shed accumulated cancellation in the running totals
    let mut value = T::zero();
    let mut error = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        error += p.error;
    }
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Globally adaptive integration over `[a, b]`.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<T>> {
    integrate_breaks(f, &[a, b], tol)
}

/// Integral over `[a, ∞)` through `t = a + s/(1-s)`.
pub fn integrate_to_infinity<T: QuadValue, F: FnMut(f64) -> T>(mut f: F, a: f64, tol: Tolerance) -> Result<Estimate<T>> {
    integrate(
        |s: f64| {
            if s >= 1.0 {
                return T::zero();
            }
            let om = 1.0 - s;
            let v = f(a + s / om);
            if v.magnitude() == 0.0 {
                T::zero()
            } else {
                v * (1.0 / (om * om))
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_0^∞ g(v) dv` for `g(v) ~ v^{p0}` at the origin and `g(v) ~ v^{-p_inf}` at infinity
/// (`p0 > -1`, `p_inf > 1`). Both endpoint powers are removed by substitution.
pub fn integrate_power_ends<F: FnMut(f64) -> f64>(mut g: F, p0: f64, p_inf: f64, tol: Tolerance) -> Result<Estimate<f64>> {
    if !(p0 > -1.0) || !(p_inf > 1.0) {
        return Err(Error::InvalidParameter {
            name: "endpoint powers",
            reason: "need p0 > -1 and p_inf > 1",
        });
    }
    // [0,1]: v = z^m, m = 1/(p0+1) turns v^{p0} dv into m dz
    let m0 = 1.0 / (p0 + 1.0);
    let head = integrate(
        |z: f64| {
            if z <= 0.0 {
                return lead_limit(&mut g, m0, p0);
            }
            let v = z.powf(m0);
            g(v) * m0 * z.powf(m0 - 1.0)
        },
        0.0,
        1.0,
        tol,
    )?;
    // [1,∞): v = 1/w, then w = z^m with m = 1/(p_inf - 1)
    let m1 = 1.0 / (p_inf - 1.0);
    let tail = integrate(
        |z: f64| {
            if z <= 0.0 {
                return 0.0;
            }
            let w = z.powf(m1);
            let v = 1.0 / w;
            g(v) / (w * w) * m1 * z.powf(m1 - 1.0)
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
        evaluations: head.evaluations + tail.evaluations,
    })
}

fn lead_limit<F: FnMut(f64) -> f64>(g: &mut F, m0: f64, p0: f64) -> f64 {
    // z -> 0 limit of g(z^m) m z^{m-1} = m * lim g(v) v^{-p0}
    let v = 1e-300f64.powf(m0).max(1e-150);
    m0 * g(v) * v.powf(-p0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (ascending nodes).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_on_polynomials() {
        for k in 0..=22u32 {
            let (v, _) = gk15(&mut |x: f64| x.powi(k as i32), -1.0, 1.0);
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-14, "degree {k}");
        }
        // the embedded Gauss rule is exact to degree 13
        let g: f64 = WG[3] + 2.0 * (WG[0] + WG[1] + WG[2]);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-12, 1e-12)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn complex_oscillatory_integral() {
        let est = integrate(
            |x: f64| Complex64::new(0.0, 10.0 * x).exp(),
            0.0,
            core::f64::consts::PI,
            Tolerance::new(1e-13, 1e-13),
        )
        .unwrap();
        // ∫ e^{10ix} over [0, π] = (e^{10iπ} - 1)/(10i) = 0
        assert!(est.value.norm() < 1e-12);
    }

    #[test]
    fn half_line_and_power_ends() {
        let est = integrate_to_infinity(|t: f64| (-t).exp(), 0.0, Tolerance::new(1e-13, 1e-13)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        // ∫_0^∞ v^{-1/2}/(1+v) dv = π
        let est = integrate_power_ends(|v| v.powf(-0.5) / (1.0 + v), -0.5, 1.5, Tolerance::new(1e-14, 1e-13)).unwrap();
        assert!((est.value - core::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_weights() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            if n >= 2 {
                assert!((m2 - 2.0 / 3.0).abs() < 1e-13);
            }
        }
    }
}
