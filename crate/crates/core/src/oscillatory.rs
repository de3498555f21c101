//! Fourier-Airy double integrals
//! `φ[ξ](x, y) = c ∫ dζ ξ(ζ) ∫ e^{iθ_λ} ã dη`, `c = (2π)^{-(d+1)/2}`,
//! `θ_λ = y·ζ - η³/6 + (x + λ - ζ²/2)η`,
//! and their leading-order stationary-phase asymptotics.
//!
//! The η-integral is made absolutely convergent by integrating by parts with
//! `M a = a/(1+ℓ²) + i∂_η(ℓ a/(1+ℓ²))`, `ℓ = ∂_ηθ_λ = x + λ - ζ²/2 - η²/2`.
//! Amplitudes supply η-Taylor jets so `M^k` is applied exactly. Near the
//! stationary points `M^k a` grows like `η^k`, so `M` is only used where
//! `|ℓ| ≥ ℓ_cut`: the band `|ℓ| < ℓ_cut` is integrated as is, the complement
//! contributes its exact boundary terms, and the dropped `∫ e^{iθ} M^k a`
//! there is bounded by `∫ |M^k a|`. `ℓ_cut` grows until that bound meets
//! the tolerance.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::error::{domain, invalid, Error, Result};
use crate::fd;
use crate::linalg::{symmetric_eigenvalues, symmetric_norm};
use crate::parabolic::{theta_ex, CartesianPoint};
use crate::quadrature::{integrate, integrate_breaks, integrate_to_infinity, Tolerance};
use crate::special::airy_ai;

const CBRT2: f64 = 1.259_921_049_894_873_2;

/// `∫ e^{i(-η³/6 + uη)} dη = 2^{1/3} 2π Ai(-2^{1/3} u)`.
pub fn airy_eta_integral(u: f64) -> f64 {
    CBRT2 * 2.0 * PI * airy_ai(-CBRT2 * u)
}

/// `(2π)^{-(d+1)/2}` for `d = N + 1`.
pub fn normalization(d: usize) -> f64 {
    (2.0 * PI).powf(-(d as f64 + 1.0) / 2.0)
}

/// Smooth bump `ξ(ζ) = exp(-1/(1 - |ζ-ζ₀|²/ρ²))` supported in the closed ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseProfile<const N: usize> {
    pub center: [f64; N],
    pub radius: f64,
}

impl<const N: usize> TransverseProfile<N> {
    pub fn new(center: [f64; N], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("profile", "profile needs a finite center and radius > 0"));
        }
        Ok(TransverseProfile { center, radius })
    }

    pub fn value(&self, zeta: &[f64; N]) -> f64 {
        let s: f64 = zeta.iter().zip(&self.center).map(|(z, c)| (z - c) * (z - c)).sum::<f64>() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s)).exp()
        }
    }
}

/// An amplitude `ã(x, y; η, ζ)` that can be expanded in `η`.
pub trait Amplitude<const N: usize> {
    /// Taylor coefficients of `s ↦ ã(x, y; η + s, ζ)` up to degree `order`.
    fn eta_jet(&self, x: f64, y: &[f64; N], eta: f64, zeta: &[f64; N], order: usize) -> Vec<Complex64>;

    fn value(&self, x: f64, y: &[f64; N], eta: f64, zeta: &[f64; N]) -> Complex64 {
        self.eta_jet(x, y, eta, zeta, 0)[0]
    }

    /// Identically zero amplitudes short-circuit the quadrature.
    fn is_zero(&self) -> bool {
        false
    }
}

/// `ã ≡ 1`, the free eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitAmplitude;

impl<const N: usize> Amplitude<N> for UnitAmplitude {
    fn eta_jet(&self, _: f64, _: &[f64; N], _: f64, _: &[f64; N], order: usize) -> Vec<Complex64> {
        let mut j = vec![Complex64::zero(); order + 1];
        j[0] = Complex64::new(1.0, 0.0);
        j
    }
}

/// `ã ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroAmplitude;

impl<const N: usize> Amplitude<N> for ZeroAmplitude {
    fn eta_jet(&self, _: f64, _: &[f64; N], _: f64, _: &[f64; N], order: usize) -> Vec<Complex64> {
        vec![Complex64::zero(); order + 1]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `ã = Σ_j c_j η^j`, growth order `⌈deg/2⌉` in the symbol class.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPolynomial {
    pub coeffs: Vec<Complex64>,
}

impl<const N: usize> Amplitude<N> for EtaPolynomial {
    fn eta_jet(&self, _: f64, _: &[f64; N], eta: f64, _: &[f64; N], order: usize) -> Vec<Complex64> {
        // Repeated synthetic division gives the Taylor coefficients at η.
        let mut c = self.coeffs.clone();
        let mut out = vec![Complex64::zero(); order + 1];
        for slot in out.iter_mut() {
            if c.is_empty() {
                break;
            }
            let mut acc = Complex64::zero();
            let mut next = vec![Complex64::zero(); c.len().saturating_sub(1)];
            for j in (0..c.len()).rev() {
                acc = acc * eta + c[j];
                if j > 0 {
                    next[j - 1] = acc;
                }
            }
            *slot = acc;
            c = next;
        }
        out
    }
}

/// `α ã₁ + β ã₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination<A, B> {
    pub alpha: Complex64,
    pub first: A,
    pub beta: Complex64,
    pub second: B,
}

impl<const N: usize, A: Amplitude<N>, B: Amplitude<N>> Amplitude<N> for Combination<A, B> {
    fn eta_jet(&self, x: f64, y: &[f64; N], eta: f64, zeta: &[f64; N], order: usize) -> Vec<Complex64> {
        let a = self.first.eta_jet(x, y, eta, zeta, order);
        let b = self.second.eta_jet(x, y, eta, zeta, order);
        a.iter().zip(&b).map(|(a, b)| self.alpha * a + self.beta * b).collect()
    }
}

/// Controls for [`eval_phi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscSettings {
    /// Number of applications of `M`.
    pub depth: usize,
    /// Optional hard cap on `|η|` for the band. The band otherwise grows
    /// with `ℓ_cut`; a cap that stops the complement bound from converging is
    /// reported as an accuracy error.
    pub window: Option<f64>,
    /// Accuracy of each η-integral, including the certified band complement.
    pub eta_tol: Tolerance,
    /// Accuracy of the outer ζ quadrature.
    pub zeta_tol: Tolerance,
    /// Initial `ℓ_cut`; it is multiplied by 4 until the remainder bound passes.
    pub initial_cut: f64,
    pub max_cut: f64,
}

impl Default for OscSettings {
    fn default() -> Self {
        OscSettings {
            depth: 4,
            window: None,
            eta_tol: Tolerance::new(1e-11, 1e-9),
            zeta_tol: Tolerance::new(1e-13, 1e-9),
            initial_cut: 16.0,
            max_cut: 1e7,
        }
    }
}

/// The integral `φ_{λ,ã}` with its amplitude and controls.
#[derive(Debug, Clone, PartialEq)]
pub struct OscIntegralSpec<A> {
    pub lambda: f64,
    pub amplitude: A,
    pub settings: OscSettings,
}

impl<A> OscIntegralSpec<A> {
    pub fn new(lambda: f64, amplitude: A) -> Self {
        OscIntegralSpec {
            lambda,
            amplitude,
            settings: OscSettings::default(),
        }
    }
}

/// A value with the bound on the discarded band complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Truncated power series products, `out = a b` to `a.len()` terms.
fn series_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![Complex64::zero(); n];
    for i in 0..n {
        for j in 0..(n - i).min(b.len()) {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// `1/p` for a real series with `p[0] ≠ 0`.
fn series_recip(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut r = vec![0.0; n];
    r[0] = 1.0 / p[0];
    for k in 1..n {
        let mut s = 0.0;
        for j in 1..=k {
            s += p[j] * r[k - j];
        }
        r[k] = -s * r[0];
    }
    r
}

/// `(M^j a)(η)` for `j = 0..=k` from the Taylor jet of `a` at `η` (length `k + 1`).
fn ibp_chain(jet: &[Complex64], ell0: f64, eta: f64) -> Vec<Complex64> {
    let mut a = jet.to_vec();
    let mut out = Vec::with_capacity(jet.len());
    out.push(a[0]);
    while a.len() > 1 {
        let n = a.len();
        // ℓ(η + s) = ℓ0 - η s - s²/2
        let mut ell = vec![0.0; n];
        ell[0] = ell0;
        if n > 1 {
            ell[1] = -eta;
        }
        if n > 2 {
            ell[2] = -0.5;
        }
        let mut p = vec![0.0; n];
        for i in 0..n {
            for j in 0..(n - i) {
                p[i + j] += ell[i] * ell[j];
            }
        }
        p[0] += 1.0;
        let w: Vec<Complex64> = series_recip(&p).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let ellc: Vec<Complex64> = ell.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let aw = series_mul(&a, &w);
        let law = series_mul(&aw, &ellc);
        let i = Complex64::new(0.0, 1.0);
        a = (0..n - 1).map(|k| aw[k] + i * law[k + 1] * (k + 1) as f64).collect();
        out.push(a[0]);
    }
    out
}

/// `∫ e^{i(-η³/6 + Lη)} ã(x, y; η, ζ) dη` with `L = x + λ - ζ²/2`.
///
/// On the band `|ℓ| < ℓ_cut` the integrand is taken as is. On each
/// complementary interval `[α, β]` the integration by parts is done `k`
/// times with its boundary terms,
/// `∫_α^β e^{iψ} a = -Σ_{j<k} [G_j]_α^β + ∫_α^β e^{iψ} M^k a`,
/// `G_j = iℓ(1+ℓ²)^{-1} (M^j a) e^{iψ}`, and only the last integral is
/// dropped, certified by `∫ |M^k a|`.
pub fn eta_integral<const N: usize, A: Amplitude<N>>(
    amplitude: &A,
    x: f64,
    y: &[f64; N],
    zeta: &[f64; N],
    lambda: f64,
    settings: &OscSettings,
) -> Result<Certified> {
    if amplitude.is_zero() {
        return Ok(Certified {
            value: Complex64::zero(),
            tail_bound: 0.0,
        });
    }
    let big_l = x + lambda - zeta.iter().map(|z| z * z).sum::<f64>() / 2.0;
    let window = settings.window.unwrap_or(f64::INFINITY);
    let depth = settings.depth;
    let psi = |eta: f64| -eta * eta * eta / 6.0 + big_l * eta;
    let chain = |eta: f64| -> Vec<Complex64> {
        let jet = amplitude.eta_jet(x, y, eta, zeta, depth);
        ibp_chain(&jet, big_l - 0.5 * eta * eta, eta)
    };
    // Σ_{j<k} G_j(η).
    let boundary = |eta: f64| -> Complex64 {
        let ell = big_l - 0.5 * eta * eta;
        let c = chain(eta);
        let s: Complex64 = c[..depth].iter().sum();
        Complex64::new(0.0, ell / (1.0 + ell * ell)) * Complex64::from_polar(1.0, psi(eta)) * s
    };
    let integrand = |eta: f64| -> Complex64 { Complex64::from_polar(1.0, psi(eta)) * amplitude.value(x, y, eta, zeta) };
    let remainder = |eta: f64| -> f64 { chain(eta)[depth].norm() };
    let loose = Tolerance::new(settings.eta_tol.abs * 0.1, 1e-3);
    let mut cut = settings.initial_cut;
    loop {
        // Band |ℓ| < cut in |η|: (lo, hi), capped by the window.
        let lo = (2.0 * (big_l - cut).max(0.0)).sqrt().min(window);
        let hi = if big_l + cut > 0.0 {
            (2.0 * (big_l + cut)).sqrt().min(window)
        } else {
            0.0
        };
        let mut value = Complex64::zero();
        let mut bound = 0.0;
        if hi > lo {
            let pieces = ((cut * (hi - lo)) / (2.0 * PI)).ceil().clamp(1.0, 4000.0) as usize;
            let seg = |a: f64, b: f64| -> Vec<f64> { (0..=pieces).map(|j| a + (b - a) * j as f64 / pieces as f64).collect() };
            let band_tol = settings.eta_tol.with_max_intervals(pieces * 16 + 400);
            if lo == 0.0 {
                value += integrate_breaks(integrand, &seg(-hi, hi), band_tol)?.value;
            } else {
                value += integrate_breaks(integrand, &seg(lo, hi), band_tol)?.value;
                value += integrate_breaks(integrand, &seg(-hi, -lo), band_tol)?.value;
                // Inner gap [-lo, lo].
                value -= boundary(lo) - boundary(-lo);
                bound += integrate(remainder, -lo, lo, loose)?.value;
            }
            // Outer pieces (-∞, -hi] and [hi, ∞).
            value -= boundary(-hi);
            value += boundary(hi);
            bound += integrate_to_infinity(remainder, hi, loose)?.value
                + integrate_to_infinity(|e: f64| remainder(-e), hi, loose)?.value;
        } else {
            bound += integrate_to_infinity(remainder, 0.0, loose)?.value
                + integrate_to_infinity(|e: f64| remainder(-e), 0.0, loose)?.value;
        }
        let requested = settings.eta_tol.abs.max(settings.eta_tol.rel * value.norm());
        if bound <= requested {
            return Ok(Certified {
                value,
                tail_bound: bound,
            });
        }
        if cut >= settings.max_cut || (hi >= window && lo == 0.0) {
            return Err(Error::Accuracy {
                op: "eta integral band complement",
                achieved: bound,
                requested,
            });
        }
        cut *= 4.0;
    }
}

/// `∫ e^{i(-η³/6 + uη)} dη` by the integration-by-parts path (no Airy function).
pub fn cubic_phase_integral(u: f64, settings: &OscSettings) -> Result<Certified> {
    eta_integral::<1, _>(&UnitAmplitude, u, &[0.0], &[0.0], 0.0, settings)
}

/// Adaptive quadrature over the ball `|ζ - center| ≤ radius`, one coordinate at a time.
fn integrate_ball<const N: usize, F>(center: &[f64; N], radius: f64, tol: Tolerance, f: &mut F) -> Result<Complex64>
where
    F: FnMut(&[f64; N]) -> Result<Complex64>,
{
    let mut z = *center;
    ball_level(0, radius * radius, center, &mut z, tol, f)
}

fn ball_level<const N: usize, F>(
    j: usize,
    r2: f64,
    center: &[f64; N],
    z: &mut [f64; N],
    tol: Tolerance,
    f: &mut F,
) -> Result<Complex64>
where
    F: FnMut(&[f64; N]) -> Result<Complex64>,
{
    if j == N {
        return f(z);
    }
    let half = r2.max(0.0).sqrt();
    if half == 0.0 {
        return Ok(Complex64::zero());
    }
    let mut failure = None;
    let est = integrate(
        |s: f64| {
            if failure.is_some() {
                return Complex64::zero();
            }
            z[j] = center[j] + s;
            match ball_level(j + 1, r2 - s * s, center, z, tol, f) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    Complex64::zero()
                }
            }
        },
        -half,
        half,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est?.value)
}

/// `c ∫ ξ(ζ) e^{iy·ζ} 2^{1/3}2π Ai(-2^{1/3}(x + λ - ζ²/2)) dζ`.
pub fn free_eigenfunction<const N: usize>(
    x: f64,
    y: &[f64; N],
    lambda: f64,
    profile: &TransverseProfile<N>,
    tol: Tolerance,
) -> Result<Complex64> {
    let c = normalization(N + 1);
    let mut f = |z: &[f64; N]| -> Result<Complex64> {
        let xi = profile.value(z);
        if xi == 0.0 {
            return Ok(Complex64::zero());
        }
        let phase: f64 = y.iter().zip(z).map(|(a, b)| a * b).sum();
        let u = x + lambda - z.iter().map(|v| v * v).sum::<f64>() / 2.0;
        Ok(Complex64::from_polar(xi * airy_eta_integral(u), phase))
    };
    Ok(integrate_ball(&profile.center, profile.radius, tol, &mut f)? * c)
}

/// `φ_{λ,ã}[ξ](x, y)` with the summed complement bound of the η-integrals.
pub fn eval_phi<const N: usize, A: Amplitude<N>>(
    spec: &OscIntegralSpec<A>,
    profile: &TransverseProfile<N>,
    x: f64,
    y: &[f64; N],
) -> Result<Certified> {
    if spec.amplitude.is_zero() {
        return Ok(Certified {
            value: Complex64::zero(),
            tail_bound: 0.0,
        });
    }
    let c = normalization(N + 1);
    let mut worst: f64 = 0.0;
    let mut f = |z: &[f64; N]| -> Result<Complex64> {
        let xi = profile.value(z);
        if xi == 0.0 {
            return Ok(Complex64::zero());
        }
        let inner = eta_integral(&spec.amplitude, x, y, z, spec.lambda, &spec.settings)?;
        worst = worst.max(inner.tail_bound * xi);
        let phase: f64 = y.iter().zip(z).map(|(a, b)| a * b).sum();
        Ok(Complex64::from_polar(xi, phase) * inner.value)
    };
    let value = integrate_ball(&profile.center, profile.radius, spec.settings.zeta_tol, &mut f)? * c;
    let volume = ball_volume(N, profile.radius);
    Ok(Certified {
        value,
        tail_bound: c * worst * volume,
    })
}

fn ball_volume(n: usize, r: f64) -> f64 {
    PI.powf(n as f64 / 2.0) / crate::special::gamma(n as f64 / 2.0 + 1.0) * r.powi(n as i32)
}

/// Both critical points of `θ_λ` and the scale `h = (2x)^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryData<const N: usize> {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub zeta_plus: [f64; N],
    pub zeta_minus: [f64; N],
    pub h: f64,
    /// Largest residual of the energy and velocity relations.
    pub residual: f64,
}

/// Profile and direction for the first-order convergence study in `d = 2`.
/// The support `[0.1, 2.9]` contains `ω` but not `-ω`, so only the plus
/// branch is present and the relative error does not see interference
/// between the branches.
pub const CONVERGENCE_CENTER: f64 = 1.5;
pub const CONVERGENCE_RADIUS: f64 = 1.4;
pub const CONVERGENCE_OMEGA: f64 = 1.5;

/// Residual tolerance for the critical-point equations, relative to `max(1, x + λ)`.
pub const STATIONARY_TOL: f64 = 1e-12;

/// `η± = ±√(x+λ + √((x+λ)² - y²))`, `ζ± = y/η±`.
pub fn stationary_points<const N: usize>(x: f64, y: &[f64; N], lambda: f64) -> Result<StationaryData<N>> {
    let xl = x + lambda;
    let y2: f64 = y.iter().map(|v| v * v).sum();
    if !(x > 0.0) || !(xl > y2.sqrt()) {
        return Err(domain("stationary_points", "requires x > 0 and x + lambda > |y|"));
    }
    let eta = (xl + ((xl - y2.sqrt()) * (xl + y2.sqrt())).sqrt()).sqrt();
    let mut zp = [0.0; N];
    let mut zm = [0.0; N];
    for i in 0..N {
        zp[i] = y[i] / eta;
        zm[i] = -y[i] / eta;
    }
    let z2: f64 = zp.iter().map(|v| v * v).sum();
    let energy = (eta * eta / 2.0 + z2 / 2.0 - xl).abs();
    let velocity = (0..N).map(|i| (y[i] - eta * zp[i]).abs()).fold(0.0, f64::max);
    let residual = energy.max(velocity);
    if residual > STATIONARY_TOL * xl.max(1.0) {
        return Err(Error::Accuracy {
            op: "stationary point relations",
            achieved: residual,
            requested: STATIONARY_TOL * xl.max(1.0),
        });
    }
    Ok(StationaryData {
        eta_plus: eta,
        eta_minus: -eta,
        zeta_plus: zp,
        zeta_minus: zm,
        h: (2.0 * x).powf(-0.5),
        residual,
    })
}

/// The two branch contributions of the leading asymptotics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingTerms {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl LeadingTerms {
    pub fn total(&self) -> Complex64 {
        self.plus + self.minus
    }
}

/// `(e^{∓iπd/4}/√(2π)) h^{d/2} e^{±iθ_ex(x+λ, y)} ξ(±hy) ã(x, y; ±1/h, ±hy)`.
pub fn leading_asymptotics<const N: usize, A: Amplitude<N>>(
    x: f64,
    y: &[f64; N],
    lambda: f64,
    profile: &TransverseProfile<N>,
    amplitude: &A,
) -> Result<LeadingTerms> {
    let data = stationary_points(x, y, lambda)?;
    let h = data.h;
    let d = (N + 1) as f64;
    let theta = theta_ex(&CartesianPoint::new(x + lambda, *y))?;
    let pre = h.powf(d / 2.0) / (2.0 * PI).sqrt();
    let branch = |s: f64| -> Complex64 {
        let mut z = [0.0; N];
        for i in 0..N {
            z[i] = s * h * y[i];
        }
        let xi = profile.value(&z);
        if xi == 0.0 {
            return Complex64::zero();
        }
        let a = amplitude.value(x, y, s / h, &z);
        Complex64::from_polar(pre * xi, s * (theta - PI * d / 4.0)) * a
    };
    Ok(LeadingTerms {
        plus: branch(1.0),
        minus: branch(-1.0),
    })
}

/// Hessian of `hθ_λ` in `z = (η, ζ)` at the plus stationary point.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianCheck {
    pub matrix: Vec<Vec<f64>>,
    /// `‖A + I‖` (spectral norm).
    pub distance: f64,
    /// Number of positive minus number of negative eigenvalues.
    pub signature: i32,
    pub h: f64,
}

/// Finite-difference step in `z`; the phase is cubic, so the 5-point stencil is exact up to rounding.
const HESSIAN_STEP: f64 = 0.1;

pub fn hessian_at_stationary<const N: usize>(x: f64, y: &[f64; N], lambda: f64) -> Result<HessianCheck> {
    let data = stationary_points(x, y, lambda)?;
    let h = data.h;
    let mut phase = |z: &[f64]| -> f64 {
        let eta = z[0];
        let zeta = &z[1..];
        let z2: f64 = zeta.iter().map(|v| v * v).sum();
        let yz: f64 = y.iter().zip(zeta).map(|(a, b)| a * b).sum();
        h * (yz - eta * eta * eta / 6.0 + (x + lambda - z2 / 2.0) * eta)
    };
    let mut z = vec![data.eta_plus];
    z.extend_from_slice(&data.zeta_plus);
    let matrix = fd::hessian(&mut phase, &z, HESSIAN_STEP);
    let mut shifted = matrix.clone();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let eig = symmetric_eigenvalues(&matrix);
    let signature = eig.iter().map(|&e| if e > 0.0 { 1 } else if e < 0.0 { -1 } else { 0 }).sum();
    Ok(HessianCheck {
        distance: symmetric_norm(&shifted),
        matrix,
        signature,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit;
    use crate::special::AI_ZERO;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    /// Independent oracle: the contour through 0 along the rays `s e^{-iπ/6}` and `-s e^{iπ/6}`.
    fn contour_oracle(u: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let g = |eta: Complex64| (i * (-eta * eta * eta / 6.0 + eta * u)).exp();
        let right = Complex64::from_polar(1.0, -PI / 6.0);
        let left = -Complex64::from_polar(1.0, PI / 6.0);
        let tol = Tolerance::new(1e-8, 1e-9);
        let r = integrate(|s: f64| g(right * s) * right, 0.0, 10.0, tol).unwrap().value;
        let l = integrate(|s: f64| g(left * s) * left, 0.0, 10.0, tol).unwrap().value;
        r - l
    }

    #[test]
    fn airy_path_value_at_zero() {
        let v = airy_eta_integral(0.0);
        assert!((v - CBRT2 * 2.0 * PI * AI_ZERO).abs() < 1e-14);
        assert!((v - 2.8105).abs() < 1e-4);
    }

    #[test]
    fn airy_path_matches_contour_and_ibp_quadrature() {
        let settings = OscSettings::default();
        for j in 0..=30 {
            let u = -5.0 + 0.5 * j as f64;
            let exact = Complex64::new(airy_eta_integral(u), 0.0);
            let contour = contour_oracle(u);
            assert!(close(contour, exact, 1e-6), "u = {u}: {contour} vs {exact}");
            let ibp = cubic_phase_integral(u, &settings).unwrap();
            assert!(close(ibp.value, exact, 1e-6), "u = {u}: {} vs {exact}", ibp.value);
        }
    }

    #[test]
    fn airy_path_decays_on_the_forbidden_side() {
        assert!(airy_eta_integral(-20.0) < 1e-20);
        assert!(airy_eta_integral(-20.0) > 0.0);
        assert!(airy_eta_integral(-40.0) < airy_eta_integral(-20.0) * 1e-30);
    }

    #[test]
    fn ibp_reduction_matches_closed_form_first_step() {
        // M 1 = 1/(1+ℓ²) + i ℓ'(1-ℓ²)/(1+ℓ²)² with ℓ' = -η.
        let (l0, eta) = (0.7, 1.3);
        let jet = [Complex64::new(1.0, 0.0), Complex64::zero()];
        let got = ibp_chain(&jet, l0, eta)[1];
        let p = 1.0 + l0 * l0;
        let expected = Complex64::new(1.0 / p, -eta * (1.0 - l0 * l0) / (p * p));
        assert!((got - expected).norm() < 1e-15);
    }

    #[test]
    fn polynomial_amplitude_jets_are_taylor_coefficients() {
        let a = EtaPolynomial {
            coeffs: vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 3.0)],
        };
        let jet = <EtaPolynomial as Amplitude<1>>::eta_jet(&a, 0.0, &[0.0], 2.0, &[0.0], 3);
        assert_eq!(jet[0], Complex64::new(5.0, 12.0));
        assert_eq!(jet[1], Complex64::new(2.0, 12.0));
        assert_eq!(jet[2], Complex64::new(0.0, 3.0));
        assert_eq!(jet[3], Complex64::zero());
    }

    #[test]
    fn eval_phi_with_unit_amplitude_matches_airy_path() {
        let profile = TransverseProfile::new([0.3], 0.5).unwrap();
        let spec = OscIntegralSpec::new(0.5, UnitAmplitude);
        for (x, y) in [(3.0, 1.0), (20.0, -4.0), (-1.0, 2.0)] {
            let a = eval_phi(&spec, &profile, x, &[y]).unwrap();
            let b = free_eigenfunction(x, &[y], 0.5, &profile, Tolerance::new(1e-14, 1e-11)).unwrap();
            assert!((a.value - b).norm() < 1e-5 * b.norm().max(1e-8), "{x},{y}: {} vs {b}", a.value);
            assert!(a.tail_bound < 1e-9);
        }
        let profile3 = TransverseProfile::new([0.2, -0.1], 0.4).unwrap();
        let a = eval_phi(&spec, &profile3, 6.0, &[1.0, 0.5]).unwrap();
        let b = free_eigenfunction(6.0, &[1.0, 0.5], 0.5, &profile3, Tolerance::new(1e-14, 1e-11)).unwrap();
        assert!((a.value - b).norm() < 1e-5 * b.norm(), "{} vs {b}", a.value);
    }

    #[test]
    fn zero_amplitude_gives_zero() {
        let profile = TransverseProfile::new([0.0], 1.0).unwrap();
        let v = eval_phi(&OscIntegralSpec::new(0.0, ZeroAmplitude), &profile, 10.0, &[1.0]).unwrap();
        assert_eq!(v.value, Complex64::zero());
    }

    #[test]
    fn even_profile_gives_even_values() {
        let profile = TransverseProfile::new([0.0, 0.0], 0.6).unwrap();
        let tol = Tolerance::new(1e-14, 1e-11);
        for (x, y) in [(4.0, [1.0, 2.0]), (12.0, [-3.0, 0.5])] {
            let a = free_eigenfunction(x, &y, 0.0, &profile, tol).unwrap();
            let b = free_eigenfunction(x, &[-y[0], -y[1]], 0.0, &profile, tol).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm().max(1e-12));
        }
    }

    #[test]
    fn deep_forbidden_region_is_negligible() {
        let profile = TransverseProfile::new([0.0], 0.5).unwrap();
        let v = free_eigenfunction(-20.0, &[0.0], 0.0, &profile, Tolerance::new(1e-16, 1e-10)).unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn non_stationary_region_decays_faster_than_fourth_power() {
        let profile = TransverseProfile::new([0.2], 0.5).unwrap();
        let spec = OscIntegralSpec::new(0.0, UnitAmplitude);
        // Ray direction with x < 0; x ≤ -2ρ² - 2|λ| along the whole ray.
        let (cx, cy) = (-0.6, 0.8);
        let mut s = Vec::new();
        let mut v = Vec::new();
        for r in [2.0, 3.0, 4.5, 6.0] {
            let val = eval_phi(&spec, &profile, cx * r, &[cy * r]).unwrap().value.norm();
            s.push(r);
            v.push(val.max(1e-300));
        }
        let fitted = fit::power_law(&s, &v).unwrap();
        assert!(fitted.slope < -4.0, "{fitted:?}, {v:?}");
    }

    #[test]
    fn stationary_points_examples() {
        let d = stationary_points(5.0, &[3.0], 0.0).unwrap();
        assert!((d.eta_plus - 3.0).abs() < 1e-15);
        assert!((d.zeta_plus[0] - 1.0).abs() < 1e-15);
        assert_eq!(d.eta_minus, -d.eta_plus);
        let d = stationary_points(2.0, &[0.0, 0.0], 0.0).unwrap();
        assert!((d.eta_plus - 2.0).abs() < 1e-15);
        assert_eq!(d.zeta_plus, [0.0, 0.0]);
        assert!(matches!(stationary_points(2.0, &[3.0], 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn stationary_eta_approaches_sqrt_2x() {
        // η⁺ - √(2x) = O(1/√(2x)) uniformly in |y| < C√(2x).
        let c = 0.9;
        let mut worst: f64 = 0.0;
        for x in [10.0, 100.0, 1e3, 1e4, 1e5] {
            let s = (2.0 * x).sqrt();
            for k in 0..=10 {
                let y = c * s * k as f64 / 10.0;
                let d = stationary_points(x, &[y], 0.0).unwrap();
                worst = worst.max((d.eta_plus - s).abs() * s);
            }
        }
        assert!(worst < 2.0, "{worst}");
    }

    #[test]
    fn leading_term_modulus_and_support() {
        let profile = TransverseProfile::new([0.5], 0.4).unwrap();
        let x = 200.0;
        let h = (2.0 * x).powf(-0.5);
        let y = [0.45 / h];
        let t = leading_asymptotics(x, &y, 0.0, &profile, &UnitAmplitude).unwrap();
        let expected = h / (2.0 * PI).sqrt() * profile.value(&[0.45]);
        assert!((t.plus.norm() - expected).abs() < 1e-14);
        assert_eq!(t.minus, Complex64::zero());
        let far = leading_asymptotics(x, &[2.0 / h], 0.0, &profile, &UnitAmplitude).unwrap();
        assert_eq!(far.total(), Complex64::zero());
    }

    #[test]
    fn leading_asymptotics_error_is_first_order() {
        let profile = TransverseProfile::new([CONVERGENCE_CENTER], CONVERGENCE_RADIUS).unwrap();
        let spec = OscIntegralSpec::new(0.0, UnitAmplitude);
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for x in [100.0, 400.0, 1600.0] {
            let h = (2.0 * x).powf(-0.5);
            let y = [CONVERGENCE_OMEGA / h];
            let lead = leading_asymptotics(x, &y, 0.0, &profile, &UnitAmplitude).unwrap().total();
            let phi = eval_phi(&spec, &profile, x, &y).unwrap().value;
            hs.push(h);
            errs.push((phi - lead).norm() / lead.norm());
        }
        let f = fit::power_law(&hs, &errs).unwrap();
        assert!((f.slope - 1.0).abs() < 0.3, "{f:?} {errs:?}");
    }

    #[test]
    fn hessian_on_axis_is_diagonal() {
        let c = hessian_at_stationary(50.0, &[0.0, 0.0], 0.0).unwrap();
        let h = c.h;
        let eta = 10.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { -eta * h } else { 0.0 };
                assert!((c.matrix[i][j] - expected).abs() < 1e-9, "{i}{j}: {}", c.matrix[i][j]);
            }
        }
        assert_eq!(c.signature, -3);
    }

    #[test]
    fn hessian_matches_closed_form_and_halves_under_quadrupling() {
        let omega = 0.4;
        let mut prev: Option<f64> = None;
        for x in [25.0f64, 100.0, 400.0, 1600.0] {
            let h = (2.0 * x).powf(-0.5);
            let y = [omega / h];
            let c = hessian_at_stationary(x, &y, 0.0).unwrap();
            let d = stationary_points(x, &y, 0.0).unwrap();
            let closed = [[-d.eta_plus * h, -d.zeta_plus[0] * h], [-d.zeta_plus[0] * h, -d.eta_plus * h]];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((c.matrix[i][j] - closed[i][j]).abs() < 1e-9);
                }
            }
            assert_eq!(c.signature, -2);
            if let Some(p) = prev {
                assert!((p / c.distance - 2.0).abs() < 0.1, "{p} {}", c.distance);
            }
            prev = Some(c.distance);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn eval_phi_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x in 2.0f64..15.0, y in -3.0f64..3.0) {
            let profile = TransverseProfile::new([0.1], 0.5).unwrap();
            let p1 = EtaPolynomial { coeffs: vec![Complex64::new(1.0, 0.0)] };
            let p2 = EtaPolynomial { coeffs: vec![Complex64::new(0.0, 0.5), Complex64::new(0.2, 0.0)] };
            let combo = Combination {
                alpha: Complex64::new(a, 0.0),
                first: p1.clone(),
                beta: Complex64::new(b, 0.0),
                second: p2.clone(),
            };
            let v1 = eval_phi(&OscIntegralSpec::new(0.0, p1), &profile, x, &[y]).unwrap().value;
            let v2 = eval_phi(&OscIntegralSpec::new(0.0, p2), &profile, x, &[y]).unwrap().value;
            let vc = eval_phi(&OscIntegralSpec::new(0.0, combo), &profile, x, &[y]).unwrap().value;
            let scale = v1.norm() * a.abs() + v2.norm() * b.abs();
            prop_assert!((vc - (v1 * a + v2 * b)).norm() <= 1e-7 * scale.max(1e-12));
        }
    }
}
