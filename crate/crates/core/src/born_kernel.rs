//! Scattering-kernel content that is computable in closed form or by
//! quadrature: the principal symbol
//! `t_psym(y) = -2i ∫₀^∞ q(x, -y)/√(2x) dx`, the Γ-constants of its
//! power-law asymptotics, the radial Fourier quantization
//! `T(s) = (2π)^{1-d} ∫ e^{iζ·y} t(y) dy`, the diagonal-singularity fit of
//! `T`, and the Born term whose symbol converges to `t_psym`.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::classical::Potential;
use crate::cutoffs::{chi_above, chi_below, CutoffKind, SmoothCutoff};
use crate::error::{domain, invalid, Error, Result};
use crate::fit::{self, LineFit};
use crate::oscillatory::Certified;
use crate::quadrature::{integrate, integrate_breaks, integrate_power_ends, integrate_to_infinity, Tolerance};
use crate::special::{bessel_j0, beta, gamma};

/// Smallest `|y|` at which symbols are evaluated.
pub const Y_FLOOR: f64 = 0.5;
/// Separation window of the singularity fit.
pub const FIT_WINDOW: (f64, f64) = (0.05, 0.5);
/// Separation at which the coefficient is read.
pub const REFERENCE_SEPARATION: f64 = 0.1;
/// Largest relative change of `T` on the fit window when `y_max` doubles.
pub const WINDOW_SENSITIVITY: f64 = 1e-2;

const TPSYM_TOL: Tolerance = Tolerance::new(1e-14, 1e-12);

/// `∫₀^∞ q(u², r) du` for a radial potential at transverse distance `r`,
/// with the tail past `U = 256 max(1, √r)` extrapolated from the local power
/// law of the integrand.
fn ray_integral(q: &Potential, r: f64) -> Result<Certified> {
    let r2 = r * r;
    let g = |u: f64| q.radial_value(u * u * u * u + r2);
    let knee = r.sqrt().max(1.0);
    let big_u = 256.0 * knee;
    let mut breaks = Vec::new();
    let mut b = 0.0;
    while b < big_u {
        breaks.push(b);
        b = if b == 0.0 { knee / 8.0 } else { 2.0 * b };
    }
    breaks.push(big_u);
    let head = integrate_breaks(g, &breaks, TPSYM_TOL)?;
    let (g1, g2, g4) = (g(big_u), g(2.0 * big_u), g(4.0 * big_u));
    if g1 == 0.0 {
        return Ok(Certified {
            value: Complex64::new(head.value, 0.0),
            tail_bound: head.error,
        });
    }
    let p_near = (g1 / g2).ln() / 2f64.ln();
    let p_far = (g2 / g4).ln() / 2f64.ln();
    if !(p_near > 1.05) || !(p_far > 1.05) {
        return Err(Error::Accuracy {
            op: "t_psym tail extrapolation",
            achieved: p_near.min(p_far),
            requested: 1.05,
        });
    }
    let tail = g1 * big_u / (p_near - 1.0);
    // the same extrapolation from 2U, plus the integral over [U, 2U] it skips
    let alt = g2 * 2.0 * big_u / (p_far - 1.0) + integrate(g, big_u, 2.0 * big_u, TPSYM_TOL)?.value;
    Ok(Certified {
        value: Complex64::new(head.value + tail, 0.0),
        tail_bound: (tail - alt).abs() + head.error,
    })
}

/// `t_psym(y) = -2√2 i ∫₀^∞ q(u², -y) du` (substitution `x = u²`).
pub fn t_psym_radial(r: f64, q: &Potential) -> Result<Certified> {
    if !(r >= Y_FLOOR) {
        return Err(domain("t_psym", "|y| below the floor 0.5"));
    }
    if q.is_zero() {
        return Ok(Certified {
            value: Complex64::zero(),
            tail_bound: 0.0,
        });
    }
    let i = ray_integral(q, r)?;
    Ok(Certified {
        value: Complex64::new(0.0, -2.0 * SQRT_2 * i.value.re),
        tail_bound: 2.0 * SQRT_2 * i.tail_bound,
    })
}

pub fn t_psym<const N: usize>(y: &[f64; N], q: &Potential) -> Result<Certified> {
    t_psym_radial(y.iter().map(|v| v * v).sum::<f64>().sqrt(), q)
}

/// `c₁ = 2^{-3/2} Γ(1/4) Γ(α/2 - 1/4)/Γ(α/2)`, so that
/// `∫₀^∞ κ|X|^{-α}/√(2x) dx = κ c₁ |y|^{1/2-α}`.
pub fn c1(alpha: f64) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(domain("c1", "needs alpha > 1/2"));
    }
    Ok(2f64.powf(-1.5) * gamma(0.25) * gamma(alpha / 2.0 - 0.25) / gamma(alpha / 2.0))
}

/// `c₂ = -i 2^{-α} π^{(1-d)/2} Γ(1/4) Γ(d/2 - 1/4 - α/2)/Γ(α/2)`, the
/// coefficient of `|ζ-ζ'|^{1/2+α-d}` in the kernel of the quantized
/// `κ|X|^{-α}` principal symbol.
pub fn c2(alpha: f64, d: usize) -> Result<Complex64> {
    if d < 2 {
        return Err(invalid("d", "dimension must be at least 2"));
    }
    let df = d as f64;
    if !(alpha > 0.5 && alpha < df - 0.5) {
        return Err(domain("c2", "needs 1/2 < alpha < d - 1/2"));
    }
    let m = 2f64.powf(-alpha) * PI.powf((1.0 - df) / 2.0) * gamma(0.25) * gamma(df / 2.0 - 0.25 - alpha / 2.0)
        / gamma(alpha / 2.0);
    Ok(Complex64::new(0.0, -m))
}

fn check_elebnd(s1: f64, s2: f64) -> Result<()> {
    if !(s2 > -1.0) || !(s2 + 1.0 - 2.0 * s1 < 0.0) {
        return Err(domain("elebnd", "needs s2 > -1 and s2 + 1 - 2 s1 < 0"));
    }
    Ok(())
}

/// `C = ½ B((s₂+1)/2, s₁-(s₂+1)/2)` in `∫₀^∞ (t²+f²)^{-s₁} t^{s₂} dt = C f^{s₂+1-2s₁}`.
pub fn elebnd_constant(s1: f64, s2: f64) -> Result<f64> {
    check_elebnd(s1, s2)?;
    let a = (s2 + 1.0) / 2.0;
    Ok(0.5 * beta(a, s1 - a))
}

/// `∫₀^∞ (t²+f²)^{-s₁} t^{s₂} dt` by quadrature.
pub fn elebnd_integral(s1: f64, s2: f64, f: f64) -> Result<f64> {
    check_elebnd(s1, s2)?;
    if !(f > 0.0) {
        return Err(invalid("f", "must be positive"));
    }
    let f2 = f * f;
    let g = |t: f64| (t * t + f2).powf(-s1) * t.powf(s2);
    Ok(integrate_power_ends(g, s2, 2.0 * s1 - s2, Tolerance::new(0.0, 1e-13))?.value)
}

/// `|∫₀^∞ (t²+f²)^{-s₁} t^{s₂} dt - C f^{s₂+1-2s₁}|`.
pub fn scaling_check(s1: f64, s2: f64, f: f64) -> Result<f64> {
    let c = elebnd_constant(s1, s2)?;
    Ok((elebnd_integral(s1, s2, f)? - c * f.powf(s2 + 1.0 - 2.0 * s1)).abs())
}

/// `ln(I(f₂)/I(f₁))/ln(f₂/f₁)` from two quadratures.
pub fn scaling_exponent(s1: f64, s2: f64, f1: f64, f2: f64) -> Result<f64> {
    Ok((elebnd_integral(s1, s2, f2)? / elebnd_integral(s1, s2, f1)?).ln() / (f2 / f1).ln())
}

/// Radial samples of a symbol `t(|y|)` on a uniform `ln|y|` grid.
///
/// The stored values are `t(r) r^{-k}`, which are slowly varying for a
/// symbol of order `k`; evaluation is four-point Lagrange in `ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub ln_r0: f64,
    pub step: f64,
    pub scaled: Vec<Complex64>,
    pub d: usize,
    pub order: f64,
}

impl SymbolGrid {
    pub fn sample<F: FnMut(f64) -> Result<Complex64>>(
        mut t: F,
        y_min: f64,
        y_max: f64,
        per_decade: usize,
        d: usize,
        order: f64,
    ) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(invalid("d", "quantization supports d = 2 and d = 3"));
        }
        if !(y_min > 0.0 && y_max > y_min) {
            return Err(invalid("y range", "needs 0 < y_min < y_max"));
        }
        if per_decade < 4 {
            return Err(invalid("per_decade", "at least 4 samples per decade"));
        }
        let ln_r0 = y_min.ln();
        let span = y_max.ln() - ln_r0;
        let n = ((span / 10f64.ln() * per_decade as f64).ceil() as usize).max(4);
        let step = span / n as f64;
        let mut scaled = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let r = (ln_r0 + step * j as f64).exp();
            scaled.push(t(r)? * r.powf(-order));
        }
        Ok(SymbolGrid {
            ln_r0,
            step,
            scaled,
            d,
            order,
        })
    }

    pub fn y_min(&self) -> f64 {
        self.ln_r0.exp()
    }

    pub fn y_max(&self) -> f64 {
        (self.ln_r0 + self.step * (self.scaled.len() - 1) as f64).exp()
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.iter().all(|v| v.is_zero())
    }

    /// `t(r)` for `r` inside the sampled range.
    pub fn eval(&self, r: f64) -> Complex64 {
        let n = self.scaled.len();
        let u = (r.ln() - self.ln_r0) / self.step;
        let i = (u.floor() as isize).clamp(1, n as isize - 3) as usize;
        let v = u - i as f64;
        // nodes at -1, 0, 1, 2 relative to i
        let w = [
            -v * (v - 1.0) * (v - 2.0) / 6.0,
            (v + 1.0) * (v - 1.0) * (v - 2.0) / 2.0,
            -(v + 1.0) * v * (v - 2.0) / 2.0,
            (v + 1.0) * v * (v - 1.0) / 6.0,
        ];
        let s: Complex64 = (0..4).map(|k| self.scaled[i - 1 + k] * w[k]).sum();
        s * r.powf(self.order)
    }
}

/// Annulus `χ(r > y_min) χ(r < y_max)` applied before quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizeWindow {
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for QuantizeWindow {
    fn default() -> Self {
        QuantizeWindow {
            y_min: Y_FLOOR,
            y_max: 16384.0,
        }
    }
}

impl QuantizeWindow {
    /// Support `[lo, hi]` of the window.
    fn support(&self) -> Result<(f64, f64)> {
        let inner = SmoothCutoff::new(CutoffKind::Above, self.y_min)?;
        let outer = SmoothCutoff::new(CutoffKind::Below, self.y_max)?;
        // Above is the Below profile in -t: its window is (-lo, -hi) in t
        Ok((-inner.window.1, outer.window.1))
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        Ok(chi_above(self.y_min, r)? * chi_below(self.y_max, r)?)
    }
}

/// `T(s)` for one separation `s > 0`: `(1/π) ∫ cos(sr) t w dr` for `d = 2`,
/// `(1/2π) ∫ J₀(sr) t w r dr` for `d = 3`.
pub fn quantize_at(grid: &SymbolGrid, window: &QuantizeWindow, s: f64) -> Result<Complex64> {
    if !(s > 0.0) {
        return Err(invalid("s", "separation must be positive"));
    }
    if grid.is_zero() {
        return Ok(Complex64::zero());
    }
    let (lo, hi) = window.support()?;
    if lo < grid.y_min() * (1.0 - 1e-12) || hi > grid.y_max() * (1.0 + 1e-12) {
        return Err(invalid("window", "window support exceeds the sampled range"));
    }
    let pieces = ((s * (hi - lo) / PI).ceil() as usize).max(4);
    let breaks: Vec<f64> = (0..=pieces).map(|j| lo + (hi - lo) * j as f64 / pieces as f64).collect();
    let w = |r: f64| chi_above(window.y_min, r).unwrap_or(0.0) * chi_below(window.y_max, r).unwrap_or(0.0);
    let f = |r: f64| match grid.d {
        2 => grid.eval(r) * ((s * r).cos() * w(r)),
        _ => grid.eval(r) * (bessel_j0(s * r) * w(r) * r),
    };
    // roundoff scales with ∫|f|, not with the (cancelling) result
    let l1: f64 = breaks.windows(2).map(|p| f(0.5 * (p[0] + p[1])).norm() * (p[1] - p[0])).sum();
    let tol = Tolerance::new(1e-11 * l1, 1e-9).with_max_intervals(pieces * 16 + 400);
    let norm = if grid.d == 2 { PI } else { 2.0 * PI };
    Ok(integrate_breaks(f, &breaks, tol)?.value / norm)
}

/// Kernel samples on a separation grid, with the change under `y_max → 2y_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSamples {
    pub s: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `T(s)` with `y_max` doubled.
    pub wide_values: Vec<Complex64>,
    /// `|T_{2y_max}(s) - T_{y_max}(s)|`.
    pub sensitivity: Vec<f64>,
    pub window: QuantizeWindow,
}

/// `s_j = 0.1 · 2^{j/4}`, `j = -5..=15`: contains the fit window, the
/// reference separation, and `2s` for every `s` in the window.
pub fn separation_grid() -> Vec<f64> {
    (-5..=15).map(|j| REFERENCE_SEPARATION * 2f64.powf(j as f64 / 4.0)).collect()
}

/// Quantize `grid` on `s` at `window` and at `y_max` doubled.
///
/// Fails if the relative change on the fit window exceeds [`WINDOW_SENSITIVITY`].
pub fn quantize_symbol(grid: &SymbolGrid, window: QuantizeWindow, s: &[f64]) -> Result<KernelSamples> {
    let wide = QuantizeWindow {
        y_min: window.y_min,
        y_max: 2.0 * window.y_max,
    };
    let mut values = Vec::with_capacity(s.len());
    let mut wide_values = Vec::with_capacity(s.len());
    let mut sensitivity = Vec::with_capacity(s.len());
    for &sj in s {
        let a = quantize_at(grid, &window, sj)?;
        let b = quantize_at(grid, &wide, sj)?;
        if sj >= FIT_WINDOW.0 && sj <= FIT_WINDOW.1 && (a - b).norm() > WINDOW_SENSITIVITY * a.norm() {
            return Err(Error::Accuracy {
                op: "quantize_symbol window sensitivity",
                achieved: (a - b).norm() / a.norm(),
                requested: WINDOW_SENSITIVITY,
            });
        }
        values.push(a);
        wide_values.push(b);
        sensitivity.push((a - b).norm());
    }
    Ok(KernelSamples {
        s: s.to_vec(),
        values,
        wide_values,
        sensitivity,
        window,
    })
}

/// Power-law fit of the kernel singularity `T(s) ≈ c s^p` on a separation window.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub s: Vec<f64>,
    pub values: Vec<Complex64>,
    pub exponent: f64,
    /// `c` read at `s_ref` with the pinned exponent `p₀`.
    pub coefficient: Complex64,
    pub pinned_exponent: f64,
    /// Root-mean-square log-log residual.
    pub residual: f64,
    pub window: (f64, f64),
    /// Exponent change under `y_max → 2y_max`, when measured.
    pub drift: Option<f64>,
}

/// Fit `|ΔT(s)| = |T(s) - T(2s)| ≈ |c (1 - 2^p)| s^p` on `window` (strictly
/// inside the sampled range, with `2s` sampled) and read
/// `c = ΔT(s_ref) / ((1 - 2^{p₀}) s_ref^{p₀})`. `pin = None` pins to the fitted exponent.
///
/// The increment cancels the part of `T` that is constant in `s`, which the
/// inner window contributes and which is not small against `s^p` at the
/// upper end of the window. Kernels that vanish on the window are rejected:
/// they carry no power-law part.
pub fn fit_singularity(s: &[f64], values: &[Complex64], window: (f64, f64), pin: Option<f64>) -> Result<KernelFit> {
    if s.len() != values.len() {
        return Err(invalid("samples", "length mismatch"));
    }
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(window.0 > smin && window.1 < smax && window.0 < window.1 && 2.0 * window.1 <= smax) {
        return Err(invalid("window", "fit window and its doubling must lie inside the sampled range"));
    }
    let mut fs = Vec::new();
    let mut fv = Vec::new();
    for &a in s {
        if a >= window.0 * (1.0 - 1e-12) && a <= window.1 {
            fs.push(a);
            fv.push((interpolate_log(s, values, a)? - interpolate_log(s, values, 2.0 * a)?).norm());
        }
    }
    if fv.iter().all(|&v| v == 0.0) {
        return Err(domain("singularity fit", "kernel vanishes on the fit window"));
    }
    let line: LineFit = fit::power_law(&fs, &fv).ok_or(domain("singularity fit", "too few nonzero samples"))?;
    let p0 = pin.unwrap_or(line.slope);
    let sr = REFERENCE_SEPARATION;
    let delta = interpolate_log(s, values, sr)? - interpolate_log(s, values, 2.0 * sr)?;
    Ok(KernelFit {
        s: s.to_vec(),
        values: values.to_vec(),
        exponent: line.slope,
        coefficient: delta / ((1.0 - 2f64.powf(p0)) * sr.powf(p0)),
        pinned_exponent: p0,
        residual: line.residual,
        window,
        drift: None,
    })
}

/// `T(s)` at a sample or, between samples, linear in `ln s`.
fn interpolate_log(s: &[f64], values: &[Complex64], at: f64) -> Result<Complex64> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = (s[a] * (1.0 - 1e-12), s[b] * (1.0 + 1e-12));
        if lo <= at && at <= hi {
            if (at / s[a] - 1.0).abs() < 1e-12 {
                return Ok(values[a]);
            }
            if (at / s[b] - 1.0).abs() < 1e-12 {
                return Ok(values[b]);
            }
            let t = (at / s[a]).ln() / (s[b] / s[a]).ln();
            return Ok(values[a] * (1.0 - t) + values[b] * t);
        }
    }
    Err(invalid("samples", "reference separation outside the sampled range"))
}

/// Settings of [`diagonal_singularity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularitySettings {
    pub window: QuantizeWindow,
    pub per_decade: usize,
}

impl Default for SingularitySettings {
    fn default() -> Self {
        SingularitySettings {
            window: QuantizeWindow::default(),
            per_decade: 64,
        }
    }
}

/// Principal symbol of a power-law potential sampled for quantization,
/// declared order `1/2 - α`.
pub fn principal_symbol_grid(q: &Potential, d: usize, settings: &SingularitySettings) -> Result<SymbolGrid> {
    let alpha = match *q {
        Potential::PowerLaw { alpha, .. } => alpha,
        Potential::Zero => 1.0,
        Potential::Gaussian { .. } => return Err(invalid("potential", "diagonal singularity needs a power-law potential")),
    };
    // twice y_max for the sensitivity run
    SymbolGrid::sample(
        |r| Ok(t_psym_radial(r, q)?.value),
        settings.window.y_min,
        2.0 * settings.window.y_max,
        settings.per_decade,
        d,
        0.5 - alpha,
    )
}

/// Kernel samples of the quantized principal symbol on [`separation_grid`].
pub fn principal_kernel(q: &Potential, d: usize, settings: &SingularitySettings) -> Result<KernelSamples> {
    let grid = principal_symbol_grid(q, d, settings)?;
    quantize_symbol(&grid, settings.window, &separation_grid())
}

/// `t_psym → quantize → log-log fit`, coefficient pinned at the exponent
/// `1/2 + α - d`; `drift` is the exponent change under `y_max → 2y_max`.
pub fn diagonal_singularity(q: &Potential, d: usize, settings: &SingularitySettings) -> Result<KernelFit> {
    let grid = principal_symbol_grid(q, d, settings)?;
    let s = separation_grid();
    let samples = quantize_symbol(&grid, settings.window, &s)?;
    let pin = -(grid.order + (d as f64 - 1.0));
    let mut fit = fit_singularity(&s, &samples.values, FIT_WINDOW, Some(pin))?;
    let wide_fit = fit_singularity(&s, &samples.wide_values, FIT_WINDOW, Some(pin))?;
    fit.drift = Some((wide_fit.exponent - fit.exponent).abs());
    Ok(fit)
}

/// Fitted decay orders of `|t|`, `|t'|` and `max(|t''|, |t'|/r)` on a radial sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    /// Fitted order per derivative count; `-∞` when the derivative vanishes.
    pub orders: [f64; 3],
    pub declared: f64,
}

impl OrderFit {
    /// `order_j ≤ k - j + 0.1` for `j = 0, 1, 2`.
    pub fn within_declared(&self) -> bool {
        self.orders.iter().enumerate().all(|(j, &o)| o <= self.declared - j as f64 + 0.1)
    }
}

/// Fits `|∂^β t| ~ r^{o_β}` for `|β| ≤ 2` on 16 log-spaced radii in `[lo, hi]`,
/// derivatives by central differences with step `10⁻³ r`.
pub fn symbol_order_fit<F: FnMut(f64) -> Complex64>(mut t: F, lo: f64, hi: f64, declared: f64) -> Result<OrderFit> {
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid("range", "needs 0 < lo < hi"));
    }
    let n = 16;
    let mut r = Vec::with_capacity(n);
    let mut mags: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for j in 0..n {
        let rj = lo * (hi / lo).powf(j as f64 / (n - 1) as f64);
        let h = 1e-3 * rj;
        let (tm, t0, tp) = (t(rj - h), t(rj), t(rj + h));
        let d1 = (tp - tm) / (2.0 * h);
        let d2 = (tp - t0 * 2.0 + tm) / (h * h);
        r.push(rj);
        mags[0].push(t0.norm());
        mags[1].push(d1.norm());
        mags[2].push(d2.norm().max(d1.norm() / rj));
    }
    let mut orders = [f64::NEG_INFINITY; 3];
    for (o, m) in orders.iter_mut().zip(mags.iter()) {
        // derivatives at roundoff level carry no decay information
        let scale = m.iter().cloned().fold(0.0, f64::max);
        if scale > 0.0 {
            if let Some(f) = fit::power_law(&r, m) {
                *o = f.slope;
            }
        }
    }
    Ok(OrderFit { orders, declared })
}

/// Window and localization of the Born term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornSettings {
    /// `χ_R = χ(x > R)`.
    pub r_cut: f64,
    /// `χ_ε` equals 1 on `(-ε, ε)` and vanishes outside `(-5ε/4, 5ε/4)`.
    pub epsilon: f64,
    pub lambda: f64,
}

impl Default for BornSettings {
    fn default() -> Self {
        BornSettings {
            r_cut: 1.0,
            epsilon: 1.0,
            lambda: 0.0,
        }
    }
}

/// `∫ e^{iφ(η)} χ_ε(η - √(2x)) dη`, `φ = -η³/6 + Lη`.
///
/// The minus-branch integral `∫ e^{iφ} χ_ε(-η - √(2x)) dη` is its conjugate (`η → -η`).
pub fn localized_airy(x: f64, big_l: f64, epsilon: f64) -> Result<Complex64> {
    let cut = SmoothCutoff::new(CutoffKind::Below, 4.0 * epsilon / 3.0)?;
    let half = cut.window.1;
    let c = (2.0 * x).sqrt();
    let (a, b) = (c - half, c + half);
    let slope = |e: f64| (big_l - 0.5 * e * e).abs();
    let fmax = slope(a).max(slope(b)).max(slope(c));
    let pieces = ((fmax * (b - a) / PI).ceil() as usize).clamp(2, 20000);
    let breaks: Vec<f64> = (0..=pieces).map(|j| a + (b - a) * j as f64 / pieces as f64).collect();
    let tol = Tolerance::new(1e-13, 1e-10).with_max_intervals(pieces * 16 + 400);
    Ok(integrate_breaks(
        |e: f64| Complex64::from_polar(cut.value((e - c).abs()), -e * e * e / 6.0 + big_l * e),
        &breaks,
        tol,
    )?
    .value)
}

/// Born-term symbol
/// `breve t(ζ, ζ', y) = (2πi)^{-1} Σ± ∫ χ_R(x) q(x, y) conj(I±(x, ζ)) I±(x, ζ') dx`
/// with `I±(x, ζ) = ∫ e^{iφ_λ(x, η, ζ)} χ_ε(±η - √(2x)) dη`.
///
/// Since `I₋ = conj(I₊)` the branch sum is `2 Re(conj(I₊) I₊')`. The
/// x-integral runs to `X = 64 max(|y|, R)`; beyond it the η-integrals are
/// replaced by their stationary-phase form `√(2π/η) e^{i((2L)^{3/2}/3 - π/4)}`,
/// and `tail_bound` is the mismatch of the two integrands at `X` times `X`.
pub fn born_symbol_refinement<const N: usize>(
    zeta: &[f64; N],
    zeta_p: &[f64; N],
    y: &[f64; N],
    q: &Potential,
    settings: &BornSettings,
) -> Result<Certified> {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if !(r2.sqrt() >= Y_FLOOR) {
        return Err(domain("born_symbol_refinement", "|y| below the floor 0.5"));
    }
    if !(settings.r_cut > 0.0 && settings.epsilon > 0.0) {
        return Err(invalid("born settings", "R and epsilon must be positive"));
    }
    if q.is_zero() {
        return Ok(Certified {
            value: Complex64::zero(),
            tail_bound: 0.0,
        });
    }
    let z2: f64 = zeta.iter().map(|v| v * v).sum();
    let zp2: f64 = zeta_p.iter().map(|v| v * v).sum();
    let lam = settings.lambda;
    let chi_r = SmoothCutoff::new(CutoffKind::Above, settings.r_cut)?;
    let x0 = -chi_r.window.1;
    let big_x = 64.0 * r2.sqrt().max(settings.r_cut);
    let exact = |x: f64| -> Result<f64> {
        let i1 = localized_airy(x, x + lam - z2 / 2.0, settings.epsilon)?;
        let i2 = localized_airy(x, x + lam - zp2 / 2.0, settings.epsilon)?;
        Ok(chi_r.value(x) * q.radial_value(x * x + r2) * 2.0 * (i1.conj() * i2).re)
    };
    let asymptotic = |x: f64| -> f64 {
        let (l1, l2) = (x + lam - z2 / 2.0, x + lam - zp2 / 2.0);
        if l1 <= 0.0 || l2 <= 0.0 {
            return 0.0;
        }
        let (e1, e2) = ((2.0 * l1).sqrt(), (2.0 * l2).sqrt());
        // factored to avoid cancellation between the two cubes at large x
        let de = 2.0 * ((z2 - zp2) / 2.0) / (e1 + e2);
        let dphi = de * (e1 * e1 + e1 * e2 + e2 * e2) / 3.0;
        q.radial_value(x * x + r2) * 4.0 * PI * dphi.cos() / (e1 * e2).sqrt()
    };
    let mut failure = None;
    let mut breaks = Vec::new();
    let mut b = x0;
    while b < big_x {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(big_x);
    let head = integrate_breaks(
        |x: f64| match exact(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        Tolerance::new(1e-12, 1e-7),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    // tail in v = √x, where the phase difference tends to (|ζ|² - |ζ'|²) v/√2
    let tail_fn = |v: f64| asymptotic(v * v) * 2.0 * v;
    let v0 = big_x.sqrt();
    let rate = (z2 - zp2).abs() / SQRT_2;
    let tail = if rate < 1e-9 {
        integrate_to_infinity(tail_fn, v0, Tolerance::new(1e-12, 1e-7))?
    } else {
        // integrate to V₂, where the first-order integration-by-parts bound
        // 2|A(V₂)|/rate on the rest is negligible (A ~ v^{-2})
        let scale = head.value.abs().max(1e-300);
        let amp = |v: f64| (q.radial_value(v.powi(4) + r2) * 4.0 * PI / (SQRT_2 * v)) * 2.0 * v;
        let mut v2 = 2.0 * v0;
        while 2.0 * amp(v2).abs() / rate > 1e-9 * scale && v2 < 1e12 {
            v2 *= 2.0;
        }
        let pieces = ((rate * (v2 - v0) / PI).ceil() as usize).clamp(1, 200_000);
        let breaks: Vec<f64> = (0..=pieces).map(|j| v0 + (v2 - v0) * j as f64 / pieces as f64).collect();
        let mut t = integrate_breaks(tail_fn, &breaks, Tolerance::new(1e-12, 1e-7).with_max_intervals(pieces * 8 + 400))?;
        t.error += 2.0 * amp(v2).abs() / rate;
        t
    };
    let mismatch = (exact(big_x)? - asymptotic(big_x)).abs() * big_x;
    // (2πi)^{-1} · real
    let value = Complex64::new(0.0, -(head.value + tail.value) / (2.0 * PI));
    Ok(Certified {
        value,
        tail_bound: (mismatch + head.error + tail.error) / (2.0 * PI),
    })
}

/// `breve t / t_psym` on the diagonal `ζ = ζ' = 0` at `y = (scale, 0, …)`.
pub fn born_ratio<const N: usize>(q: &Potential, scale: f64, settings: &BornSettings) -> Result<Complex64> {
    let mut y = [0.0; N];
    if N > 0 {
        y[0] = scale;
    }
    let z = [0.0; N];
    let born = born_symbol_refinement(&z, &z, &y, q, settings)?.value;
    let principal = t_psym(&y, q)?.value;
    if principal.is_zero() {
        return Err(domain("born_ratio", "principal symbol vanishes"));
    }
    Ok(born / principal)
}
