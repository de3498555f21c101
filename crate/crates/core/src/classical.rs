//! Classical Stark dynamics `h = ½(η² + |ζ|²) - x + q(x, y)`.
//!
//! Free orbits are explicit parabolas. Perturbed orbits use DOPRI5.
//! Asymptotic transverse momenta are certified by a tail bound that only
//! uses the monotone gradient envelope of `q` and the escape estimate
//! `x(T + s) ≥ x(T) + s²/4`, valid once `|∇q| ≤ ½` beyond `x(T)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::cutoffs::{breve_f, weighted_norm};
use crate::error::{domain, invalid, Error, Result};
use crate::fit::power_law;
use crate::ode::Dopri5;
use crate::quadrature::{integrate_to_infinity, Tolerance};

/// Time direction of an orbit or a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// A phase-space point `(x, y, η, ζ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
    pub eta: f64,
    pub zeta: [f64; N],
}

impl<const N: usize> PhasePoint<N> {
    pub const fn new(x: f64, y: [f64; N], eta: f64, zeta: [f64; N]) -> Self {
        PhasePoint { x, y, eta, zeta }
    }

    /// State layout `(x, y…, η, ζ…)`.
    pub fn to_state(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(2 * N + 2);
        s.push(self.x);
        s.extend_from_slice(&self.y);
        s.push(self.eta);
        s.extend_from_slice(&self.zeta);
        s
    }

    pub fn from_state(s: &[f64]) -> Self {
        let mut y = [0.0; N];
        let mut zeta = [0.0; N];
        y.copy_from_slice(&s[1..=N]);
        zeta.copy_from_slice(&s[N + 2..2 * N + 2]);
        PhasePoint {
            x: s[0],
            y,
            eta: s[N + 1],
            zeta,
        }
    }

    pub fn position(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(N + 1);
        p.push(self.x);
        p.extend_from_slice(&self.y);
        p
    }
}

/// The short-range perturbation `q = q₁`, always radial: `q(X) = Φ(|X|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Zero,
    /// `κ (|X|² + r₀²)^{-α/2}`. Coulomb is `α = 1`. `δ` is the short-range exponent.
    PowerLaw { kappa: f64, alpha: f64, r0: f64, delta: f64 },
    /// `κ exp(-|X|²/w²)`.
    Gaussian { kappa: f64, width: f64 },
}

/// Core radius of the regularized Coulomb potential.
pub const COULOMB_CORE: f64 = 0.05;

impl Potential {
    /// Regularized Coulomb `κ (|X|² + r₀²)^{-1/2}` with `r₀ = 0.05`, `δ = 1/2`.
    pub fn coulomb(kappa: f64) -> Self {
        Potential::PowerLaw {
            kappa,
            alpha: 1.0,
            r0: COULOMB_CORE,
            delta: 0.5,
        }
    }

    /// Unregularized `κ/|X|`.
    pub fn bare_coulomb(kappa: f64) -> Self {
        Potential::PowerLaw {
            kappa,
            alpha: 1.0,
            r0: 0.0,
            delta: 0.5,
        }
    }

    /// `κ (|X|² + r₀²)^{-α/2}` with the largest admissible `δ = min(α - ½, ½)`.
    pub fn power_law(kappa: f64, alpha: f64, r0: f64) -> Result<Self> {
        if !(alpha > 0.5) {
            return Err(invalid("alpha", "short range needs alpha > 1/2"));
        }
        if !(r0 >= 0.0) {
            return Err(invalid("r0", "core radius must be nonnegative"));
        }
        Ok(Potential::PowerLaw {
            kappa,
            alpha,
            r0,
            delta: (alpha - 0.5).min(0.5),
        })
    }

    pub fn gaussian(kappa: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(invalid("width", "gaussian width must be positive"));
        }
        Ok(Potential::Gaussian { kappa, width })
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Potential::Zero => true,
            Potential::PowerLaw { kappa, .. } | Potential::Gaussian { kappa, .. } => kappa == 0.0,
        }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::PowerLaw { kappa, .. } | Potential::Gaussian { kappa, .. } => kappa,
        }
    }

    /// Short-range exponent δ.
    pub fn delta(&self) -> f64 {
        match *self {
            Potential::PowerLaw { delta, .. } => delta,
            _ => 0.5,
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(*self, Potential::PowerLaw { r0, kappa, .. } if r0 == 0.0 && kappa != 0.0)
    }

    /// Same family with the coupling multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            Potential::Zero => Potential::Zero,
            Potential::PowerLaw { kappa, alpha, r0, delta } => Potential::PowerLaw {
                kappa: kappa * s,
                alpha,
                r0,
                delta,
            },
            Potential::Gaussian { kappa, width } => Potential::Gaussian { kappa: kappa * s, width },
        }
    }

    /// Taylor coefficients of `v ↦ Φ(u + v)` up to degree `order`.
    pub fn radial_taylor(&self, u: f64, order: usize) -> Vec<f64> {
        let mut c = vec![0.0; order + 1];
        match *self {
            Potential::Zero => {}
            Potential::PowerLaw { kappa, alpha, r0, .. } => {
                let base = u + r0 * r0;
                let a = -0.5 * alpha;
                let mut coef = kappa * base.powf(a);
                for (j, cj) in c.iter_mut().enumerate() {
                    *cj = coef;
                    coef *= (a - j as f64) / ((j + 1) as f64 * base);
                }
            }
            Potential::Gaussian { kappa, width } => {
                let w2 = width * width;
                let mut coef = kappa * (-u / w2).exp();
                for (j, cj) in c.iter_mut().enumerate() {
                    *cj = coef;
                    coef *= -1.0 / (w2 * (j + 1) as f64);
                }
            }
        }
        c
    }

    /// `Φ(u)` at `u = |X|²`.
    pub fn radial_value(&self, u: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::PowerLaw { kappa, alpha, r0, .. } => kappa * (u + r0 * r0).powf(-0.5 * alpha),
            Potential::Gaussian { kappa, width } => kappa * (-u / (width * width)).exp(),
        }
    }

    /// `(Φ, Φ', Φ'')` at `u = |X|²`.
    fn radial(&self, u: f64) -> (f64, f64, f64) {
        let c = self.radial_taylor(u, 2);
        (c[0], c[1], 2.0 * c[2])
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.radial(x.iter().map(|v| v * v).sum()).0
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, d1, _) = self.radial(x.iter().map(|v| v * v).sum());
        x.iter().map(|v| 2.0 * v * d1).collect()
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let u: f64 = x.iter().map(|v| v * v).sum();
        let (_, d1, d2) = self.radial(u);
        2.0 * x.len() as f64 * d1 + 4.0 * u * d2
    }

    /// A nonincreasing function of `r` bounding `|∇q|` on `{|X| ≥ r}`.
    pub fn gradient_envelope(&self, r: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::PowerLaw { kappa, alpha, .. } => {
                if r <= 0.0 {
                    f64::INFINITY
                } else {
                    kappa.abs() * alpha * r.powf(-alpha - 1.0)
                }
            }
            Potential::Gaussian { kappa, width } => {
                let r = r.max(width / 2f64.sqrt());
                2.0 * kappa.abs() * r / (width * width) * (-(r * r) / (width * width)).exp()
            }
        }
    }
}

/// Energy `½(η² + |ζ|²) - x + q(x, y)`.
pub fn energy<const N: usize>(p: &PhasePoint<N>, q: &Potential) -> f64 {
    let kin = 0.5 * (p.eta * p.eta + p.zeta.iter().map(|v| v * v).sum::<f64>());
    kin - p.x + q.value(&p.position())
}

/// The free flow: `x = t²/2 + tη₀ + x₀`, `y = tζ₀ + y₀`, `η = t + η₀`, `ζ = ζ₀`.
pub fn free_flow<const N: usize>(p: &PhasePoint<N>, t: f64) -> PhasePoint<N> {
    let mut y = p.y;
    for (yi, zi) in y.iter_mut().zip(&p.zeta) {
        *yi += t * zi;
    }
    PhasePoint {
        x: 0.5 * t * t + t * p.eta + p.x,
        y,
        eta: t + p.eta,
        zeta: p.zeta,
    }
}

fn hamilton<const N: usize>(q: &Potential) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |_t, s, ds| {
        let g = q.gradient(&s[..=N]);
        ds[..=N].copy_from_slice(&s[N + 1..]);
        ds[N + 1] = 1.0 - g[0];
        for i in 0..N {
            ds[N + 2 + i] = -g[i + 1];
        }
    }
}

/// Hamilton's equations for `h₀ + q` from `p₀` to time `t` with local error `tol`.
pub fn perturbed_flow<const N: usize>(p0: &PhasePoint<N>, t: f64, q: &Potential, tol: f64) -> Result<PhasePoint<N>> {
    let s = Dopri5::new(tol).solve(hamilton::<N>(q), 0.0, &p0.to_state(), t)?;
    Ok(PhasePoint::from_state(&s))
}

/// The perturbed orbit sampled at monotone `times` (all of one sign).
pub fn perturbed_orbit<const N: usize>(
    p0: &PhasePoint<N>,
    times: &[f64],
    q: &Potential,
    tol: f64,
) -> Result<Vec<PhasePoint<N>>> {
    let states = Dopri5::new(tol).sample(hamilton::<N>(q), 0.0, &p0.to_state(), times)?;
    Ok(states.iter().map(|s| PhasePoint::from_state(s)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticMomentum<const N: usize> {
    /// `ζ(±T)`.
    pub zeta: [f64; N],
    /// Certified bound on `|ζ^± - ζ(±T)|`.
    pub tail_bound: f64,
    /// The final `|T|`.
    pub time: f64,
}

/// Longest orbit time tried before declaring the orbit non-escaping.
pub const ESCAPE_BUDGET: f64 = 1e7;

/// `ζ^± = lim_{t→±∞} ζ(t)` with a certified tail bound below `tol`.
pub fn asymptotic_transverse_momentum<const N: usize>(
    p0: &PhasePoint<N>,
    q: &Potential,
    direction: Sign,
    tol: f64,
) -> Result<AsymptoticMomentum<N>> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    let sg = direction.value();
    let ode_tol = (tol * 1e-2).clamp(1e-13, 1e-8);
    let solver = Dopri5::new(ode_tol);
    let mut state = p0.to_state();
    let mut t = 0.0;
    let mut chunk = 10.0;
    loop {
        let p = PhasePoint::<N>::from_state(&state);
        if sg * p.eta >= 0.0 && p.x > 0.0 && q.gradient_envelope(p.x) <= 0.5 {
            let xt = p.x;
            let bound = integrate_to_infinity(
                |s: f64| q.gradient_envelope(xt + 0.25 * s * s),
                0.0,
                Tolerance::new(tol * 1e-3, 1e-6),
            )
            .map(|e| e.value + e.error)
            .unwrap_or(f64::INFINITY);
            if bound < tol {
                return Ok(AsymptoticMomentum {
                    zeta: p.zeta,
                    tail_bound: bound,
                    time: t,
                });
            }
        }
        if t >= ESCAPE_BUDGET {
            return Err(Error::Divergence { time: sg * t });
        }
        state = solver.solve(hamilton::<N>(q), sg * t, &state, sg * (t + chunk))?;
        t += chunk;
        chunk *= 2.0;
    }
}

/// `a_m = (η + ŷ_m·ζ)/f_m` with `ŷ_m = y/⟨y⟩_m`, `f_m = √breve_f(2x + 2⟨y⟩_m)`.
pub fn symbol_a<const N: usize>(p: &PhasePoint<N>, m: u32) -> Result<f64> {
    let ym = weighted_norm(&p.y, m)?;
    let proj: f64 = p.y.iter().zip(&p.zeta).map(|(a, b)| a * b).sum::<f64>() / ym;
    Ok((p.eta + proj) / breve_f(2.0 * p.x + 2.0 * ym).sqrt())
}

/// Unregularized `ă = (η + ŷ_m·ζ)/√(2x + 2⟨y⟩_m)`, for `x + ⟨y⟩_m > 0`.
pub fn a_breve<const N: usize>(p: &PhasePoint<N>, m: u32) -> Result<f64> {
    let ym = weighted_norm(&p.y, m)?;
    let s2 = 2.0 * p.x + 2.0 * ym;
    if !(s2 > 0.0) {
        return Err(domain("a_breve", "requires x + <y>_m > 0"));
    }
    let proj: f64 = p.y.iter().zip(&p.zeta).map(|(a, b)| a * b).sum::<f64>() / ym;
    Ok((p.eta + proj) / s2.sqrt())
}

/// The region `X^±_ε = {x + ⟨y⟩_m > 0, ±ă > -ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRegionSpec {
    pub m: u32,
    pub epsilon: f64,
    pub sign: Sign,
}

impl InvariantRegionSpec {
    pub fn new(m: u32, epsilon: f64, sign: Sign) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "m must be a positive integer"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid("epsilon", "epsilon must lie in (0, 1)"));
        }
        Ok(InvariantRegionSpec { m, epsilon, sign })
    }

    pub fn contains<const N: usize>(&self, p: &PhasePoint<N>) -> bool {
        match a_breve(p, self.m) {
            Ok(a) => self.sign.value() * a > -self.epsilon,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    /// Smallest `(lhs - rhs)/rhs` of `2x + 2⟨y⟩_m ≥ (1-ε)(t² + 2x₀ + 2⟨y₀⟩_m)`.
    pub growth_margin: f64,
    /// Smallest `±ă(t) + ε`.
    pub a_margin: f64,
    pub passed: bool,
}

/// Relative slack allowed in the growth inequality for rounding.
const GROWTH_TOL: f64 = 1e-12;

/// Samples the free flow for `±t ∈ [0, T]` at `steps + 1` times and checks
/// that it stays in `X^±_ε` with the quadratic growth of `x + ⟨y⟩_m`.
pub fn region_invariance_check<const N: usize>(
    p0: &PhasePoint<N>,
    spec: &InvariantRegionSpec,
    horizon: f64,
    steps: usize,
) -> Result<InvarianceReport> {
    if !spec.contains(p0) {
        return Err(domain("region_invariance_check", "initial point outside X^±_ε"));
    }
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    let sg = spec.sign.value();
    let base = 2.0 * p0.x + 2.0 * weighted_norm(&p0.y, spec.m)?;
    let mut growth_margin = f64::INFINITY;
    let mut a_margin = f64::INFINITY;
    for k in 0..=steps {
        let t = sg * horizon * k as f64 / steps as f64;
        let p = free_flow(p0, t);
        let lhs = 2.0 * p.x + 2.0 * weighted_norm(&p.y, spec.m)?;
        let rhs = (1.0 - spec.epsilon) * (t * t + base);
        growth_margin = growth_margin.min((lhs - rhs) / rhs);
        let a = a_breve(&p, spec.m).unwrap_or(f64::NEG_INFINITY);
        a_margin = a_margin.min(sg * a + spec.epsilon);
    }
    Ok(InvarianceReport {
        growth_margin,
        a_margin,
        passed: growth_margin >= -GROWTH_TOL && a_margin > 0.0,
    })
}

/// Number of sample times in the Mourre scan.
const MOURRE_SAMPLES: usize = 400;

/// Smallest `dă/dt - (1 - ă²)/√(2x + 2⟨y⟩_m)` along the free flow for `±t ∈ [0, T]`,
/// with `dă/dt` from a five-point difference in time.
pub fn mourre_monotonicity<const N: usize>(p0: &PhasePoint<N>, spec: &InvariantRegionSpec, horizon: f64) -> Result<f64> {
    if !spec.contains(p0) {
        return Err(domain("mourre_monotonicity", "initial point outside X^±_ε"));
    }
    let sg = spec.sign.value();
    let m = spec.m;
    let a_at = |t: f64| a_breve(&free_flow(p0, t), m);
    let mut worst = f64::INFINITY;
    for k in 0..=MOURRE_SAMPLES {
        // quadratic spacing resolves the early transient
        let frac = k as f64 / MOURRE_SAMPLES as f64;
        let t = sg * horizon * frac * frac;
        let p = free_flow(p0, t);
        let s = (2.0 * p.x + 2.0 * weighted_norm(&p.y, m)?).sqrt();
        let h = 1e-3 * s;
        let d = (-a_at(t + 2.0 * h)? + 8.0 * a_at(t + h)? - 8.0 * a_at(t - h)? + a_at(t - 2.0 * h)?) / (12.0 * h);
        let a = a_at(t)?;
        worst = worst.min(d - (1.0 - a * a) / s);
    }
    Ok(worst)
}

/// Power-law exponents of `|q|` and `|∇q|` along rays, and whether the decay
/// was faster than any fitted power (super-polynomial).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialDecay {
    pub value_exponent: f64,
    pub gradient_exponent: f64,
    pub super_polynomial: bool,
    pub passed: bool,
}

/// Exponent above which a fit is read as super-polynomial decay.
const SATURATION_EXPONENT: f64 = 20.0;

/// Fits `|q| ~ r^{-p}` and `|∇q| ~ r^{-p'}` on `r ∈ [10, 1000]` along `rays`
/// deterministic directions in `R^{N+1}`, and checks `p ≥ ½ + δ - 0.05`,
/// `p' ≥ 3/2 + δ - 0.05` (minimum over rays).
pub fn verify_potential_decay<const N: usize>(q: &Potential, delta: f64, rays: usize) -> Result<PotentialDecay> {
    if q.is_zero() {
        return Err(invalid("potential", "decay fit needs a nonzero potential"));
    }
    let radii: Vec<f64> = (0..24).map(|i| 10.0 * 100f64.powf(i as f64 / 23.0)).collect();
    let mut pv = f64::INFINITY;
    let mut pg = f64::INFINITY;
    let mut saturated = false;
    for k in 0..rays.max(1) {
        let dir = ray_direction::<N>(k, rays.max(1));
        let vals: Vec<f64> = radii.iter().map(|r| q.value(&scale(&dir, *r)).abs()).collect();
        let grads: Vec<f64> = radii
            .iter()
            .map(|r| q.gradient(&scale(&dir, *r)).iter().map(|g| g * g).sum::<f64>().sqrt())
            .collect();
        let (ev, sv) = exponent(&radii, &vals);
        let (eg, sg) = exponent(&radii, &grads);
        saturated |= sv || sg;
        pv = pv.min(ev);
        pg = pg.min(eg);
    }
    let passed = pv >= 0.5 + delta - 0.05 && pg >= 1.5 + delta - 0.05;
    Ok(PotentialDecay {
        value_exponent: pv,
        gradient_exponent: pg,
        super_polynomial: saturated,
        passed,
    })
}

fn exponent(r: &[f64], v: &[f64]) -> (f64, bool) {
    if v.iter().filter(|x| **x > 0.0).count() < 4 {
        return (f64::INFINITY, true);
    }
    match power_law(r, v) {
        Some(fit) if -fit.slope < SATURATION_EXPONENT => (-fit.slope, false),
        _ => (f64::INFINITY, true),
    }
}

fn scale(d: &[f64], r: f64) -> Vec<f64> {
    d.iter().map(|v| v * r).collect()
}

/// Unit vectors spread by golden-angle spirals (deterministic, no RNG).
pub fn ray_direction<const N: usize>(k: usize, n: usize) -> Vec<f64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let u = (k as f64 + 0.5) / n as f64;
    match N {
        0 => vec![1.0],
        1 => {
            let a = 2.0 * PI * u;
            vec![a.cos(), a.sin()]
        }
        _ => {
            let z = 1.0 - 2.0 * u;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            let mut v = vec![0.0; N + 1];
            v[0] = z;
            v[1] = rho * phi.cos();
            v[2] = rho * phi.sin();
            v
        }
    }
}
