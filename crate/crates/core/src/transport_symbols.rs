//! WKB transport recursion along the free flow.
//!
//! With `b_k = i^k B_k` and `q_k = i^k Q_k` the recursion is real:
//! `B_0 = 1`, `Q_k = q B_k - ½ΔB_k`, `B_{k+1}(p) = σ ∫_0^∞ Q_k(Θ_{σt} p) dt`.
//! The free flow moves the initial position rigidly, so position derivatives
//! commute with the line integral. Every layer is therefore carried as a
//! Taylor jet in the initial position `(x, y)` and the whole hierarchy is
//! integrated along a single orbit.
//!
//! The half-line is mapped by `τ = ln(1 + t)`. On `[0, τ_max]` the integrand
//! `e^τ Q_k` is resolved by adaptive Chebyshev-Lobatto panels; the remainder
//! past `τ_max` is closed by exponential extrapolation of the last panel.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::chebyshev::ChebyshevRule;
use crate::classical::{a_breve, InvariantRegionSpec, PhasePoint, Potential, Sign};
use crate::cutoffs::{breve_f, chi_above, weighted_norm};
use crate::error::{domain, invalid, Error, Result};
use crate::fd;
use crate::fit::{self, LineFit};
use crate::jet::{JetSpace, MAX_VARS};

/// Panel quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSettings {
    /// Chebyshev-Lobatto nodes per panel.
    pub nodes: usize,
    /// Upper end of the resolved range in `τ = ln(1 + t)`.
    pub tau_max: f64,
    /// Width of the initial panels in `τ`.
    pub initial_width: f64,
    /// Relative tolerance per jet coefficient.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for TransportSettings {
    fn default() -> Self {
        TransportSettings {
            nodes: 17,
            tau_max: 40.0,
            initial_width: 1.0,
            tol: 1e-11,
            max_panels: 4000,
        }
    }
}

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

fn i_pow(k: usize) -> Complex64 {
    I_POW[k % 4]
}

/// Solves the recursion to a fixed depth, returning position jets of a fixed order.
#[derive(Debug, Clone)]
pub struct TransportSolver<const N: usize> {
    potential: Potential,
    sign: Sign,
    levels: usize,
    derivative_order: usize,
    space: JetSpace,
    rule: ChebyshevRule,
    settings: TransportSettings,
    /// Indices of `h_v` and `h_v²`.
    linear: Vec<usize>,
    square: Vec<Option<usize>>,
}

/// Jets of `B_0..B_n` and `Q_0..Q_n` at one phase point.
///
/// `B_k` is exact to order `K + 2(n - k)` for `k ≥ 1` (order `K + 2(n-1)` at
/// `k = 0`), `Q_k` to order `K + 2(n - k - 1)`; derivatives beyond order `K`
/// are only read where that budget allows.
#[derive(Debug, Clone)]
pub struct Layers<'a> {
    space: &'a JetSpace,
    b: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

impl<'a> Layers<'a> {
    pub fn levels(&self) -> usize {
        self.b.len() - 1
    }

    pub fn space(&self) -> &JetSpace {
        self.space
    }

    /// Jet of the real layer `B_k`.
    pub fn b_jet(&self, k: usize) -> &[f64] {
        &self.b[k]
    }

    /// Jet of the real layer `Q_k`.
    pub fn q_jet(&self, k: usize) -> &[f64] {
        &self.q[k]
    }

    pub fn b(&self, k: usize) -> Complex64 {
        i_pow(k) * self.b[k][0]
    }

    pub fn q(&self, k: usize) -> Complex64 {
        i_pow(k) * self.q[k][0]
    }

    /// `∂^e b_k` in the position variables `(x, y)`.
    pub fn b_partial(&self, k: usize, e: &[u8]) -> Complex64 {
        i_pow(k) * self.space.partial(&self.b[k], e)
    }

    pub fn b_gradient(&self, k: usize) -> Vec<Complex64> {
        (0..self.space.nvars())
            .map(|v| {
                let mut e = [0u8; MAX_VARS];
                e[v] = 1;
                self.b_partial(k, &e[..self.space.nvars()])
            })
            .collect()
    }

    pub fn b_laplacian(&self, k: usize) -> Complex64 {
        let mut s = 0.0;
        for v in 0..self.space.nvars() {
            let mut e = [0u8; MAX_VARS];
            e[v] = 2;
            s += self.space.partial(&self.b[k], &e[..self.space.nvars()]);
        }
        i_pow(k) * s
    }
}

struct Panel {
    center: f64,
    half: f64,
    depth: u32,
    /// Jets of `q` at the panel nodes.
    jq: Vec<Vec<f64>>,
}

const MAX_DEPTH: u32 = 40;

impl<const N: usize> TransportSolver<N> {
    /// Solver for `B_0..B_levels` with position derivatives up to `derivative_order`.
    pub fn new(
        potential: Potential,
        sign: Sign,
        levels: usize,
        derivative_order: usize,
        settings: TransportSettings,
    ) -> Result<Self> {
        if N + 1 > MAX_VARS {
            return Err(invalid("dimension", "transport jets support d <= 4"));
        }
        if settings.nodes < 3 || !(settings.tau_max > 0.0) || !(settings.initial_width > 0.0) || !(settings.tol > 0.0) {
            return Err(invalid("settings", "transport settings out of range"));
        }
        let order = derivative_order + 2 * levels.saturating_sub(1);
        let space = JetSpace::new(N + 1, order);
        let mut linear = Vec::with_capacity(N + 1);
        let mut square = Vec::with_capacity(N + 1);
        for v in 0..=N {
            let mut e = [0u8; MAX_VARS];
            e[v] = 1;
            linear.push(space.index(&e[..N + 1]).unwrap_or(usize::MAX));
            e[v] = 2;
            square.push(space.index(&e[..N + 1]));
        }
        Ok(TransportSolver {
            potential,
            sign,
            levels,
            derivative_order,
            rule: ChebyshevRule::new(settings.nodes),
            space,
            settings,
            linear,
            square,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn derivative_order(&self) -> usize {
        self.derivative_order
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    /// Jet of `q` at `position + h`.
    fn q_jet(&self, position: &[f64]) -> Vec<f64> {
        let u: f64 = position.iter().map(|v| v * v).sum();
        let coeffs = self.potential.radial_taylor(u, self.space.order());
        if self.space.order() == 0 {
            return vec![coeffs[0]];
        }
        // v = 2X·h + |h|², so that |X + h|² = u + v.
        let mut v = self.space.zero();
        for (i, x) in position.iter().enumerate() {
            v[self.linear[i]] = 2.0 * x;
            if let Some(s) = self.square[i] {
                v[s] = 1.0;
            }
        }
        self.space.compose(&coeffs, &v)
    }

    fn orbit_position(&self, p: &PhasePoint<N>, t: f64) -> [f64; MAX_VARS] {
        let s = self.sign.value() * t;
        let mut out = [0.0; MAX_VARS];
        out[0] = p.x + s * p.eta + 0.5 * s * s;
        for i in 0..N {
            out[i + 1] = p.y[i] + s * p.zeta[i];
        }
        out
    }

    fn panel(&self, p: &PhasePoint<N>, center: f64, half: f64, depth: u32) -> Panel {
        let jq = self
            .rule
            .nodes
            .iter()
            .map(|s| {
                let t = (center + half * s).exp_m1();
                self.q_jet(&self.orbit_position(p, t)[..N + 1])
            })
            .collect();
        Panel {
            center,
            half,
            depth,
            jq,
        }
    }

    /// Largest tail-coefficient error of `e^τ Jq` over the panel, per coefficient.
    fn panel_error(&self, panel: &Panel, i: usize) -> f64 {
        let vals: Vec<f64> = self
            .rule
            .nodes
            .iter()
            .zip(&panel.jq)
            .map(|(s, j)| (panel.center + panel.half * s).exp() * j[i])
            .collect();
        let c = self.rule.coefficients(&vals);
        let n = c.len();
        panel.half * (c[n - 1].abs() + c[n - 2].abs())
    }

    fn panel_magnitude(&self, panel: &Panel, i: usize) -> f64 {
        let m = self
            .rule
            .nodes
            .iter()
            .zip(&panel.jq)
            .map(|(s, j)| ((panel.center + panel.half * s).exp() * j[i]).abs())
            .fold(0.0, f64::max);
        2.0 * panel.half * m
    }

    fn panels(&self, p: &PhasePoint<N>) -> Result<Vec<Panel>> {
        let count = (self.settings.tau_max / self.settings.initial_width).ceil().max(1.0) as usize;
        let half = 0.5 * self.settings.tau_max / count as f64;
        let initial: Vec<Panel> = (0..count)
            .map(|j| self.panel(p, (2 * j + 1) as f64 * half, half, 0))
            .collect();
        let len = self.space.len();
        let mut scale = vec![0.0; len];
        for panel in &initial {
            for (i, s) in scale.iter_mut().enumerate() {
                *s += self.panel_magnitude(panel, i);
            }
        }
        let mut stack: Vec<Panel> = initial.into_iter().rev().collect();
        let mut out = Vec::new();
        while let Some(panel) = stack.pop() {
            let ok = (0..len).all(|i| self.panel_error(&panel, i) <= self.settings.tol * scale[i] + f64::MIN_POSITIVE);
            if ok {
                out.push(panel);
            } else if panel.depth >= MAX_DEPTH || out.len() + stack.len() + 2 > self.settings.max_panels {
                let worst = (0..len)
                    .map(|i| self.panel_error(&panel, i) / scale[i].max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                return Err(Error::Accuracy {
                    op: "transport line integral",
                    achieved: worst,
                    requested: self.settings.tol,
                });
            } else {
                let h = 0.5 * panel.half;
                let right = self.panel(p, panel.center + h, h, panel.depth + 1);
                let left = self.panel(p, panel.center - h, h, panel.depth + 1);
                stack.push(right);
                stack.push(left);
            }
        }
        Ok(out)
    }

    /// Jets of all layers at `p`.
    pub fn layers(&self, p: &PhasePoint<N>) -> Result<Layers<'_>> {
        let len = self.space.len();
        let n = self.levels;
        let jq0 = self.q_jet(&p.position());
        if n == 0 || self.potential.is_zero() {
            let mut b = vec![self.space.zero(); n + 1];
            b[0] = self.space.constant(1.0);
            let mut q = vec![self.space.zero(); n + 1];
            q[0] = jq0;
            return Ok(Layers {
                space: &self.space,
                b,
                q,
            });
        }
        let panels = self.panels(p)?;
        let nodes = self.rule.len();
        let sigma = self.sign.value();
        let weights: Vec<Vec<f64>> = panels
            .iter()
            .flat_map(|pn| self.rule.nodes.iter().map(move |s| sigma * (pn.center + pn.half * s).exp()))
            .map(|w| vec![w])
            .collect();
        let total = panels.len() * nodes;
        // Current layer B_k at every node, starting from B_0 = 1.
        let mut bk: Vec<Vec<f64>> = vec![self.space.constant(1.0); total];
        let mut b_out = vec![self.space.constant(1.0)];
        let mut q_out = Vec::with_capacity(n + 1);
        let mut g: Vec<Vec<f64>> = vec![self.space.zero(); total];
        let mut tmp = self.space.zero();
        let start = nodes - 1;
        for k in 0..n {
            // G = σ e^τ Q_k at every node.
            for (idx, gi) in g.iter_mut().enumerate() {
                let jq = &panels[idx / nodes].jq[idx % nodes];
                self.space.mul(jq, &bk[idx], &mut tmp);
                if k > 0 {
                    let lap = self.space.laplacian(&bk[idx]);
                    for (t, l) in tmp.iter_mut().zip(&lap) {
                        *t -= 0.5 * l;
                    }
                }
                if idx == start {
                    q_out.push(tmp.clone());
                }
                let w = weights[idx][0];
                for (o, t) in gi.iter_mut().zip(&tmp) {
                    *o = w * t;
                }
            }
            let mut running = self.tail(&panels, &g)?;
            for (pi, pn) in panels.iter().enumerate().rev() {
                let base = pi * nodes;
                for i in 0..nodes {
                    let tw = self.rule.tail_weights(i);
                    let out = &mut bk[base + i];
                    for c in 0..len {
                        let mut s = 0.0;
                        for (j, w) in tw.iter().enumerate() {
                            s += w * g[base + j][c];
                        }
                        out[c] = running[c] + pn.half * s;
                    }
                }
                running.copy_from_slice(&bk[base + nodes - 1]);
            }
            b_out.push(bk[start].clone());
        }
        // Q_n at the start point.
        self.space.mul(&jq0, &b_out[n], &mut tmp);
        let lap = self.space.laplacian(&b_out[n]);
        for (t, l) in tmp.iter_mut().zip(&lap) {
            *t -= 0.5 * l;
        }
        q_out.push(tmp);
        Ok(Layers {
            space: &self.space,
            b: b_out,
            q: q_out,
        })
    }

    /// `∫_{τ_max}^∞ G` per coefficient, from the decay rate across the last panel.
    fn tail(&self, panels: &[Panel], g: &[Vec<f64>]) -> Result<Vec<f64>> {
        let nodes = self.rule.len();
        let last = panels.len() - 1;
        let half = panels[last].half;
        let end = &g[last * nodes];
        let left = &g[last * nodes + nodes - 1];
        let len = self.space.len();
        let mut out = vec![0.0; len];
        for c in 0..len {
            let (g1, g2) = (left[c], end[c]);
            if g2 == 0.0 {
                continue;
            }
            if g1 * g2 > 0.0 && g2.abs() < g1.abs() {
                let rate = (g1 / g2).ln() / (2.0 * half);
                out[c] = g2 / rate;
            } else {
                let level: f64 = (0..panels.len() * nodes).map(|i| g[i][c].abs()).fold(0.0, f64::max);
                if g2.abs() > self.settings.tol * level {
                    return Err(Error::Accuracy {
                        op: "transport tail",
                        achieved: g2.abs() / level,
                        requested: self.settings.tol,
                    });
                }
            }
        }
        Ok(out)
    }
}

fn require_region<const N: usize>(spec: &InvariantRegionSpec, p: &PhasePoint<N>, op: &'static str) -> Result<()> {
    if spec.contains(p) {
        Ok(())
    } else {
        Err(domain(op, "point outside the invariant region"))
    }
}

/// `b_{k+1}(p)`.
pub fn b_next<const N: usize>(q: &Potential, spec: &InvariantRegionSpec, k: usize, p: &PhasePoint<N>) -> Result<Complex64> {
    require_region(spec, p, "b_next")?;
    let solver = TransportSolver::<N>::new(*q, spec.sign, k + 1, 0, TransportSettings::default())?;
    Ok(solver.layers(p)?.b(k + 1))
}

/// `q_{k+1}(p) = q b_{k+1} - ½Δb_{k+1}`, with the Laplacian taken under the integral.
pub fn q_next<const N: usize>(q: &Potential, spec: &InvariantRegionSpec, k: usize, p: &PhasePoint<N>) -> Result<Complex64> {
    require_region(spec, p, "q_next")?;
    let solver = TransportSolver::<N>::new(*q, spec.sign, k + 1, 2, TransportSettings::default())?;
    Ok(solver.layers(p)?.q(k + 1))
}

/// `Δb_{k+1}(p)` by differentiation under the integral.
pub fn laplacian_b_next<const N: usize>(
    q: &Potential,
    spec: &InvariantRegionSpec,
    k: usize,
    p: &PhasePoint<N>,
) -> Result<Complex64> {
    require_region(spec, p, "laplacian_b_next")?;
    let solver = TransportSolver::<N>::new(*q, spec.sign, k + 1, 2, TransportSettings::default())?;
    Ok(solver.layers(p)?.b_laplacian(k + 1))
}

/// `|i(∂_η + (η,ζ)·∇)b_level - q b_{level-1} + ½Δb_{level-1}|` with central
/// differences of step `h`: the derivative along the free-flow generator and
/// the 3-point Laplacian.
pub fn transport_residual<const N: usize>(
    q: &Potential,
    spec: &InvariantRegionSpec,
    level: usize,
    p: &PhasePoint<N>,
    h: f64,
) -> Result<f64> {
    if level == 0 {
        return Err(invalid("level", "the transport equation starts at level 1"));
    }
    if !(h > 0.0) {
        return Err(invalid("h", "finite-difference step must be positive"));
    }
    let shift = |s: f64| {
        let mut o = *p;
        o.x += s * p.eta;
        for i in 0..N {
            o.y[i] += s * p.zeta[i];
        }
        o.eta += s;
        o
    };
    let along = [shift(h), shift(-h)];
    let mut stencil: Vec<PhasePoint<N>> = vec![*p];
    for v in 0..=N {
        for s in [h, -h] {
            let mut o = *p;
            if v == 0 {
                o.x += s;
            } else {
                o.y[v - 1] += s;
            }
            stencil.push(o);
        }
    }
    for pt in along.iter().chain(&stencil) {
        require_region(spec, pt, "transport_residual")?;
    }
    if q.is_zero() {
        return Ok(0.0);
    }
    let solver = TransportSolver::<N>::new(*q, spec.sign, level, 0, TransportSettings::default())?;
    let top = |pt: &PhasePoint<N>| -> Result<f64> { Ok(solver.layers(pt)?.b_jet(level)[0]) };
    let below = |pt: &PhasePoint<N>| -> Result<f64> { Ok(solver.layers(pt)?.b_jet(level - 1)[0]) };
    let derivative = (top(&along[0])? - top(&along[1])?) / (2.0 * h);
    let center = below(p)?;
    let mut lap = 0.0;
    for pair in stencil[1..].chunks(2) {
        lap += (below(&pair[0])? - 2.0 * center + below(&pair[1])?) / (h * h);
    }
    let qk = q.value(&p.position()) * center - 0.5 * lap;
    // In the real representation the equation reads d/ds B_level = -Q_{level-1}.
    Ok((derivative + qk).abs())
}

/// Fitted order of [`transport_residual`] under the given steps.
pub fn transport_residual_order<const N: usize>(
    q: &Potential,
    spec: &InvariantRegionSpec,
    level: usize,
    p: &PhasePoint<N>,
    steps: &[f64],
) -> Result<LineFit> {
    let res = steps
        .iter()
        .map(|&h| transport_residual(q, spec, level, p, h))
        .collect::<Result<Vec<_>>>()?;
    fit::power_law(steps, &res).ok_or(Error::Accuracy {
        op: "transport residual order",
        achieved: 0.0,
        requested: 0.0,
    })
}

/// Power-law decay of `|b_k|` along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `p` in `|b_k| ≈ C (1 + x + ⟨y⟩_m)^{-p}`; infinite when the decay is super-polynomial.
    pub exponent: f64,
    pub super_polynomial: bool,
    pub points: usize,
}

/// Exponents above this are reported as super-polynomial.
pub const SATURATION_EXPONENT: f64 = 20.0;

/// Log-log fit of `|b_k|` against `1 + x + ⟨y⟩_m` on the ray
/// `(x, y) = s·direction`, `η = ζ = 0`, for `s ∈ [20, 2000]`.
pub fn decay_fit<const N: usize>(
    q: &Potential,
    spec: &InvariantRegionSpec,
    k: usize,
    direction: &[f64],
) -> Result<DecayFit> {
    if k == 0 {
        return Err(invalid("k", "decay fits start at level 1"));
    }
    if direction.len() != N + 1 {
        return Err(invalid("direction", "ray direction must have d components"));
    }
    let solver = TransportSolver::<N>::new(*q, spec.sign, k, 0, TransportSettings::default())?;
    let samples = 12;
    let mut weight = Vec::with_capacity(samples);
    let mut value = Vec::with_capacity(samples);
    for j in 0..samples {
        let s = 20.0 * 100f64.powf(j as f64 / (samples - 1) as f64);
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = s * direction[i + 1];
        }
        let p = PhasePoint::new(s * direction[0], y, 0.0, [0.0; N]);
        let w = 1.0 + p.x + weighted_norm(&p.y, spec.m)?;
        if !(w > 1.0) {
            return Err(domain("decay_fit", "ray leaves the region x + <y>_m > 0"));
        }
        weight.push(w);
        value.push(solver.layers(&p)?.b(k).norm());
    }
    match fit::power_law(&weight, &value) {
        Some(f) if -f.slope < SATURATION_EXPONENT && f.points == samples => Ok(DecayFit {
            exponent: -f.slope,
            super_polynomial: false,
            points: f.points,
        }),
        other => Ok(DecayFit {
            exponent: f64::INFINITY,
            super_polynomial: true,
            points: other.map_or(0, |f| f.points),
        }),
    }
}

/// Test lattice for the Borel cutoff search.
#[derive(Debug, Clone, PartialEq)]
pub struct BorelLattice {
    /// Samples of `f` per octave, starting at `f = 2`.
    pub per_octave: usize,
    /// Largest sampled `f`; also the search budget `C_max`.
    pub f_max: f64,
    /// `|y| = γ f²/2` for each `γ`.
    pub heights: Vec<f64>,
    /// Values of `±a`; negative entries are scaled by `ε`.
    pub slopes: Vec<f64>,
    /// `|ζ| = c·f` for each `c`.
    pub transverse: Vec<f64>,
    /// The calibration exponent `ε_B`.
    pub epsilon_b: f64,
    /// Spacing of the candidate grid for `C_k`.
    pub step: f64,
}

impl Default for BorelLattice {
    fn default() -> Self {
        BorelLattice {
            per_octave: 2,
            f_max: 1024.0,
            heights: vec![0.0, 0.5],
            slopes: vec![-0.5, 0.0, 0.5, 1.0],
            transverse: vec![0.0, 0.25],
            epsilon_b: 1.0,
            step: 0.125,
        }
    }
}

impl BorelLattice {
    /// Lattice phase points, each with its `f`.
    pub fn points<const N: usize>(&self, spec: &InvariantRegionSpec) -> Result<Vec<(f64, PhasePoint<N>)>> {
        if self.per_octave == 0 || !(self.f_max > 2.0) {
            return Err(invalid("lattice", "lattice needs per_octave >= 1 and f_max > 2"));
        }
        let octaves = (self.f_max / 2.0).log2();
        let count = (octaves * self.per_octave as f64).floor() as usize + 1;
        let mut out = Vec::new();
        for j in 0..count {
            let f = 2.0 * 2f64.powf(j as f64 / self.per_octave as f64);
            for &gamma in &self.heights {
                for &a in &self.slopes {
                    let a = if a < 0.0 { a * spec.epsilon } else { a };
                    for &c in &self.transverse {
                        out.push((f, lattice_point::<N>(spec, f, gamma, a, c)?));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The phase point with `f_m = f`, `|y| = γf²/2`, `±a_m = a`, `|ζ| = c f`.
pub fn lattice_point<const N: usize>(spec: &InvariantRegionSpec, f: f64, gamma: f64, a: f64, c: f64) -> Result<PhasePoint<N>> {
    let mut y = [0.0; N];
    let mut zeta = [0.0; N];
    if N > 0 {
        y[0] = gamma * f * f / 2.0;
        zeta[0] = c * f;
    }
    let ym = weighted_norm(&y, spec.m)?;
    let x = f * f / 2.0 - ym;
    let proj: f64 = y.iter().zip(&zeta).map(|(a, b)| a * b).sum::<f64>() / ym;
    let eta = spec.sign.value() * a * f - proj;
    Ok(PhasePoint::new(x, y, eta, zeta))
}

/// Weighted derivative bound of every level `1..=n` at one point:
/// `max |∂_{η,ζ}^α ∂_x^β ∂_y^γ b_k| f^{2kδ + |α| + 2|β| + 2|γ| - ε_B}`
/// over total order `≤ min(k, 2)`. Momentum derivatives are central
/// differences of the position jets with step `0.01·max(1, f)`.
pub fn borel_weighted<const N: usize>(
    q: &Potential,
    spec: &InvariantRegionSpec,
    n: usize,
    delta: f64,
    epsilon_b: f64,
    p: &PhasePoint<N>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n + 1];
    if n == 0 || q.is_zero() {
        return Ok(out);
    }
    let f = breve_f(2.0 * p.x + 2.0 * weighted_norm(&p.y, spec.m)?).sqrt();
    let settings = TransportSettings::default();
    let d = N + 1;
    let s2 = TransportSolver::<N>::new(*q, spec.sign, n, 2.min(n), settings)?;
    let s1 = TransportSolver::<N>::new(*q, spec.sign, n, 1, settings)?;
    let s0 = TransportSolver::<N>::new(*q, spec.sign, n, 0, settings)?;
    let h = 0.01 * f.max(1.0);
    let moved = |moves: &[(usize, f64)]| {
        let mut o = *p;
        for &(v, s) in moves {
            if v == 0 {
                o.eta += s;
            } else {
                o.zeta[v - 1] += s;
            }
        }
        o
    };
    let base = s2.layers(p)?;
    let mut plus = Vec::with_capacity(d);
    let mut minus = Vec::with_capacity(d);
    for v in 0..d {
        plus.push(s1.layers(&moved(&[(v, h)]))?);
        minus.push(s1.layers(&moved(&[(v, -h)]))?);
    }
    // B_0..B_n at the four corners of every mixed momentum pair.
    let mut corners: Vec<[Vec<f64>; 4]> = Vec::new();
    if n >= 2 {
        for v in 0..d {
            for w in (v + 1)..d {
                let mut c: [Vec<f64>; 4] = Default::default();
                for (slot, (sv, sw)) in [(h, h), (h, -h), (-h, h), (-h, -h)].iter().enumerate() {
                    let l = s0.layers(&moved(&[(v, *sv), (w, *sw)]))?;
                    c[slot] = (0..=n).map(|k| l.b_jet(k)[0]).collect();
                }
                corners.push(c);
            }
        }
    }
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        let cap = k.min(2);
        let weight = |mom: usize, pos: usize| f.powf(2.0 * k as f64 * delta + mom as f64 + 2.0 * pos as f64 - epsilon_b);
        let mut worst: f64 = 0.0;
        // Pure position derivatives.
        for i in 0..base.space().prefix(cap) {
            let e = base.space().exponents(i);
            let order: usize = e.iter().map(|&v| v as usize).sum();
            worst = worst.max(base.space().partial(base.b_jet(k), e).abs() * weight(0, order));
        }
        // One momentum derivative times at most one position derivative.
        for v in 0..d {
            let sp = plus[v].space();
            for i in 0..sp.prefix(cap - 1) {
                let e = sp.exponents(i);
                let order: usize = e.iter().map(|&v| v as usize).sum();
                let diff = (sp.partial(plus[v].b_jet(k), e) - sp.partial(minus[v].b_jet(k), e)) / (2.0 * h);
                worst = worst.max(diff.abs() * weight(1, order));
            }
        }
        if cap == 2 {
            let center = base.b_jet(k)[0];
            for v in 0..d {
                let second = (plus[v].b_jet(k)[0] - 2.0 * center + minus[v].b_jet(k)[0]) / (h * h);
                worst = worst.max(second.abs() * weight(2, 0));
            }
            for c in &corners {
                let mixed = (c[0][k] - c[1][k] - c[2][k] + c[3][k]) / (4.0 * h * h);
                worst = worst.max(mixed.abs() * weight(2, 0));
            }
        }
        *slot = worst;
    }
    Ok(out)
}

/// Constructive cutoff sequence `C_0..C_n`.
///
/// `C_0 = 2`; `C_k` is the smallest value `1 + C_{k-1} + j·step`, `j ≥ 1`,
/// lying at or above every lattice `f` whose weighted bound exceeds `2^{-k}`.
pub fn borel_cutoffs<const N: usize>(
    q: &Potential,
    spec: &InvariantRegionSpec,
    n: usize,
    delta: f64,
    lattice: &BorelLattice,
) -> Result<Vec<f64>> {
    if !(lattice.step > 0.0) {
        return Err(invalid("step", "cutoff grid step must be positive"));
    }
    let points = lattice.points::<N>(spec)?;
    let mut worst = vec![0.0f64; n + 1];
    let mut worst_weight = vec![0.0f64; n + 1];
    for (f, p) in &points {
        let w = borel_weighted(q, spec, n, delta, lattice.epsilon_b, p)?;
        for k in 1..=n {
            if w[k] > 0.5f64.powi(k as i32) && *f > worst[k] {
                worst[k] = *f;
                worst_weight[k] = w[k];
            }
        }
    }
    let top = points.iter().map(|(f, _)| *f).fold(0.0, f64::max);
    let mut c = vec![2.0];
    for k in 1..=n {
        if worst[k] >= top {
            return Err(Error::Construction {
                level: k,
                f: worst[k],
                weighted: worst_weight[k],
            });
        }
        let floor = 1.0 + c[k - 1];
        let j = ((worst[k] - floor) / lattice.step).floor().max(0.0) as usize + 1;
        c.push(floor + j as f64 * lattice.step);
    }
    Ok(c)
}

/// `C_0 = 2`, `C_k > 1 + C_{k-1}`.
pub fn valid_cutoffs(c: &[f64]) -> bool {
    !c.is_empty() && c[0] == 2.0 && c.windows(2).all(|w| w[1] > 1.0 + w[0])
}

/// Truncated Borel-regularized symbol with its cutoff sequence.
#[derive(Debug, Clone)]
pub struct SymbolSequence<const N: usize> {
    pub potential: Potential,
    pub spec: InvariantRegionSpec,
    pub order: usize,
    pub cutoffs: Vec<f64>,
    solver: TransportSolver<N>,
}

/// Step for differentiating the cutoff product.
const CUTOFF_STEP: f64 = 1e-3;

impl<const N: usize> SymbolSequence<N> {
    pub fn new(potential: Potential, spec: InvariantRegionSpec, order: usize, cutoffs: Vec<f64>) -> Result<Self> {
        if cutoffs.len() != order + 1 || !valid_cutoffs(&cutoffs) {
            return Err(invalid("cutoffs", "need C_0 = 2 and C_k > 1 + C_(k-1) for k <= n"));
        }
        let solver = TransportSolver::new(potential, spec.sign, order, 1, TransportSettings::default())?;
        Ok(SymbolSequence {
            potential,
            spec,
            order,
            cutoffs,
            solver,
        })
    }

    /// Builds the cutoffs by [`borel_cutoffs`] with `δ` taken from the potential.
    pub fn construct(potential: Potential, spec: InvariantRegionSpec, order: usize, lattice: &BorelLattice) -> Result<Self> {
        let c = borel_cutoffs::<N>(&potential, &spec, order, potential.delta(), lattice)?;
        Self::new(potential, spec, order, c)
    }

    pub fn layers(&self, p: &PhasePoint<N>) -> Result<Layers<'_>> {
        self.solver.layers(p)
    }

    pub fn b(&self, k: usize, p: &PhasePoint<N>) -> Result<Complex64> {
        Ok(self.layers(p)?.b(k))
    }

    pub fn q(&self, k: usize, p: &PhasePoint<N>) -> Result<Complex64> {
        Ok(self.layers(p)?.q(k))
    }

    /// `f_m` of the point.
    pub fn f(&self, p: &PhasePoint<N>) -> Result<f64> {
        Ok(breve_f(2.0 * p.x + 2.0 * weighted_norm(&p.y, self.spec.m)?).sqrt())
    }

    /// `χ^±_ε = χ(±ă > -ε)`.
    pub fn chi_region(&self, p: &PhasePoint<N>) -> Result<f64> {
        let a = match a_breve(p, self.spec.m) {
            Ok(a) => a,
            Err(_) => return Ok(0.0),
        };
        chi_above(-self.spec.epsilon, self.spec.sign.value() * a)
    }

    /// `χ_k = χ(f > C_k)`.
    pub fn chi_level(&self, k: usize, p: &PhasePoint<N>) -> Result<f64> {
        chi_above(self.cutoffs[k], self.f(p)?)
    }

    /// `a_B = χ^±_ε Σ_{k ≤ n} χ_k b_k`.
    pub fn a_b(&self, p: &PhasePoint<N>) -> Result<Complex64> {
        let region = self.chi_region(p)?;
        if region == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let layers = self.layers(p)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..=self.order {
            let c = self.chi_level(k, p)?;
            if c != 0.0 {
                sum += layers.b(k) * c;
            }
        }
        Ok(sum * region)
    }

    /// `r_k = i b_k(χ_k∂_ηχ_ε + (η,ζ)·∇(χ_kχ_ε)) + ∇b_k·∇(χ_kχ_ε) + ½b_kΔ(χ_kχ_ε)`.
    ///
    /// Cutoff values come from the cutoffs module; their derivatives are
    /// fourth-order central differences of the product.
    pub fn remainder(&self, k: usize, p: &PhasePoint<N>) -> Result<Complex64> {
        if k > self.order {
            return Err(invalid("k", "remainder level exceeds the sequence order"));
        }
        let d = N + 1;
        // Coordinates (x, y, η); ζ is held fixed.
        let mut coords = Vec::with_capacity(d + 1);
        coords.extend_from_slice(&p.position());
        coords.push(p.eta);
        let mut failure = None;
        let mut product = |c: &[f64]| -> f64 {
            let mut o = *p;
            o.x = c[0];
            o.y.copy_from_slice(&c[1..d]);
            o.eta = c[d];
            match (self.chi_level(k, &o), self.chi_region(&o)) {
                (Ok(a), Ok(b)) => a * b,
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    0.0
                }
            }
        };
        let grad = fd::gradient4(&mut product, &coords, CUTOFF_STEP);
        let hess = fd::hessian(&mut product, &coords, CUTOFF_STEP);
        if let Some(e) = failure {
            return Err(e);
        }
        let lap: f64 = (0..d).map(|i| hess[i][i]).sum();
        let mut transport = grad[d] + p.eta * grad[0];
        for i in 0..N {
            transport += p.zeta[i] * grad[i + 1];
        }
        let layers = self.layers(p)?;
        let b = layers.b(k);
        let gb = layers.b_gradient(k);
        let mut out = Complex64::new(0.0, 1.0) * b * transport + b * (0.5 * lap);
        for i in 0..d {
            out += gb[i] * grad[i];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_to_infinity, Tolerance};
    use proptest::prelude::*;

    fn plus(eps: f64) -> InvariantRegionSpec {
        InvariantRegionSpec::new(1, eps, Sign::Plus).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn zero_potential_gives_trivial_layers() {
        let p = PhasePoint::<1>::new(10.0, [1.0], 2.0, [0.3]);
        assert_eq!(b_next(&Potential::Zero, &plus(0.5), 0, &p).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(q_next(&Potential::Zero, &plus(0.5), 0, &p).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(transport_residual(&Potential::Zero, &plus(0.5), 1, &p, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn on_axis_bare_coulomb_matches_perfect_square_integral() {
        // t²/2 + tη + x = (t + √(2x))²/2 when η = √(2x).
        let q = Potential::bare_coulomb(1.3);
        for x in [2.0, 10.0, 200.0] {
            let p = PhasePoint::<1>::new(x, [0.0], (2.0 * x).sqrt(), [0.0]);
            let b1 = b_next(&q, &plus(0.5), 0, &p).unwrap();
            let exact = Complex64::new(0.0, 2.0 * 1.3 / (2.0 * x).sqrt());
            assert!(rel(b1, exact) < 1e-9, "x = {x}: {b1} vs {exact}");
        }
    }

    #[test]
    fn first_layer_matches_direct_quadrature() {
        let q = Potential::coulomb(1.0);
        for sign in [Sign::Plus, Sign::Minus] {
            let spec = InvariantRegionSpec::new(1, 0.5, sign).unwrap();
            let p = PhasePoint::<2>::new(6.0, [1.5, -2.0], sign.value() * 1.0, [0.4, 0.1]);
            let b1 = b_next(&q, &spec, 0, &p).unwrap();
            let direct = integrate_to_infinity(
                |t: f64| q.value(&crate::classical::free_flow(&p, sign.value() * t).position()),
                0.0,
                Tolerance::new(1e-13, 1e-11),
            )
            .unwrap()
            .value;
            let exact = Complex64::new(0.0, sign.value() * direct);
            assert!(rel(b1, exact) < 1e-8, "{b1} vs {exact}");
        }
    }

    #[test]
    fn second_layer_matches_nested_oracle() {
        // b₂ = b₁²/2 + ½∫₀^∞ s Δq(Θ_{σs} p) ds.
        let q = Potential::coulomb(0.8);
        for sign in [Sign::Plus, Sign::Minus] {
            let spec = InvariantRegionSpec::new(1, 0.5, sign).unwrap();
            let p = PhasePoint::<1>::new(4.0, [2.5], sign.value() * 0.5, [-0.3]);
            let solver = TransportSolver::<1>::new(q, sign, 2, 0, TransportSettings::default()).unwrap();
            let layers = solver.layers(&p).unwrap();
            let b1 = layers.b(1);
            let moment = integrate_to_infinity(
                |s: f64| s * q.laplacian(&crate::classical::free_flow(&p, sign.value() * s).position()),
                0.0,
                Tolerance::new(1e-13, 1e-11),
            )
            .unwrap()
            .value;
            let exact = b1 * b1 * 0.5 + 0.5 * moment;
            assert!(rel(layers.b(2), exact) < 1e-8, "{} vs {exact}", layers.b(2));
            assert!(spec.contains(&p));
        }
    }

    #[test]
    fn laplacian_under_integral_matches_finite_differences() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let p = PhasePoint::<2>::new(8.0, [1.0, 2.0], 1.5, [0.2, -0.1]);
        let jet = laplacian_b_next(&q, &spec, 0, &p).unwrap();
        let solver = TransportSolver::<2>::new(q, Sign::Plus, 1, 0, TransportSettings::default()).unwrap();
        let mut f = |c: &[f64]| {
            let o = PhasePoint::<2>::new(c[0], [c[1], c[2]], p.eta, p.zeta);
            solver.layers(&o).unwrap().b_jet(1)[0]
        };
        let lap = fd::laplacian(&mut f, &p.position(), 0.05);
        assert!((jet.im - lap).abs() < 1e-4 * lap.abs().max(1e-3), "{jet} vs {lap}");
        assert!(jet.re == 0.0);
    }

    #[test]
    fn transport_residual_is_small_and_second_order() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let p = PhasePoint::<1>::new(6.0, [2.0], 1.0, [0.3]);
        for level in [1, 2] {
            let r = transport_residual(&q, &spec, level, &p, 0.05).unwrap();
            assert!(r < 1e-4, "level {level}: {r}");
            let order = transport_residual_order(&q, &spec, level, &p, &[0.4, 0.2, 0.1]).unwrap();
            assert!((order.slope - 2.0).abs() < 0.3, "level {level}: order {}", order.slope);
        }
    }

    #[test]
    fn stencil_outside_region_is_a_domain_error() {
        let spec = plus(0.25);
        let p = PhasePoint::<1>::new(10.0, [0.0], -0.24 * 20f64.sqrt(), [0.0]);
        let far = PhasePoint::<1>::new(10.0, [0.0], -5.0, [0.0]);
        assert!(matches!(b_next(&Potential::coulomb(1.0), &spec, 0, &far), Err(Error::Domain { .. })));
        assert!(matches!(
            transport_residual(&Potential::coulomb(1.0), &spec, 1, &p, 0.5),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn q1_decays_faster_than_q() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let solver = TransportSolver::<1>::new(q, Sign::Plus, 1, 2, TransportSettings::default()).unwrap();
        let xs = [50.0, 100.0, 200.0, 400.0, 800.0];
        let mut v0 = Vec::new();
        let mut v1 = Vec::new();
        for &x in &xs {
            let p = PhasePoint::<1>::new(x, [0.0], 0.0, [0.0]);
            let l = solver.layers(&p).unwrap();
            v0.push(l.q(0).norm());
            v1.push(l.q(1).norm());
        }
        let w: Vec<f64> = xs.iter().map(|x| 1.0 + x + 1.0).collect();
        let e0 = -fit::power_law(&w, &v0).unwrap().slope;
        let e1 = -fit::power_law(&w, &v1).unwrap().slope;
        assert!((e1 - e0 - 0.5).abs() < 0.1, "{e0} {e1}");
        assert!(spec.sign == Sign::Plus);
    }

    #[test]
    fn decay_exponents_follow_level() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let dir = [0.8, 0.6];
        let f1 = decay_fit::<1>(&q, &spec, 1, &dir).unwrap();
        let f2 = decay_fit::<1>(&q, &spec, 2, &dir).unwrap();
        assert!((f1.exponent - 0.5).abs() < 0.1, "{f1:?}");
        assert!((f2.exponent - 1.0).abs() < 0.15, "{f2:?}");
        assert!(f2.exponent >= f1.exponent);
        let g = decay_fit::<1>(&Potential::gaussian(1.0, 1.0).unwrap(), &spec, 1, &dir).unwrap();
        assert!(g.super_polynomial);
    }

    #[test]
    fn cutoffs_for_zero_potential_are_the_minimal_ladder() {
        let c = borel_cutoffs::<1>(&Potential::Zero, &plus(0.5), 3, 0.5, &BorelLattice::default()).unwrap();
        assert_eq!(c, vec![2.0, 3.125, 4.25, 5.375]);
        assert!(valid_cutoffs(&c));
    }

    #[test]
    fn coulomb_cutoffs_are_monotone_in_lattice_density() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let coarse = BorelLattice {
            per_octave: 1,
            ..BorelLattice::default()
        };
        let dense = BorelLattice {
            per_octave: 2,
            ..coarse.clone()
        };
        let c1 = borel_cutoffs::<1>(&q, &spec, 2, 0.5, &coarse).unwrap();
        let c2 = borel_cutoffs::<1>(&q, &spec, 2, 0.5, &dense).unwrap();
        assert!(valid_cutoffs(&c1) && valid_cutoffs(&c2));
        for (a, b) in c1.iter().zip(&c2) {
            assert!(b >= a, "{c1:?} {c2:?}");
        }
        // Out-of-sample check on points between the lattice f values.
        let seq = SymbolSequence::<1>::new(q, spec, 2, c2.clone()).unwrap();
        for (j, frac) in [0.3, 0.7].iter().enumerate() {
            for octave in 0..4 {
                let f = c2[2].max(2.0) * 2f64.powf(octave as f64 + frac);
                let p = lattice_point::<1>(&spec, f, 0.25 * j as f64, 0.2, 0.1).unwrap();
                let w = borel_weighted(&q, &spec, 2, 0.5, 1.0, &p).unwrap();
                for k in 1..=2 {
                    if f > seq.cutoffs[k] {
                        assert!(w[k] <= 0.5f64.powi(k as i32), "k = {k}, f = {f}: {}", w[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn a_b_reduces_to_cutoffs_for_zero_potential() {
        let seq = SymbolSequence::<1>::new(Potential::Zero, plus(0.5), 2, vec![2.0, 3.5, 5.0]).unwrap();
        for (x, eta) in [(1.0, 0.0), (2.2, -0.4), (30.0, 3.0), (30.0, -2.0)] {
            let p = PhasePoint::<1>::new(x, [0.5], eta, [0.1]);
            let expected = seq.chi_region(&p).unwrap() * seq.chi_level(0, &p).unwrap();
            assert!((seq.a_b(&p).unwrap() - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn plateau_symbol_is_the_plain_sum_and_close_to_one() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let seq = SymbolSequence::<1>::new(q, spec, 3, vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        let mut dev = Vec::new();
        let mut fs = Vec::new();
        for f in [20.0, 40.0, 80.0, 160.0] {
            let p = lattice_point::<1>(&spec, f, 0.25, 0.5, 0.1).unwrap();
            let layers = seq.layers(&p).unwrap();
            let sum: Complex64 = (0..=3).map(|k| layers.b(k)).sum();
            let ab = seq.a_b(&p).unwrap();
            assert!((ab - sum).norm() < 1e-14);
            for k in 0..=3 {
                let r = seq.remainder(k, &p).unwrap();
                assert!(r.norm() < 1e-12, "k = {k}: {r}");
            }
            dev.push((ab - 1.0).norm() * f);
            fs.push(f);
        }
        // |a_B - 1| f^{2δ} stays bounded (δ = 1/2).
        let max = dev.iter().cloned().fold(0.0, f64::max);
        let min = dev.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max < 3.0 * min, "{dev:?}");
    }

    #[test]
    fn remainder_is_active_only_in_cutoff_transitions() {
        let q = Potential::coulomb(1.0);
        let spec = plus(0.5);
        let seq = SymbolSequence::<1>::new(q, spec, 1, vec![2.0, 4.0]).unwrap();
        // f inside the χ_1 transition (13/12·4, 16/3).
        let p = lattice_point::<1>(&spec, 4.8, 0.0, 0.5, 0.0).unwrap();
        assert!(seq.remainder(1, &p).unwrap().norm() > 1e-4);
        assert!(seq.remainder(0, &p).unwrap().norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn layers_alternate_between_imaginary_and_real(
            x in 3.0f64..40.0, y in -10.0f64..10.0, a in -0.2f64..1.5, z in -1.0f64..1.0,
        ) {
            let q = Potential::coulomb(1.0);
            let spec = plus(0.5);
            let ym = weighted_norm(&[y], 1).unwrap();
            let f = (2.0 * x + 2.0 * ym).sqrt();
            let p = PhasePoint::<1>::new(x, [y], a * f - y / ym * z, [z]);
            prop_assume!(spec.contains(&p));
            let solver = TransportSolver::<1>::new(q, Sign::Plus, 2, 0, TransportSettings::default()).unwrap();
            let l = solver.layers(&p).unwrap();
            for k in 0..=2 {
                let b = l.b(k);
                let (off, on) = if k % 2 == 1 { (b.re, b.im) } else { (b.im, b.re) };
                prop_assert!(off.abs() <= 1e-12 * on.abs().max(1e-300));
            }
            let q1 = l.q(1);
            prop_assert!(q1.re.abs() <= 1e-12 * q1.im.abs().max(1e-300));
        }

        #[test]
        fn borel_ladder_is_strict(step in 0.05f64..0.5, n in 0usize..5) {
            let lattice = BorelLattice { step, f_max: 16.0, ..BorelLattice::default() };
            let c = borel_cutoffs::<1>(&Potential::Zero, &plus(0.5), n, 0.5, &lattice).unwrap();
            prop_assert!(valid_cutoffs(&c));
            prop_assert_eq!(c.len(), n + 1);
        }
    }
}
