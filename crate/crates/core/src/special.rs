//! Gamma, Beta and Airy functions.
//!
//! Gamma comes from `libm`. The Airy function uses the asymptotic
//! expansions for `|z| >= 8` and Taylor stepping of `w'' = z w` inside,
//! always marching in the numerically stable direction: outward from the
//! exact values at the origin on the oscillatory side, inward from the
//! asymptotic values at `z = 8` on the decaying side.

use core::f64::consts::PI;
use num_traits::Float;

/// Ai(0) = 3^{-2/3} / Γ(2/3).
pub const AI_ZERO: f64 = 0.355_028_053_887_817_24;
/// Ai'(0) = -3^{-1/3} / Γ(1/3).
pub const AIP_ZERO: f64 = -0.258_819_403_792_806_8;

/// Switch between Taylor stepping and the asymptotic expansions.
const ASYMPTOTIC_FROM: f64 = 8.0;
/// Maximal Taylor step.
const MAX_STEP: f64 = 0.5;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// B(a, b) = Γ(a)Γ(b)/Γ(a+b) for a, b > 0.
pub fn beta(a: f64, b: f64) -> f64 {
    if a + b < 150.0 {
        gamma(a) * gamma(b) / gamma(a + b)
    } else {
        (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Airy function Ai(z).
pub fn airy_ai(z: f64) -> f64 {
    airy_ai_with_derivative(z).0
}

/// (Ai(z), Ai'(z)).
pub fn airy_ai_with_derivative(z: f64) -> (f64, f64) {
    if z >= ASYMPTOTIC_FROM {
        asymptotic_decaying(z)
    } else if z <= -ASYMPTOTIC_FROM {
        asymptotic_oscillatory(-z)
    } else if z >= 0.0 {
        let (a, ap) = asymptotic_decaying(ASYMPTOTIC_FROM);
        march(ASYMPTOTIC_FROM, a, ap, z)
    } else {
        march(0.0, AI_ZERO, AIP_ZERO, z)
    }
}

/// Coefficients u_k of the Airy asymptotic series.
fn u_coefficient(k: usize, prev: f64) -> f64 {
    let k = k as f64;
    prev * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k)
}

fn asymptotic_decaying(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let mut u = 1.0;
    let mut su = 1.0;
    let mut sv = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        u = u_coefficient(k, u);
        let v = -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * u;
        let p = zeta.powi(k as i32);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = u / p;
        if term >= last || term < 1e-17 {
            break;
        }
        last = term;
        su += sign * term;
        sv += sign * v / p;
    }
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = z.sqrt().sqrt();
    (pre * su / q, -pre * q * sv)
}

fn asymptotic_oscillatory(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let mut u = 1.0;
    // even/odd partial sums for Ai (u) and Ai' (v)
    let (mut ue, mut uo, mut ve, mut vo) = (1.0, 0.0, 1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        u = u_coefficient(k, u);
        let v = -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * u;
        let p = zeta.powi(k as i32);
        let term = u / p;
        if term >= last || term < 1e-17 {
            break;
        }
        last = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            ue += sign * term;
            ve += sign * v / p;
        } else {
            uo += sign * term;
            vo += sign * v / p;
        }
    }
    let phase = zeta - PI / 4.0;
    let (s, c) = phase.sin_cos();
    let q = x.sqrt().sqrt();
    let ai = (c * ue + s * uo) / (PI.sqrt() * q);
    let aip = q * (s * ve - c * vo) / PI.sqrt();
    (ai, aip)
}

/// Carries (w, w') from `z0` to `z` along w'' = z w by Taylor steps.
fn march(mut z0: f64, mut w: f64, mut wp: f64, z: f64) -> (f64, f64) {
    while z0 != z {
        let remaining = z - z0;
        let h = if remaining.abs() > MAX_STEP {
            MAX_STEP.copysign(remaining)
        } else {
            remaining
        };
        let (nw, nwp) = taylor_step(z0, w, wp, h);
        w = nw;
        wp = nwp;
        z0 = if remaining.abs() > MAX_STEP { z0 + h } else { z };
    }
    (w, wp)
}

fn taylor_step(z0: f64, w: f64, wp: f64, h: f64) -> (f64, f64) {
    // n (n-1) a_n = z0 a_{n-2} + a_{n-3}
    let mut value = w + wp * h;
    let mut deriv = wp;
    let mut hp = h; // h^{n-1} for the coefficient being added
    // (a_{n-3}, a_{n-2}, a_{n-1}) entering the step for a_n, starting at n = 2
    let (mut am2, mut am1, mut am0) = (0.0, w, wp);
    let mut quiet = 0;
    for n in 2..200usize {
        let an = (z0 * am1 + am2) / ((n * (n - 1)) as f64);
        let dterm = n as f64 * an * hp;
        hp *= h;
        let vterm = an * hp;
        value += vterm;
        deriv += dterm;
        am2 = am1;
        am1 = am0;
        am0 = an;
        if vterm.abs() <= 1e-18 * value.abs().max(1e-300) && dterm.abs() <= 1e-18 * deriv.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (value, deriv)
}
