//! Parabolic coordinates `(f, g)`, the phases `θ^λ` and `θ_ex`, and
//! residual checks of the calculus identities they satisfy.
//!
//! `N = d - 1` is the transverse dimension. Identities are exact for
//! `r + x > 2`, where `breve_f` is the identity and `f² = r + x`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::cutoffs::breve_f;
use crate::error::{domain, invalid, Result};
use crate::fd;

/// A configuration-space point `(x, y)` with `x` along the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
}

impl<const N: usize> CartesianPoint<N> {
    pub const fn new(x: f64, y: [f64; N]) -> Self {
        CartesianPoint { x, y }
    }

    /// Space dimension `d = N + 1`.
    pub const fn dim(&self) -> usize {
        N + 1
    }

    pub fn y_norm_sq(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum()
    }

    pub fn r(&self) -> f64 {
        (self.x * self.x + self.y_norm_sq()).sqrt()
    }

    /// `r + x` without cancellation for `x < 0`.
    pub fn r_plus_x(&self) -> f64 {
        let r = self.r();
        if self.x >= 0.0 {
            r + self.x
        } else {
            let den = r - self.x;
            if den == 0.0 {
                0.0
            } else {
                self.y_norm_sq() / den
            }
        }
    }

    /// Coordinates as a slice `(x, y_1, …)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(N + 1);
        v.push(self.x);
        v.extend_from_slice(&self.y);
        v
    }

    pub fn from_slice(p: &[f64]) -> Self {
        let mut y = [0.0; N];
        y.copy_from_slice(&p[1..=N]);
        CartesianPoint { x: p[0], y }
    }

    fn in_exact_region(&self) -> bool {
        self.r_plus_x() > 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicFrame<const N: usize> {
    pub f: f64,
    pub g: [f64; N],
    pub r: f64,
    /// `J = f^{2-d} / (f² + g²)`.
    pub jacobian: f64,
}

pub fn to_parabolic<const N: usize>(p: &CartesianPoint<N>) -> ParabolicFrame<N> {
    let r = p.r();
    let f = breve_f(p.r_plus_x()).sqrt();
    let mut g = [0.0; N];
    for (gi, yi) in g.iter_mut().zip(&p.y) {
        *gi = yi / f;
    }
    let g2: f64 = g.iter().map(|v| v * v).sum();
    let jacobian = f.powi(1 - N as i32) / (f * f + g2);
    ParabolicFrame { f, g, r, jacobian }
}

/// `θ^λ = f³/3 + λ f`.
pub fn theta_lambda(f: f64, lambda: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(invalid("f", "parabolic variable must be positive"));
    }
    Ok(f * f * f / 3.0 + lambda * f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDerivatives {
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub laplacian: f64,
}

/// Closed-form gradient, Hessian and Laplacian of `θ⁰ = f³/3`.
pub fn theta0_derivatives<const N: usize>(p: &CartesianPoint<N>) -> Result<ThetaDerivatives> {
    if !p.in_exact_region() {
        return Err(domain("theta0_derivatives", "requires r + x > 2"));
    }
    let fr = to_parabolic(p);
    let (f, r) = (fr.f, fr.r);
    let d = N + 1;
    let big_f = f * f;
    let coords = p.to_vec();
    // ∇θ⁰ = (f/2r) v with v = (f², y)
    let mut v = vec![big_f];
    v.extend_from_slice(&p.y);
    let gradient: Vec<f64> = v.iter().map(|vi| f / (2.0 * r) * vi).collect();
    let mut hessian = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let coef = v[j] / (4.0 * f * r * r) - f * coords[j] / (2.0 * r * r * r);
            let dv = if i == 0 {
                v[j] / r
            } else if i == j {
                1.0
            } else {
                0.0
            };
            hessian[i][j] = coef * v[i] + f / (2.0 * r) * dv;
        }
    }
    let laplacian = (d as f64 / 2.0) * (f / r);
    Ok(ThetaDerivatives {
        gradient,
        hessian,
        laplacian,
    })
}

/// `(f_ex, θ_ex)` on the "+" root, for `x > |y|`.
fn exact_root<const N: usize>(p: &CartesianPoint<N>) -> Result<(f64, f64, f64)> {
    let y2 = p.y_norm_sq();
    if !(p.x > 0.0) || y2 >= p.x * p.x {
        return Err(domain("theta_ex", "requires x > |y|"));
    }
    let s = (p.x * p.x - y2).sqrt();
    let f_ex = (p.x + s).sqrt();
    let theta = 4.0 / 3.0 * f_ex * (p.x - 0.5 * s);
    Ok((f_ex, theta, s))
}

/// `θ_ex = (4/3) √(x + √(x² - y²)) (x - ½√(x² - y²))`, a solution of `½|∇θ|² = x`.
pub fn theta_ex<const N: usize>(p: &CartesianPoint<N>) -> Result<f64> {
    exact_root(p).map(|(_, t, _)| t)
}

/// `f_ex = √(x + √(x² - y²))`.
pub fn f_ex<const N: usize>(p: &CartesianPoint<N>) -> Result<f64> {
    exact_root(p).map(|(f, _, _)| f)
}

fn fd_step<const N: usize>(p: &CartesianPoint<N>) -> f64 {
    let m = p.y.iter().fold(p.x.abs(), |a, v| a.max(v.abs()));
    1e-5 * m.max(1.0)
}

/// `½|∇θ_ex|² - x` with a fourth-order central-difference gradient.
pub fn eikonal_residual<const N: usize>(p: &CartesianPoint<N>) -> Result<f64> {
    theta_ex(p)?;
    let h = 100.0 * fd_step(p);
    // keep the stencil inside x > |y|
    let margin = p.x - p.y_norm_sq().sqrt();
    let h = h.min(margin / 4.0);
    let mut th = |q: &[f64]| theta_ex(&CartesianPoint::<N>::from_slice(q)).unwrap_or(f64::NAN);
    let g = fd::gradient4(&mut th, &p.to_vec(), h);
    Ok(0.5 * g.iter().map(|v| v * v).sum::<f64>() - p.x)
}

/// Residuals of `∂_f ln J^{-1/2} = ½ div F` (with `F = 2r∇f`) and of
/// `∇(2r/f²) = (2/(r f⁴))(-|y|², x y)`.
pub fn flow_field_checks<const N: usize>(p: &CartesianPoint<N>) -> Result<(f64, f64)> {
    if !p.in_exact_region() {
        return Err(domain("flow_field_checks", "requires r + x > 2"));
    }
    let c = p.to_vec();
    let h = fd_step(p);
    let field = |q: &[f64]| -> Vec<f64> {
        let q = CartesianPoint::<N>::from_slice(q);
        let fr = to_parabolic(&q);
        let g = theta0_derivatives(&q).map(|t| t.gradient).unwrap_or_else(|_| vec![f64::NAN; N + 1]);
        // F = (2r/f²)∇θ⁰
        g.iter().map(|v| 2.0 * fr.r / (fr.f * fr.f) * v).collect()
    };
    let f_here = field(&c);
    let mut half_ln_inv_j = |q: &[f64]| -0.5 * to_parabolic(&CartesianPoint::<N>::from_slice(q)).jacobian.ln();
    let grad_lj = fd::gradient4(&mut half_ln_inv_j, &c, h);
    let lhs: f64 = f_here.iter().zip(&grad_lj).map(|(a, b)| a * b).sum();
    let mut div = 0.0;
    for i in 0..=N {
        let mut comp = |q: &[f64]| field(q)[i];
        div += fd::partial4(&mut comp, &c, i, h);
    }
    let res1 = (lhs - 0.5 * div).abs();

    let mut ratio = |q: &[f64]| {
        let q = CartesianPoint::<N>::from_slice(q);
        2.0 * q.r() / breve_f(q.r_plus_x())
    };
    let grad = fd::gradient(&mut ratio, &c, h);
    let fr = to_parabolic(p);
    let pre = 2.0 / (fr.r * fr.f.powi(4));
    let mut res2: f64 = (grad[0] + pre * p.y_norm_sq()).powi(2);
    for i in 0..N {
        res2 += (grad[i + 1] - pre * p.x * p.y[i]).powi(2);
    }
    Ok((res1, res2.sqrt()))
}

/// Normalized comparisons of the exact and approximate phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseComparison {
    /// `(θ_ex - θ⁰) / (f³ |y/x|⁴)`.
    pub theta_ratio: f64,
    /// `(f - f_ex) / (f |y/x|²)`. The difference is genuinely second order:
    /// `f² - f_ex² = 2|y|²/(r + s)`, so this ratio tends to 1/4 as `y → 0`.
    pub f_ratio: f64,
    /// `(θ_ex(x+λ, y) - θ^λ) / (f³|y/x|⁴ + f|y/x|² + 1/f)`.
    pub shifted_ratio: f64,
}

/// Bounds frozen from a calibration sweep over `x ∈ [1.5, 10⁴]`, `|y| < x/2`,
/// `|λ| ≤ 5` (see the `phase_comparison_constants_hold_on_sweep` test).
/// Measured maxima: 0.031, 0.2500, 16.1.
pub const THETA_RATIO_BOUND: f64 = 0.05;
pub const F_RATIO_BOUND: f64 = 0.3;
pub const SHIFTED_RATIO_BOUND: f64 = 20.0;

pub fn phase_comparison<const N: usize>(p: &CartesianPoint<N>, lambda: f64) -> Result<PhaseComparison> {
    let y2 = p.y_norm_sq();
    if !(p.x > 1.0) || 4.0 * y2 >= p.x * p.x {
        return Err(domain("phase_comparison", "requires x > 1 and x > 2|y|"));
    }
    let fr = to_parabolic(p);
    let f = fr.f;
    let (fe, _, s) = exact_root(p)?;
    // f² - f_ex² = r - s = 2|y|²/(r + s) on the exact branch
    let f_minus_fe = 2.0 * y2 / ((fr.r + s) * (f + fe));
    // θ_ex = f_ex³/3 + f_ex δ with δ = x - s = |y|²/(x + s)
    let delta = y2 / (p.x + s);
    let theta_diff = -f_minus_fe * (fe * fe + fe * f + f * f) / 3.0 + fe * delta;
    let q4 = (y2 / (p.x * p.x)).powi(2);
    let (theta_ratio, f_ratio) = if y2 == 0.0 {
        (0.0, 0.0)
    } else {
        (theta_diff / (f * f * f * q4), f_minus_fe / (f * q4.sqrt()))
    };
    let shifted = CartesianPoint::<N> { x: p.x + lambda, y: p.y };
    let t_ex = theta_ex(&shifted)?;
    let bound = f * f * f * q4 + f * q4.sqrt() + 1.0 / f;
    let shifted_ratio = (t_ex - theta_lambda(f, lambda)?) / bound;
    Ok(PhaseComparison {
        theta_ratio,
        f_ratio,
        shifted_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

fn theta0_at<const N: usize>(p: &[f64]) -> f64 {
    let f = to_parabolic(&CartesianPoint::<N>::from_slice(p)).f;
    f * f * f / 3.0
}
    use crate::linalg::{determinant, symmetric_eigenvalues};
    use proptest::prelude::*;

    #[test]
    fn frame_examples() {
        let fr = to_parabolic(&CartesianPoint::new(1.5, [2.0, 0.0]));
        assert_eq!((fr.f, fr.g, fr.r), (2.0, [1.0, 0.0], 2.5));
        assert_eq!(fr.f * fr.f + fr.g[0] * fr.g[0], 2.0 * fr.r);
        let fr = to_parabolic(&CartesianPoint::new(-10.0, [0.0]));
        assert_eq!(fr.f, 1.0);
        let fr = to_parabolic(&CartesianPoint::new(3.0, [4.0, 0.0]));
        assert_eq!(fr.r, 5.0);
        assert!((fr.f - 8f64.sqrt()).abs() < 1e-15);
        assert!((fr.g[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn theta_lambda_examples() {
        assert!((theta_lambda(2.0, 0.0).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!((theta_lambda(1.0, 3.0).unwrap() - 10.0 / 3.0).abs() < 1e-15);
        assert!((theta_lambda(2.0, 1.0).unwrap() - 14.0 / 3.0).abs() < 1e-15);
        assert!(theta_lambda(0.0, 1.0).is_err());
    }

    #[test]
    fn theta0_derivative_examples() {
        let p = CartesianPoint::new(1.5, [2.0]);
        let t = theta0_derivatives(&p).unwrap();
        assert!((t.gradient[0] - 1.6).abs() < 1e-15 && (t.gradient[1] - 0.8).abs() < 1e-15);
        assert!((t.laplacian - 0.8).abs() < 1e-15);
        assert!(theta0_derivatives(&CartesianPoint::new(-3.0, [0.5])).is_err());
    }

    #[test]
    fn hessian_matches_closed_form_entries_and_differences() {
        let p = CartesianPoint::new(2.0, [1.5, -0.7]);
        let t = theta0_derivatives(&p).unwrap();
        let fr = to_parabolic(&p);
        let (f, r, x) = (fr.f, fr.r, p.x);
        // the displayed entry formulas, evaluated independently
        let h11 = -0.5 * x * f.powi(3) / r.powi(3) + 0.75 * f.powi(3) / r.powi(2);
        assert!((t.hessian[0][0] - h11).abs() < 1e-13);
        for a in 0..2 {
            let ya = p.y[a];
            let h1a = -0.5 * ya * f.powi(3) / r.powi(3) + 0.75 * ya * f / r.powi(2);
            assert!((t.hessian[0][a + 1] - h1a).abs() < 1e-13);
            for b in 0..2 {
                let yb = p.y[b];
                let delta = if a == b { 1.0 } else { 0.0 };
                let hab = -0.5 * ya * yb * f / r.powi(3) + 0.25 * ya * yb / (r * r * f) + 0.5 * f / r * delta;
                assert!((t.hessian[a + 1][b + 1] - hab).abs() < 1e-13);
            }
        }
        let fdh = fd::hessian(&mut theta0_at::<2>, &p.to_vec(), 1e-3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((fdh[i][j] - t.hessian[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn theta_ex_examples() {
        assert!((theta_ex(&CartesianPoint::new(2.0, [0.0])).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert!(eikonal_residual(&CartesianPoint::new(5.0, [3.0, 0.0])).unwrap().abs() < 1e-8);
        assert!(theta_ex(&CartesianPoint::new(5.0, [5.0, 0.0])).is_err());
        assert!(eikonal_residual(&CartesianPoint::new(10.0, [2.0, 1.0])).unwrap().abs() < 1e-7);
        assert!(eikonal_residual(&CartesianPoint::new(4.0, [0.0])).unwrap().abs() < 1e-9);
        assert!(eikonal_residual(&CartesianPoint::new(100.0, [40.0, 0.0])).unwrap().abs() < 1e-6);
    }

    #[test]
    fn flow_field_examples() {
        let (a, b) = flow_field_checks(&CartesianPoint::new(3.0, [1.0, 0.0])).unwrap();
        assert!(a < 1e-5 && b < 1e-5);
        let (_, b) = flow_field_checks(&CartesianPoint::new(2.0, [0.0, 0.0])).unwrap();
        assert_eq!(b, 0.0);
        let (a, b) = flow_field_checks(&CartesianPoint::new(10.0, [3.0, 2.0])).unwrap();
        assert!(a < 1e-5 && b < 1e-5);
        let (a, b) = flow_field_checks(&CartesianPoint::new(4.0, [2.5])).unwrap();
        assert!(a < 1e-5 && b < 1e-5);
    }

    #[test]
    fn phase_comparison_examples() {
        let c = phase_comparison(&CartesianPoint::new(7.0, [0.0, 0.0]), 0.0).unwrap();
        assert_eq!((c.theta_ratio, c.f_ratio), (0.0, 0.0));
        let p = CartesianPoint::new(7.0, [0.0]);
        assert_eq!(f_ex(&p).unwrap(), to_parabolic(&p).f);
        let c = phase_comparison(&CartesianPoint::new(50.0, [10.0, 0.0]), 0.0).unwrap();
        assert!(c.theta_ratio.is_finite() && c.theta_ratio.abs() <= 10.0);
        let c = phase_comparison(&CartesianPoint::new(50.0, [10.0, 0.0]), 1.0).unwrap();
        assert!(c.shifted_ratio.abs() <= 10.0);
        assert!(phase_comparison(&CartesianPoint::new(5.0, [3.0]), 0.0).is_err());
    }

    #[test]
    fn phase_comparison_constants_hold_on_sweep() {
        let mut worst = [0.0f64; 3];
        for i in 0..60 {
            let x = 1.5 * 1.17f64.powi(i);
            for j in 0..20 {
                let y = 0.499 * x * j as f64 / 19.0;
                for &lambda in &[-5.0, -1.0, 0.0, 1.0, 5.0] {
                    if x + lambda <= y {
                        continue;
                    }
                    let c = phase_comparison(&CartesianPoint::new(x, [y]), lambda).unwrap();
                    worst[0] = worst[0].max(c.theta_ratio.abs());
                    worst[1] = worst[1].max(c.f_ratio.abs());
                    worst[2] = worst[2].max(c.shifted_ratio.abs());
                }
            }
        }
        assert!(worst[0] <= THETA_RATIO_BOUND, "{worst:?}");
        assert!(worst[1] <= F_RATIO_BOUND, "{worst:?}");
        assert!(worst[2] <= SHIFTED_RATIO_BOUND, "{worst:?}");
    }

    fn exact_region_point() -> impl Strategy<Value = CartesianPoint<2>> {
        (-100.0f64..100.0, -100.0f64..100.0, -100.0f64..100.0)
            .prop_map(|(x, a, b)| CartesianPoint::new(x, [a, b]))
            .prop_filter("r + x > 2", |p| p.r_plus_x() > 2.0)
    }

    proptest! {
        #[test]
        fn parabolic_identities(p in exact_region_point()) {
            let fr = to_parabolic(&p);
            let g2: f64 = fr.g.iter().map(|v| v * v).sum();
            prop_assert!((fr.f * fr.f + g2 - 2.0 * fr.r).abs() <= 1e-12);
            prop_assert!((fr.f * fr.f - g2 - 2.0 * p.x).abs() <= 1e-12);
            prop_assert!((fr.f * g2.sqrt() - p.y_norm_sq().sqrt()).abs() <= 1e-12);
        }

        #[test]
        fn f_squared_is_convex(p in exact_region_point()) {
            let mut f2 = |q: &[f64]| breve_f(CartesianPoint::<2>::from_slice(q).r_plus_x());
            let h = fd::hessian(&mut f2, &p.to_vec(), 1e-3 * p.r().max(1.0));
            prop_assert!(symmetric_eigenvalues(&h)[0] >= -1e-8);
        }

        #[test]
        fn jacobian_is_determinant_of_coordinate_change(p in exact_region_point()) {
            let c = p.to_vec();
            let h = 1e-5 * p.r().max(1.0);
            let mut jac = vec![vec![0.0; 3]; 3];
            for row in 0..3 {
                let mut comp = |q: &[f64]| {
                    let fr = to_parabolic(&CartesianPoint::<2>::from_slice(q));
                    if row == 0 { fr.f } else { fr.g[row - 1] }
                };
                for col in 0..3 {
                    jac[row][col] = fd::partial4(&mut comp, &c, col, h);
                }
            }
            let j = to_parabolic(&p).jacobian;
            prop_assert!((determinant(&jac).abs() - j).abs() <= 1e-6 * j.max(1.0));
        }

        #[test]
        fn laplacian_identity_d2(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let p = CartesianPoint::new(x, [y]);
            prop_assume!(p.r_plus_x() > 2.5);
            let lap = fd::laplacian(&mut theta0_at::<1>, &p.to_vec(), 1e-3 * p.r().max(1.0));
            prop_assert!((lap - theta0_derivatives(&p).unwrap().laplacian).abs() <= 1e-6);
        }

        #[test]
        fn laplacian_identity_d3(p in exact_region_point()) {
            prop_assume!(p.r_plus_x() > 2.5);
            let lap = fd::laplacian(&mut theta0_at::<2>, &p.to_vec(), 1e-3 * p.r().max(1.0));
            prop_assert!((lap - theta0_derivatives(&p).unwrap().laplacian).abs() <= 1e-6);
        }
    }
}
