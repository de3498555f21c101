//! Chebyshev-Lobatto panel rule with a cumulative-integration matrix.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::quadrature::gauss_legendre;

/// Interpolation on `n` Chebyshev-Lobatto nodes of `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ChebyshevRule {
    /// Nodes in descending order; `nodes[0] = 1`.
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
    /// `tail[i][j]`: weight of `f(nodes[j])` in `∫_{nodes[i]}^1 p(s) ds` for the interpolant `p`.
    tail: Vec<Vec<f64>>,
}

impl ChebyshevRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let m = n - 1;
        let nodes: Vec<f64> = (0..n).map(|j| (PI * j as f64 / m as f64).cos()).collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let (gx, gw) = gauss_legendre(n);
        let mut rule = ChebyshevRule {
            nodes,
            bary,
            tail: Vec::new(),
        };
        let mut tail = vec![vec![0.0; n]; n];
        for i in 0..n {
            let a = rule.nodes[i];
            let half = 0.5 * (1.0 - a);
            if half == 0.0 {
                continue;
            }
            for (x, w) in gx.iter().zip(&gw) {
                let s = a + half * (x + 1.0);
                let l = rule.lagrange(s);
                for j in 0..n {
                    tail[i][j] += half * w * l[j];
                }
            }
        }
        rule.tail = tail;
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values at `s` (barycentric form).
    pub fn lagrange(&self, s: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        for j in 0..n {
            if s == self.nodes[j] {
                out[j] = 1.0;
                return out;
            }
        }
        let mut denom = 0.0;
        for j in 0..n {
            let w = self.bary[j] / (s - self.nodes[j]);
            out[j] = w;
            denom += w;
        }
        for v in &mut out {
            *v /= denom;
        }
        out
    }

    /// `∫_{nodes[i]}^1` of the interpolant of `values`.
    pub fn tail_weights(&self, i: usize) -> &[f64] {
        &self.tail[i]
    }

    /// Chebyshev coefficients of the interpolant of `values` (given on `nodes`).
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let m = (n - 1) as f64;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for (j, v) in values.iter().enumerate() {
                    let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    s += w * v * (PI * (k * j) as f64 / m).cos();
                }
                let c = 2.0 * s / m;
                if k == 0 || k == n - 1 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_integral_of_smooth_function() {
        let rule = ChebyshevRule::new(17);
        let vals: Vec<f64> = rule.nodes.iter().map(|s| s.exp()).collect();
        for i in 0..rule.len() {
            let got: f64 = rule.tail_weights(i).iter().zip(&vals).map(|(w, v)| w * v).sum();
            let want = 1f64.exp() - rule.nodes[i].exp();
            assert!((got - want).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn coefficients_reproduce_polynomial() {
        let rule = ChebyshevRule::new(9);
        // T_3(s) = 4s^3 - 3s
        let vals: Vec<f64> = rule.nodes.iter().map(|s| 4.0 * s * s * s - 3.0 * s).collect();
        let c = rule.coefficients(&vals);
        for (k, ck) in c.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((ck - want).abs() < 1e-14);
        }
    }
}
