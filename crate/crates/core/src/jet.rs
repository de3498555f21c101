//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A jet over `n` variables of order `K` stores the coefficients `c_m` of
//! `Σ_{|m| ≤ K} c_m h^m`, so `c_m = ∂^m f(0) / m!`. Monomials are graded by
//! total degree, which makes truncation a prefix operation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

pub const MAX_VARS: usize = 4;

/// Monomial tables shared by all jets of one shape.
#[derive(Debug, Clone)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<[u8; MAX_VARS]>,
    /// `ends[k]`: number of monomials of degree ≤ k.
    ends: Vec<usize>,
    /// `(i, j, k)` with `exps[i] + exps[j] = exps[k]`, degree ≤ order.
    products: Vec<(u32, u32, u32)>,
    /// `shift[v][i]`: index of `exps[i] + e_v`, if within order.
    shift: Vec<Vec<Option<usize>>>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Self {
        assert!(nvars <= MAX_VARS && nvars > 0);
        let mut exps = Vec::new();
        let mut ends = Vec::with_capacity(order + 1);
        for deg in 0..=order {
            push_degree(nvars, deg, &mut [0u8; MAX_VARS], 0, &mut exps);
            ends.push(exps.len());
        }
        let lookup: BTreeMap<[u8; MAX_VARS], usize> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let find = |e: &[u8; MAX_VARS], _: &Vec<[u8; MAX_VARS]>| lookup.get(e).copied();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            let da: usize = a.iter().map(|&v| v as usize).sum();
            for (j, b) in exps.iter().enumerate() {
                let db: usize = b.iter().map(|&v| v as usize).sum();
                if da + db > order {
                    continue;
                }
                let mut c = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    c[v] = a[v] + b[v];
                }
                let k = find(&c, &exps).expect("monomial within order");
                products.push((i as u32, j as u32, k as u32));
            }
        }
        let shift = (0..nvars)
            .map(|v| {
                exps.iter()
                    .map(|e| {
                        let mut c = *e;
                        c[v] += 1;
                        find(&c, &exps)
                    })
                    .collect()
            })
            .collect();
        JetSpace {
            nvars,
            order,
            exps,
            ends,
            products,
            shift,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn zero(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    pub fn constant(&self, c: f64) -> Vec<f64> {
        let mut j = self.zero();
        j[0] = c;
        j
    }

    /// Index of the monomial with exponent vector `e`.
    pub fn index(&self, e: &[u8]) -> Option<usize> {
        let mut full = [0u8; MAX_VARS];
        full[..e.len()].copy_from_slice(e);
        self.exps.iter().position(|x| *x == full)
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i][..self.nvars]
    }

    /// `a * b`, truncated.
    pub fn mul(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, k) in &self.products {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
    }

    /// `Σ_j coeffs[j] v^j` where `v` has zero constant term.
    pub fn compose(&self, coeffs: &[f64], v: &[f64]) -> Vec<f64> {
        debug_assert!(v[0] == 0.0);
        let mut acc = self.zero();
        let mut tmp = self.zero();
        let top = coeffs.len().min(self.order + 1);
        for j in (0..top).rev() {
            self.mul(&acc, v, &mut tmp);
            core::mem::swap(&mut acc, &mut tmp);
            acc[0] += coeffs[j];
        }
        acc
    }

    /// `∂_v a`. The top-degree coefficients become meaningless and are zeroed.
    pub fn derivative(&self, a: &[f64], v: usize) -> Vec<f64> {
        let mut out = self.zero();
        for i in 0..self.len() {
            if let Some(k) = self.shift[v][i] {
                out[i] = a[k] * self.exps[k][v] as f64;
            }
        }
        out
    }

    /// `Σ_v ∂_v² a`.
    pub fn laplacian(&self, a: &[f64]) -> Vec<f64> {
        let mut out = self.zero();
        for v in 0..self.nvars {
            for i in 0..self.len() {
                if let Some(k1) = self.shift[v][i] {
                    if let Some(k2) = self.shift[v][k1] {
                        let m = self.exps[k2][v] as f64;
                        out[i] += a[k2] * m * (m - 1.0);
                    }
                }
            }
        }
        out
    }

    /// Partial derivative `∂^e f(0)` from the coefficient of `h^e`.
    pub fn partial(&self, a: &[f64], e: &[u8]) -> f64 {
        match self.index(e) {
            Some(i) => {
                let fact: f64 = e.iter().map(|&k| factorial(k as usize)).product();
                a[i] * fact
            }
            None => 0.0,
        }
    }

    /// Number of coefficients of degree ≤ `k`.
    pub fn prefix(&self, k: usize) -> usize {
        self.ends[k.min(self.order)]
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn push_degree(nvars: usize, remaining: usize, cur: &mut [u8; MAX_VARS], var: usize, out: &mut Vec<[u8; MAX_VARS]>) {
    if var == nvars - 1 {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        push_degree(nvars, remaining - k, cur, var + 1, out);
    }
    cur[var] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_products() {
        let s = JetSpace::new(3, 4);
        assert_eq!(s.len(), 35);
        assert_eq!(s.prefix(1), 4);
        // (1 + x)(1 + y) = 1 + x + y + xy
        let mut a = s.constant(1.0);
        a[s.index(&[1, 0, 0]).unwrap()] = 1.0;
        let mut b = s.constant(1.0);
        b[s.index(&[0, 1, 0]).unwrap()] = 1.0;
        let mut c = s.zero();
        s.mul(&a, &b, &mut c);
        assert_eq!(c[s.index(&[1, 1, 0]).unwrap()], 1.0);
        assert_eq!(c.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn composition_matches_direct_expansion() {
        // exp(v) with v = x + y^2/2, compared against the known coefficients
        let s = JetSpace::new(2, 4);
        let mut v = s.zero();
        v[s.index(&[1, 0]).unwrap()] = 1.0;
        v[s.index(&[0, 2]).unwrap()] = 0.5;
        let coeffs: Vec<f64> = (0..5).map(|k| 1.0 / factorial(k)).collect();
        let e = s.compose(&coeffs, &v);
        // coefficient of x^2 y^2: from v^3/6 -> 3 * x^2 * y^2/2 / 6 = 1/4
        assert!((e[s.index(&[2, 2]).unwrap()] - 0.25).abs() < 1e-15);
        assert!((e[s.index(&[0, 4]).unwrap()] - 0.125).abs() < 1e-15);
        // ∂_x∂_y² of exp(x + y²/2) at 0 is 1
        assert!((s.partial(&e, &[1, 2]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_quadratic_and_quartic() {
        let s = JetSpace::new(2, 4);
        let mut a = s.zero();
        a[s.index(&[2, 0]).unwrap()] = 1.0; // x²
        a[s.index(&[2, 2]).unwrap()] = 1.0; // x²y²
        let l = s.laplacian(&a);
        assert_eq!(l[0], 2.0);
        assert_eq!(l[s.index(&[0, 2]).unwrap()], 2.0);
        assert_eq!(l[s.index(&[2, 0]).unwrap()], 2.0);
    }
}
