//! Central finite differences on functions of a point in R^n.

use alloc::vec;
use alloc::vec::Vec;

/// Second-order central first derivative along coordinate `i`.
pub fn partial<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], i: usize, h: f64) -> f64 {
    let mut q = p.to_vec();
    q[i] = p[i] + h;
    let fp = f(&q);
    q[i] = p[i] - h;
    let fm = f(&q);
    (fp - fm) / (2.0 * h)
}

/// Fourth-order central first derivative along coordinate `i`.
pub fn partial4<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], i: usize, h: f64) -> f64 {
    let mut q = p.to_vec();
    let mut at = |s: f64, q: &mut Vec<f64>| {
        q[i] = p[i] + s * h;
        f(q)
    };
    let (f2, f1, m1, m2) = (at(2.0, &mut q), at(1.0, &mut q), at(-1.0, &mut q), at(-2.0, &mut q));
    (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h)
}

pub fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], h: f64) -> Vec<f64> {
    (0..p.len()).map(|i| partial(f, p, i, h)).collect()
}

pub fn gradient4<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], h: f64) -> Vec<f64> {
    (0..p.len()).map(|i| partial4(f, p, i, h)).collect()
}

/// Fourth-order Hessian: five-point stencil on the diagonal, the
/// sixteen-point product stencil off it.
pub fn hessian<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut out = vec![vec![0.0; n]; n];
    let f0 = f(p);
    let mut q = p.to_vec();
    for i in 0..n {
        let mut at = |s: f64| {
            q[i] = p[i] + s * h;
            let v = f(&q);
            q[i] = p[i];
            v
        };
        let (f2, f1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        out[i][i] = (-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * h * h);
    }
    const W: [(f64, f64); 4] = [(1.0, 8.0), (-1.0, -8.0), (2.0, -1.0), (-2.0, 1.0)];
    for i in 0..n {
        for j in i + 1..n {
            let mut s = 0.0;
            for &(si, wi) in &W {
                for &(sj, wj) in &W {
                    q[i] = p[i] + si * h;
                    q[j] = p[j] + sj * h;
                    s += wi * wj * f(&q);
                }
            }
            q[i] = p[i];
            q[j] = p[j];
            let v = s / (144.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Laplacian from the diagonal five-point stencils.
pub fn laplacian<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], h: f64) -> f64 {
    let f0 = f(p);
    let mut q = p.to_vec();
    let mut s = 0.0;
    for i in 0..p.len() {
        let mut at = |sh: f64| {
            q[i] = p[i] + sh * h;
            let v = f(&q);
            q[i] = p[i];
            v
        };
        let (f2, f1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        s += (-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * h * h);
    }
    s
}

/// Second-order three-point Laplacian.
pub fn laplacian3<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], h: f64) -> f64 {
    let f0 = f(p);
    let mut q = p.to_vec();
    let mut s = 0.0;
    for i in 0..p.len() {
        q[i] = p[i] + h;
        let fp = f(&q);
        q[i] = p[i] - h;
        let fm = f(&q);
        q[i] = p[i];
        s += (fp - 2.0 * f0 + fm) / (h * h);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_low_degree_polynomials() {
        let mut f = |p: &[f64]| p[0] * p[0] * p[1] + 3.0 * p[1].powi(3) - p[0];
        let p = [0.7, -1.3];
        let g = gradient4(&mut f, &p, 0.1);
        assert!((g[0] - (2.0 * 0.7 * -1.3 - 1.0)).abs() < 1e-12);
        assert!((g[1] - (0.49 + 9.0 * 1.69)).abs() < 1e-12);
        let hs = hessian(&mut f, &p, 0.1);
        assert!((hs[0][0] - 2.0 * -1.3).abs() < 1e-10);
        assert!((hs[0][1] - 1.4).abs() < 1e-10);
        assert!((hs[1][1] - 18.0 * -1.3).abs() < 1e-10);
        let lap = laplacian(&mut f, &p, 0.1);
        assert!((lap - (2.0 * -1.3 + 18.0 * -1.3)).abs() < 1e-10);
    }
}
