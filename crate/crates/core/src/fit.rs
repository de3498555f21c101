//! Least-squares line fits, used for power-law exponents and convergence orders.

use num_traits::Float;

/// Fitted line `v = intercept + slope * u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub points: usize,
}

impl LineFit {
    pub fn eval(&self, u: f64) -> f64 {
        self.intercept + self.slope * u
    }
}

/// Ordinary least squares. Returns `None` for fewer than two distinct abscissae.
pub fn line(u: &[f64], v: &[f64]) -> Option<LineFit> {
    let n = u.len().min(v.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mu = u[..n].iter().sum::<f64>() / nf;
    let mv = v[..n].iter().sum::<f64>() / nf;
    let mut suu = 0.0;
    let mut suv = 0.0;
    for i in 0..n {
        suu += (u[i] - mu) * (u[i] - mu);
        suv += (u[i] - mu) * (v[i] - mv);
    }
    if suu <= 0.0 {
        return None;
    }
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let mut ss = 0.0;
    for i in 0..n {
        let r = v[i] - intercept - slope * u[i];
        ss += r * r;
    }
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
        points: n,
    })
}

/// Fit `|value| ≈ C s^p` by least squares in log-log coordinates.
/// Non-positive or non-finite samples are skipped.
pub fn power_law(s: &[f64], value: &[f64]) -> Option<LineFit> {
    let mut lu = alloc::vec::Vec::with_capacity(s.len());
    let mut lv = alloc::vec::Vec::with_capacity(s.len());
    for (&a, &b) in s.iter().zip(value) {
        let b = b.abs();
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            lu.push(a.ln());
            lv.push(b.ln());
        }
    }
    line(&lu, &lv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let s = [0.1, 0.2, 0.4, 0.8];
        let v: alloc::vec::Vec<f64> = s.iter().map(|s| 3.0 * s.powf(-1.5)).collect();
        let fit = power_law(&s, &v).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept.exp() - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(line(&[1.0], &[2.0]).is_none());
        assert!(line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
