//! Dormand-Prince 5(4) with step-size control and fifth-order dense output.
//! Integrates in either time direction.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Adaptive integrator settings. The local error per step is kept below
/// `atol + rtol * |y|` componentwise in the RMS sense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Steps shorter than this fraction of |t| (plus an absolute floor) count as underflow.
    pub min_step: f64,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 {
            rtol: tol,
            atol: tol,
            max_steps: 2_000_000,
            min_step: 1e-14,
        }
    }

    /// Integrate from `t0` to `t1`, returning the final state.
    pub fn solve<F>(&self, f: F, t0: f64, y0: &[f64], t1: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = self.sample(f, t0, y0, &[t1])?;
        Ok(out.pop().unwrap_or_else(|| y0.to_vec()))
    }

    /// States at each of `times`, which must be monotone in the direction of integration
    /// and on the same side of `t0`.
    pub fn sample<F>(&self, mut f: F, t0: f64, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut out = Vec::with_capacity(times.len());
        let Some(&t_end) = times.last() else {
            return Ok(out);
        };
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut next = 0;
        while next < times.len() && times[next] == t0 {
            out.push(y0.to_vec());
            next += 1;
        }
        if next == times.len() {
            return Ok(out);
        }

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k = [(); 7].map(|_| vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        f(t, &y, &mut k[0]);

        let mut h = dir * self.initial_step(&mut f, t, &y, &k[0], dir);
        let mut steps = 0;
        while next < times.len() {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration { time: t });
            }
            if (t + h - t_end) * dir > 0.0 {
                h = t_end - t;
            }
            let floor = self.min_step * (1.0 + t.abs());
            if h.abs() < floor {
                return Err(Error::Integration { time: t });
            }
            self.stages(&mut f, t, &y, h, &mut k, &mut tmp, &mut ynew);
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if err <= 1.0 {
                let t_new = if (t + h - t_end).abs() <= 1e-15 * (1.0 + t_end.abs()) { t_end } else { t + h };
                while next < times.len() && (times[next] - t_new) * dir <= 0.0 {
                    let theta = if h == 0.0 { 1.0 } else { (times[next] - t) / h };
                    out.push(self.dense(&y, &ynew, &k, h, theta));
                    next += 1;
                }
                t = t_new;
                core::mem::swap(&mut y, &mut ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                h *= factor;
            } else {
                h *= factor.min(1.0);
            }
        }
        Ok(out)
    }

    fn initial_step<F>(&self, f: &mut F, t: f64, y: &[f64], f0: &[f64], dir: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len().max(1) as f64;
        let sc = |v: f64| self.atol + self.rtol * v.abs();
        let d0 = (y.iter().map(|v| (v / sc(*v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y.iter().zip(f0).map(|(v, d)| (d / sc(*v)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = y.iter().zip(f0).map(|(v, d)| v + dir * h0 * d).collect();
        let mut f1 = vec![0.0; y.len()];
        f(t + dir * h0, &y1, &mut f1);
        let d2 = (y.iter().zip(f0.iter().zip(&f1)).map(|(v, (a, b))| ((b - a) / sc(*v)).powi(2)).sum::<f64>() / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1)
    }

    #[allow(clippy::too_many_arguments)]
    fn stages<F>(&self, f: &mut F, t: f64, y: &[f64], h: f64, k: &mut [Vec<f64>; 7], tmp: &mut [f64], ynew: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(t + C2 * h, tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * h, tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * h, tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * h, tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        f(t + h, tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        f(t + h, ynew, &mut k[6]);
    }

    fn dense(&self, y: &[f64], ynew: &[f64], k: &[Vec<f64>; 7], h: f64, theta: f64) -> Vec<f64> {
        let th1 = 1.0 - theta;
        (0..y.len())
            .map(|i| {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                let r4 = ydiff - h * k[6][i] - bspl;
                let r5 = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                y[i] + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn harmonic_oscillator_both_directions() {
        let s = Dopri5::new(1e-12);
        for &t1 in &[10.0, -10.0] {
            let y = s.solve(oscillator, 0.0, &[1.0, 0.0], t1).unwrap();
            assert!((y[0] - libm::cos(t1)).abs() < 1e-9);
            assert!((y[1] + libm::sin(t1)).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_output_is_accurate() {
        let s = Dopri5::new(1e-10);
        let times: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let ys = s.sample(oscillator, 0.0, &[1.0, 0.0], &times).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - libm::cos(*t)).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn step_underflow_is_reported() {
        // y' = y^2 blows up at t = 1
        let s = Dopri5::new(1e-10);
        let r = s.solve(|_t, y: &[f64], d: &mut [f64]| d[0] = y[0] * y[0], 0.0, &[1.0], 2.0);
        match r {
            Err(Error::Integration { time }) => assert!((time - 1.0).abs() < 1e-3),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
