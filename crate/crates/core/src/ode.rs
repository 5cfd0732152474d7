//! Adaptive Dormand–Prince 5(4) integrator over flat real or complex slices.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Scalar types the integrator can advance.
pub trait OdeScalar: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl OdeScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Relative and absolute local error targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10 }
    }
}

impl Tolerances {
    pub fn halved(self) -> Self {
        Self { rtol: 0.5 * self.rtol, atol: 0.5 * self.atol }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

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

/// Integrator state carried across successive calls so that step size and
/// the first-same-as-last stage survive output-time boundaries.
pub struct Dopri5<T: OdeScalar> {
    tol: Tolerances,
    max_steps: usize,
    k: [Vec<T>; 7],
    y_stage: Vec<T>,
    y_next: Vec<T>,
    h: Option<f64>,
    fsal_at: Option<f64>,
    stats: IntegrationStats,
}

impl<T: OdeScalar> Dopri5<T> {
    pub fn new(len: usize, tol: Tolerances) -> Self {
        let z = || vec![T::zero(); len];
        Self {
            tol,
            max_steps: 50_000_000,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_next: z(),
            h: None,
            fsal_at: None,
            stats: IntegrationStats::default(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn stats(&self) -> IntegrationStats {
        self.stats
    }

    /// Forget the cached derivative; call after modifying the state externally.
    pub fn invalidate(&mut self) {
        self.fsal_at = None;
    }

    fn error_norm(&self, y: &[T], err: &[T]) -> f64 {
        let mut acc = 0.0;
        for ((yi, yn), e) in y.iter().zip(&self.y_next).zip(err) {
            let sc = self.tol.atol + self.tol.rtol * yi.modulus().max(yn.modulus());
            let r = e.modulus() / sc;
            acc += r * r;
        }
        (acc / y.len().max(1) as f64).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[T], span: f64) -> f64
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        let sc = |v: T| self.tol.atol + self.tol.rtol * v.modulus();
        let rms = |a: &[T], b: &[T]| -> f64 {
            let s: f64 = a.iter().zip(b).map(|(x, s)| (x.modulus() / sc(*s)).powi(2)).sum();
            (s / a.len().max(1) as f64).sqrt()
        };
        let d0 = rms(y, y);
        let d1 = rms(&self.k[0], y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for ((stage, &yi), &k0) in self.y_stage.iter_mut().zip(y).zip(&self.k[0]) {
            *stage = yi + k0 * h0;
        }
        f(t + h0, &self.y_stage, &mut self.k[1]);
        self.stats.evaluations += 1;
        let diff: Vec<T> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| *a - *b).collect();
        let d2 = rms(&diff, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances `y` from `t0` to exactly `t1`.
    pub fn integrate<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [T]) -> Result<()>
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        if self.fsal_at != Some(t0) {
            f(t0, y, &mut self.k[0]);
            self.stats.evaluations += 1;
            self.fsal_at = Some(t0);
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(f, t0, y, span),
        };
        let mut t = t0;
        let mut last_rejected = false;
        let n = y.len();
        while t < t1 {
            if self.stats.accepted + self.stats.rejected >= self.max_steps {
                return Err(Error::Integration { t, reason: "step budget exhausted".into() });
            }
            let remaining = t1 - t;
            let final_step = h >= remaining * (1.0 - 1e-12);
            let step = if final_step { remaining } else { h };
            if !final_step && step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration { t, reason: format!("step size underflow ({step:.3e})") });
            }

            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let ys = &mut self.y_stage;
            for i in 0..n {
                ys[i] = y[i] + k1[i] * (step * A21);
            }
            f(t + C2 * step, ys, k2);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * step;
            }
            f(t + C3 * step, ys, k3);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * step;
            }
            f(t + C4 * step, ys, k4);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * step;
            }
            f(t + C5 * step, ys, k5);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * step;
            }
            f(t + step, ys, k6);
            let yn = &mut self.y_next;
            for i in 0..n {
                yn[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * step;
            }
            let t_new = if final_step { t1 } else { t + step };
            f(t_new, yn, k7);
            self.stats.evaluations += 6;
            for i in 0..n {
                ys[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
            }
            let err_vec = std::mem::take(&mut self.y_stage);
            let err = self.error_norm(y, &err_vec);
            self.y_stage = err_vec;

            if !err.is_finite() {
                self.stats.rejected += 1;
                h = 0.1 * step;
                last_rejected = true;
                continue;
            }
            let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if err <= 1.0 {
                y.copy_from_slice(&self.y_next);
                self.k.swap(0, 6);
                t = t_new;
                self.stats.accepted += 1;
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                // keep the natural step when only the final clamp shortened it
                h = if final_step { h.max(step * fac) } else { step * fac };
            } else {
                self.stats.rejected += 1;
                last_rejected = true;
                h = step * fac.min(1.0);
            }
        }
        self.h = Some(h);
        self.fsal_at = Some(t1);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_real() {
        let mut y = vec![1.0f64];
        let mut solver = Dopri5::new(1, Tolerances { rtol: 1e-10, atol: 1e-12 });
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        solver.integrate(&mut f, 0.0, 2.0, &mut y).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn complex_rotation_over_many_outputs() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut solver = Dopri5::new(1, Tolerances { rtol: 1e-10, atol: 1e-12 });
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * C64::new(0.0, -1.0);
        for j in 0..100 {
            let t0 = j as f64 * 0.1;
            solver.integrate(&mut f, t0, t0 + 0.1, &mut y).unwrap();
        }
        let exact = C64::from_polar(1.0, -10.0);
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn time_dependent_forcing() {
        // y' = cos t, y(0) = 0 -> sin t
        let mut y = vec![0.0f64];
        let mut solver = Dopri5::new(1, Tolerances { rtol: 1e-11, atol: 1e-13 });
        let mut f = |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos();
        solver.integrate(&mut f, 0.0, 7.0, &mut y).unwrap();
        assert!((y[0] - 7.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence_with_fixed_budget() {
        // tighter tolerance yields smaller global error on a smooth problem
        let run = |rtol: f64| {
            let mut y = vec![1.0f64, 0.0];
            let mut s = Dopri5::new(2, Tolerances { rtol, atol: rtol * 1e-2 });
            let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            };
            s.integrate(&mut f, 0.0, 20.0, &mut y).unwrap();
            (y[0] - 20.0f64.cos()).abs()
        };
        assert!(run(1e-10) < run(1e-6));
        assert!(run(1e-10) < 1e-8);
    }
}
