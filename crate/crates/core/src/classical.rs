//! Classical limit of the driven oscillator and its limit-cycle amplitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerances};
use crate::params::SystemParams;

/// Scaled coefficients of the classical equation of motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalParams {
    pub epsilon: f64,
    pub gamma2_vdp: f64,
    pub gamma2_ray: f64,
    pub omega_bar: f64,
    pub delta_bar: f64,
}

impl ClassicalParams {
    /// Scaled coefficients from raw rates; requires net linear gain.
    pub fn from_system(p: &SystemParams) -> Result<Self> {
        let s = p
            .scaled()
            .ok_or_else(|| Error::InvalidParameter("net linear gain gamma1_plus - gamma1_minus is zero".into()))?;
        let eps = p.epsilon();
        let cp = Self {
            epsilon: eps,
            gamma2_vdp: s.alpha_bar + 2.0 * s.beta_bar - s.delta_bar,
            gamma2_ray: s.alpha_bar + s.delta_bar,
            omega_bar: s.omega_bar,
            delta_bar: p.detuning() / eps,
        };
        cp.validate()?;
        Ok(cp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.gamma2_vdp >= 0.0 && self.gamma2_ray >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaled damping coefficients must be >= 0, got vdp {} and ray {}",
                self.gamma2_vdp, self.gamma2_ray
            )));
        }
        Ok(())
    }

    /// Drive angular frequency 1 + Δ.
    pub fn drive_frequency(&self) -> f64 {
        1.0 + self.epsilon * self.delta_bar
    }

    pub fn undriven(mut self) -> Self {
        self.omega_bar = 0.0;
        self
    }
}

/// Position and velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: f64,
    pub v: f64,
}

/// Time derivative (ẋ, v̇) of the classical equation of motion.
pub fn classical_rhs(state: ClassicalState, t: f64, cp: &ClassicalParams) -> (f64, f64) {
    let ClassicalState { x, v } = state;
    let eps = cp.epsilon;
    let drive = eps * cp.omega_bar * (cp.drive_frequency() * t).sin();
    let damping = eps * (1.0 - cp.gamma2_vdp * x * x - cp.gamma2_ray * v * v) * v;
    (v, -x - drive + damping)
}

/// Leading-order limit-cycle amplitude 2 / √(γ̄_vdp + 3γ̄_ray).
pub fn limit_cycle_amplitude(cp: &ClassicalParams) -> Result<f64> {
    let s = cp.gamma2_vdp + 3.0 * cp.gamma2_ray;
    if !(s > 0.0) {
        return Err(Error::NoLimitCycle);
    }
    Ok(2.0 / s.sqrt())
}

/// Settings of the limit-cycle extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionSettings {
    /// Settling time; `None` selects 200/ε.
    pub t_settle: Option<f64>,
    pub n_periods: usize,
    pub samples_per_period: usize,
    pub initial: ClassicalState,
    pub tolerances: Tolerances,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            t_settle: None,
            n_periods: 5,
            samples_per_period: 512,
            initial: ClassicalState { x: 0.1, v: 0.0 },
            tolerances: Tolerances { rtol: 1e-10, atol: 1e-12 },
        }
    }
}

/// Sampled classical trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<ClassicalState>,
}

/// Integrates the equation of motion and samples it at `times` (ascending).
pub fn integrate_classical(
    cp: &ClassicalParams,
    initial: ClassicalState,
    t0: f64,
    times: &[f64],
    tolerances: Tolerances,
) -> Result<ClassicalTrajectory> {
    let mut solver = Dopri5::<f64>::new(2, tolerances);
    let mut y = [initial.x, initial.v];
    let mut t = t0;
    let mut f = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (dx, dv) = classical_rhs(ClassicalState { x: y[0], v: y[1] }, t, cp);
        dy[0] = dx;
        dy[1] = dv;
    };
    let mut out = ClassicalTrajectory { t: Vec::with_capacity(times.len()), states: Vec::with_capacity(times.len()) };
    for &ti in times {
        solver.integrate(&mut f, t, ti, &mut y)?;
        t = ti.max(t);
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Integration { t, reason: "state diverged".into() });
        }
        out.t.push(ti);
        out.states.push(ClassicalState { x: y[0], v: y[1] });
    }
    Ok(out)
}

/// Maximum of |x| over samples, refined by a parabola through the peak sample
/// and its neighbours.
fn refined_max_abs(xs: &[f64]) -> f64 {
    let (i, _) = xs.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("non-empty period");
    if i == 0 || i + 1 == xs.len() {
        return xs[i].abs();
    }
    let (a, b, c) = (xs[i - 1].abs(), xs[i].abs(), xs[i + 1].abs());
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return b;
    }
    b - 0.125 * (c - a).powi(2) / denom
}

/// Long-time limit cycle: amplitude max|x| over the recorded periods and the
/// recorded trajectory.
pub fn extract_limit_cycle(cp: &ClassicalParams, settings: &ExtractionSettings) -> Result<(f64, ClassicalTrajectory)> {
    cp.validate()?;
    if cp.omega_bar != 0.0 {
        return Err(Error::InvalidParameter("limit-cycle extraction requires an undriven oscillator".into()));
    }
    limit_cycle_amplitude(cp)?;
    let t_settle = settings.t_settle.unwrap_or(200.0 / cp.epsilon);
    let n_periods = settings.n_periods.max(2);
    let per = settings.samples_per_period.max(64);
    let period = 2.0 * std::f64::consts::PI;
    let times: Vec<f64> = (0..=n_periods * per).map(|j| t_settle + period * j as f64 / per as f64).collect();
    let traj = integrate_classical(cp, settings.initial, 0.0, &times, settings.tolerances)?;
    let xs: Vec<f64> = traj.states.iter().map(|s| s.x).collect();
    let maxima: Vec<f64> = xs.chunks(per).filter(|c| c.len() == per).map(refined_max_abs).collect();
    for w in maxima.windows(2) {
        let drift = (w[1] - w[0]).abs() / w[0].abs().max(f64::MIN_POSITIVE);
        if drift > 0.01 {
            return Err(Error::Convergence(format!(
                "limit-cycle amplitude drifts by {:.2}% between periods",
                100.0 * drift
            )));
        }
    }
    let amplitude = maxima.iter().copied().fold(0.0, f64::max);
    Ok((amplitude, traj))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(eps: f64, vdp: f64, ray: f64) -> ClassicalParams {
        ClassicalParams { epsilon: eps, gamma2_vdp: vdp, gamma2_ray: ray, omega_bar: 0.0, delta_bar: 0.0 }
    }

    #[test]
    fn amplitude_special_cases() {
        assert!((limit_cycle_amplitude(&cp(0.1, 4.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(limit_cycle_amplitude(&cp(0.1, 0.0, 0.0)), Err(Error::NoLimitCycle)));
    }

    #[test]
    fn rhs_at_turning_point() {
        let c = cp(0.2, 4.0, 4.0);
        let a = limit_cycle_amplitude(&c).unwrap();
        let (dx, dv) = classical_rhs(ClassicalState { x: a, v: 0.0 }, 0.3, &c);
        assert_eq!(dx, 0.0);
        assert_eq!(dv, -a);
    }

    #[test]
    fn harmonic_motion_without_epsilon_terms() {
        let mut c = cp(0.1, 1.0, 1.0);
        c.epsilon = 1e-300;
        let times: Vec<f64> = (1..=10).map(|j| j as f64).collect();
        let tr = integrate_classical(
            &c,
            ClassicalState { x: 1.0, v: 0.0 },
            0.0,
            &times,
            Tolerances { rtol: 1e-12, atol: 1e-14 },
        )
        .unwrap();
        for (t, s) in tr.t.iter().zip(&tr.states) {
            assert!((s.x - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn parabolic_refinement_recovers_cosine_peak() {
        let xs: Vec<f64> =
            (0..64).map(|j| 2.0 * (2.0 * std::f64::consts::PI * (j as f64 + 0.3) / 64.0).cos()).collect();
        assert!((refined_max_abs(&xs) - 2.0).abs() < 1e-4);
    }
}
