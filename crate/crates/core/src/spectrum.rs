//! Two-time correlation functions and power spectra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{detect_with, Accuracy, Evolver, Stationarity, Trajectory};
use crate::fock::DensityMatrix;
use crate::liouvillian::{DriveModel, Frame};
use crate::observables::mean_annihilation;
use crate::ode::Dopri5;
use crate::params::SystemParams;
use crate::stencil::MasterEquation;
use crate::C64;

/// Lag sampling and reference time of a correlation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationSettings {
    pub tau: f64,
    pub t_max: f64,
    pub dt: f64,
    pub accuracy: Accuracy,
    pub stationarity: Stationarity,
}

impl Default for CorrelationSettings {
    fn default() -> Self {
        Self {
            tau: 200.0,
            t_max: 1000.0 * std::f64::consts::PI,
            dt: 0.5,
            accuracy: Accuracy::default(),
            stationarity: Stationarity::default(),
        }
    }
}

/// C(t, τ) = ⟨a†(τ) a(τ + t)⟩ sampled on uniform lags t ≥ 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub tau: f64,
    pub t_axis: Vec<f64>,
    pub values: Vec<C64>,
    /// Mean over the final 10% of lags.
    pub asymptote: C64,
    /// False when the state at τ did not pass quasi-stationarity detection.
    pub stationary_at_tau: bool,
    /// True when the generator is time-independent in the chosen frame, so
    /// that C(−t) = C(t)* holds exactly.
    pub conjugate_extension_exact: bool,
}

/// Evolves ρ₀ to τ, forms ρ(τ)a† and propagates it through the lags.
pub fn correlation(
    params: &SystemParams,
    drive: DriveModel,
    frame: Frame,
    rho0: &DensityMatrix,
    settings: &CorrelationSettings,
) -> Result<CorrelationRecord> {
    let CorrelationSettings { tau, t_max, dt, accuracy, stationarity } = *settings;
    if !(dt > 0.0 && t_max > dt && tau >= 0.0) {
        return Err(Error::InvalidParameter("correlation needs dt > 0, t_max > dt and tau >= 0".into()));
    }
    let dim = rho0.dim();
    let period = 2.0 * std::f64::consts::PI / params.omega_d;
    let record_dt = period / 64.0;

    let mut ev = Evolver::new(rho0, *params, drive, frame, accuracy)?;
    let mut records = vec![ev.record()];
    let steps = (tau / record_dt).floor() as usize;
    for j in 1..=steps {
        ev.advance_to(j as f64 * record_dt)?;
        records.push(ev.record());
    }
    if ev.time() < tau {
        ev.advance_to(tau)?;
    }
    let history = Trajectory {
        frame,
        records,
        snapshots: Vec::new(),
        final_state: ev.state(),
        max_trace_drift: 0.0,
        max_leakage: 0.0,
        stats: ev.stats(),
    };
    let stationary_at_tau = detect_with(&history, period, stationarity).is_ok();

    // B = ρ a†, so B_{k,l} = √(l+1) ρ_{k,l+1}
    let rho = ev.state_slice();
    let mut b = vec![C64::new(0.0, 0.0); dim * dim];
    for l in 0..dim - 1 {
        let f = ((l + 1) as f64).sqrt();
        for k in 0..dim {
            b[k + l * dim] = rho[k + (l + 1) * dim] * f;
        }
    }
    let eq = MasterEquation::new(*params, drive, frame, dim)?;
    let mut solver = Dopri5::new(dim * dim, accuracy.tolerances);
    let mut f = |t: f64, y: &[C64], dy: &mut [C64]| eq.apply(t, y, dy);
    let n_lags = (t_max / dt).round() as usize + 1;
    let mut t_axis = Vec::with_capacity(n_lags);
    let mut values = Vec::with_capacity(n_lags);
    t_axis.push(0.0);
    values.push(mean_annihilation(dim, &b));
    for j in 1..n_lags {
        let (t0, t1) = (tau + (j - 1) as f64 * dt, tau + j as f64 * dt);
        solver.integrate(&mut f, t0, t1, &mut b)?;
        t_axis.push(j as f64 * dt);
        values.push(mean_annihilation(dim, &b));
    }
    let tail = (n_lags / 10).max(1);
    let asymptote = values[n_lags - tail..].iter().sum::<C64>() / tail as f64;
    Ok(CorrelationRecord {
        tau,
        t_axis,
        values,
        asymptote,
        stationary_at_tau,
        conjugate_extension_exact: eq.is_autonomous(),
    })
}

/// Scaling applied to the reported spectrum values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Raw,
    /// Values divided by the maximum of the broad peak.
    BroadPeakMax,
}

/// Frequency grid of the transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub resolution: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self { omega_min: -3.0, omega_max: 3.0, resolution: 1.0 / 500.0 }
    }
}

impl FrequencyGrid {
    pub fn axis(&self) -> Vec<f64> {
        let n = ((self.omega_max - self.omega_min) / self.resolution).round() as usize + 1;
        (0..n).map(|i| self.omega_min + i as f64 * self.resolution).collect()
    }
}

/// Power spectrum with the ω = 0 spike separated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub tau: f64,
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest |Im S| relative to the largest |Re S| before discarding.
    pub imaginary_residue: f64,
    /// Weight 2π|c∞| of the δ(ω) term from the long-lag offset c∞.
    pub spike_weight: f64,
    pub omega_obs: Option<f64>,
    pub normalization: Normalization,
    pub conjugate_extension_exact: bool,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        if self.omega.len() < 2 {
            return 0.0;
        }
        self.omega[1] - self.omega[0]
    }
}

fn check_uniform(t_axis: &[f64]) -> Result<f64> {
    if t_axis.len() < 2 || t_axis[0] != 0.0 {
        return Err(Error::Sampling("lag axis must start at 0 with at least two samples".into()));
    }
    let dt = t_axis[1] - t_axis[0];
    for (j, t) in t_axis.iter().enumerate() {
        if (t - j as f64 * dt).abs() > 1e-9 * dt.max(1.0) * (j as f64).max(1.0) {
            return Err(Error::Sampling(format!("non-uniform lag grid at index {j}")));
        }
    }
    Ok(dt)
}

/// Trapezoid transform ∫ (C − c∞) e^{−iωt} dt over ±t_max using C(−t) = C(t)*.
pub fn power_spectrum(corr: &CorrelationRecord, grid: &FrequencyGrid) -> Result<Spectrum> {
    let dt = check_uniform(&corr.t_axis)?;
    let n = corr.values.len();
    let fluct: Vec<C64> = corr
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
            (v - corr.asymptote) * (w * dt)
        })
        .collect();
    let omega = grid.axis();
    let mut real = Vec::with_capacity(omega.len());
    let mut imag_max: f64 = 0.0;
    for &w in &omega {
        let step = C64::from_polar(1.0, -w * dt);
        let mut rot = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (j, g) in fluct.iter().enumerate() {
            // both half-weighted one-sided endpoints meet at t = 0
            acc += g * rot + g.conj() * rot.conj();
            rot *= step;
            if j % 256 == 255 {
                rot /= rot.norm();
            }
        }
        real.push(acc.re);
        imag_max = imag_max.max(acc.im.abs());
    }
    let real_max = real.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let imaginary_residue = if real_max > 0.0 { imag_max / real_max } else { 0.0 };
    Ok(Spectrum {
        tau: corr.tau,
        omega,
        values: real,
        imaginary_residue,
        spike_weight: 2.0 * std::f64::consts::PI * corr.asymptote.norm(),
        omega_obs: None,
        normalization: Normalization::Raw,
        conjugate_extension_exact: corr.conjugate_extension_exact,
    })
}

/// Centered moving average; the window shrinks at the edges.
fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Frequency of the smoothed broad-peak maximum; ties go to smaller |ω|.
pub fn broad_peak_location(spec: &Spectrum) -> Result<f64> {
    if spec.values.is_empty() {
        return Err(Error::Sampling("empty spectrum".into()));
    }
    let smoothed = smooth(&spec.values, 5);
    let mut best = 0;
    for i in 1..smoothed.len() {
        let (v, b) = (smoothed[i], smoothed[best]);
        if v > b || (v == b && spec.omega[i].abs() < spec.omega[best].abs()) {
            best = i;
        }
    }
    let mut sorted = smoothed.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let ratio = smoothed[best] / median;
    if !(median > 0.0 && ratio >= 1.5) {
        return Err(Error::NoPeak { ratio: if median > 0.0 { ratio } else { 0.0 } });
    }
    Ok(spec.omega[best])
}

/// Fills `omega_obs` and applies the requested normalization.
pub fn finalize(mut spec: Spectrum, normalization: Normalization) -> Result<Spectrum> {
    let location = broad_peak_location(&spec)?;
    spec.omega_obs = Some(location);
    if normalization == Normalization::BroadPeakMax {
        let peak = spec.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spec.values.iter_mut().for_each(|v| *v /= peak);
        spec.spike_weight /= peak;
    }
    spec.normalization = normalization;
    Ok(spec)
}

/// Relative mismatch of Parseval's identity for the weighted, symmetrically
/// extended lag sequence, with the transform taken over the full band by FFT.
pub fn parseval_residual(corr: &CorrelationRecord) -> Result<f64> {
    use rustfft::FftPlanner;
    let dt = check_uniform(&corr.t_axis)?;
    let n = corr.values.len();
    let weighted = |j: usize| {
        let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        (corr.values[j] - corr.asymptote) * (w * dt)
    };
    // lags 0, dt, ..., then −(n−1)dt, ..., −dt in wrap-around order
    let mut buf: Vec<C64> = (0..n).map(weighted).collect();
    buf[0] = C64::new(2.0 * buf[0].re, 0.0);
    buf.extend((1..n).rev().map(|j| weighted(j).conj()));
    let lag_energy: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
    let len = buf.len();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let freq_energy: f64 = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / len as f64;
    if lag_energy == 0.0 {
        return Ok(0.0);
    }
    Ok((freq_energy - lag_energy).abs() / lag_energy)
}
