//! Single-time observables and period averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{ScalarRecord, Trajectory};
use crate::fock::DensityMatrix;
use crate::wigner::{wigner_max_radius_polar, PolarGrid};
use crate::C64;

/// Trace contractions of the ladder and quadrature operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub a: C64,
    pub number: f64,
    pub x: f64,
    pub p: f64,
}

/// ⟨a⟩ = Σ √k ρ_{k,k−1} on a column-major slice.
pub(crate) fn mean_annihilation(dim: usize, rho: &[C64]) -> C64 {
    (1..dim).map(|k| rho[k + (k - 1) * dim] * (k as f64).sqrt()).sum()
}

pub(crate) fn mean_number(dim: usize, rho: &[C64]) -> f64 {
    (0..dim).map(|k| k as f64 * rho[k + k * dim].re).sum()
}

/// Σ ρ_{n,n−1}, the coherence sum whose modulus is S_q.
pub(crate) fn coherence_sum_slice(dim: usize, rho: &[C64]) -> C64 {
    (1..dim).map(|k| rho[k + (k - 1) * dim]).sum()
}

pub(crate) fn trace_slice(dim: usize, rho: &[C64]) -> C64 {
    (0..dim).map(|k| rho[k + k * dim]).sum()
}

pub fn expectations(rho: &DensityMatrix) -> Expectations {
    let a = mean_annihilation(rho.dim(), rho.as_slice());
    let s2 = std::f64::consts::SQRT_2;
    Expectations { a, number: mean_number(rho.dim(), rho.as_slice()), x: s2 * a.re, p: s2 * a.im }
}

pub fn coherence_sum(rho: &DensityMatrix) -> C64 {
    coherence_sum_slice(rho.dim(), rho.as_slice())
}

/// Phase localization |Σ ρ_{n,n−1}|.
pub fn s_q(rho: &DensityMatrix) -> f64 {
    let value = coherence_sum(rho).norm();
    debug_assert!(value <= 1.0 + 1e-9, "S_q = {value} exceeds 1");
    value
}

/// Cosine of the phase of ⟨a⟩.
pub fn s_q_alter1(rho: &DensityMatrix) -> Result<f64> {
    let a = mean_annihilation(rho.dim(), rho.as_slice());
    if a.norm() <= 1e-12 {
        return Err(Error::UndefinedMeasure("phase of <a> is undefined when <a> = 0".into()));
    }
    Ok(a.re / a.norm())
}

/// Phase distribution sampled on a uniform grid over [0, 2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub phi: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    /// Periodic rectangle rule, exact for trigonometric polynomials of
    /// degree below the sample count.
    pub fn integral(&self) -> f64 {
        let dphi = 2.0 * std::f64::consts::PI / self.phi.len() as f64;
        self.values.iter().sum::<f64>() * dphi
    }

    pub fn s_q_alter2(&self) -> f64 {
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        2.0 * std::f64::consts::PI * max - 1.0
    }
}

/// P(φ) = (1/2π) Σ_{k,l} e^{−i(k−l)φ} ρ_kl.
pub fn phase_probability(rho: &DensityMatrix, n_phi: usize) -> Result<PhaseDistribution> {
    if n_phi < 64 {
        return Err(Error::Sampling(format!("phase grid needs at least 64 points, got {n_phi}")));
    }
    let n = rho.dim();
    // offset sums s_m = Σ_l ρ_{l+m,l}
    let offsets: Vec<C64> = (0..n).map(|m| (0..n - m).map(|l| rho.get(l + m, l)).sum()).collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    let phi: Vec<f64> = (0..n_phi).map(|i| two_pi * i as f64 / n_phi as f64).collect();
    let values = phi
        .iter()
        .map(|&p| {
            let mut acc = offsets[0].re;
            for (m, s) in offsets.iter().enumerate().skip(1) {
                acc += 2.0 * (s * C64::from_polar(1.0, -(m as f64) * p)).re;
            }
            acc / two_pi
        })
        .collect();
    Ok(PhaseDistribution { phi, values })
}

/// Scalar observables carried in trajectory records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SQ,
    Number,
    ReA,
    ImA,
    Trace,
}

impl Observable {
    pub fn of(self, r: &ScalarRecord) -> f64 {
        match self {
            Observable::SQ => r.s_q,
            Observable::Number => r.number,
            Observable::ReA => r.a.re,
            Observable::ImA => r.a.im,
            Observable::Trace => r.trace,
        }
    }
}

/// Trapezoid average of (t, value) samples over [start, start + period].
///
/// Window edges falling between samples are linearly interpolated.
pub fn window_average(samples: &[(f64, f64)], start: f64, period: f64) -> Result<f64> {
    let end = start + period;
    let slack = 1e-9 * period;
    let first = samples.first().map(|s| s.0).unwrap_or(f64::INFINITY);
    let last = samples.last().map(|s| s.0).unwrap_or(f64::NEG_INFINITY);
    if first > start + slack || last < end - slack {
        return Err(Error::Sampling(format!("samples cover [{first}, {last}], window is [{start}, {end}]")));
    }
    let inside = samples.iter().filter(|s| s.0 >= start - slack && s.0 <= end + slack).count();
    if inside < 32 {
        return Err(Error::Sampling(format!("only {inside} samples in the averaging window, need 32")));
    }
    let value_at = |t: f64| -> f64 {
        let idx = samples.partition_point(|s| s.0 < t);
        if idx < samples.len() && (samples[idx].0 - t).abs() <= slack {
            return samples[idx].1;
        }
        if idx == 0 {
            return samples[0].1;
        }
        if idx >= samples.len() {
            return samples[samples.len() - 1].1;
        }
        let (t0, v0) = samples[idx - 1];
        let (t1, v1) = samples[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    };
    let mut pts = vec![(start, value_at(start))];
    pts.extend(samples.iter().filter(|s| s.0 > start + slack && s.0 < end - slack).copied());
    pts.push((end, value_at(end)));
    let integral: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Ok(integral / period)
}

/// Trapezoid average of a recorded observable over one period starting at `t_ref`.
pub fn period_average(traj: &Trajectory, t_ref: f64, period: f64, observable: Observable) -> Result<f64> {
    let samples: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, observable.of(r))).collect();
    window_average(&samples, t_ref, period)
}

/// Mean relative deviation of the Wigner-maximum radius from its undriven value
/// over snapshots covering one period.
pub fn deformation(
    snapshots: &[(f64, DensityMatrix)],
    undriven_radius: f64,
    t_ref: f64,
    period: f64,
    grid: &PolarGrid,
) -> Result<f64> {
    let radii: Vec<f64> = snapshots
        .iter()
        .filter(|(t, _)| *t >= t_ref - 1e-9 * period && *t < t_ref + period * (1.0 - 1e-9))
        .map(|(_, rho)| wigner_max_radius_polar(rho, grid).radius)
        .collect();
    deformation_from_radii(&radii, undriven_radius)
}

/// Mean of |R − R_u| / R_u over radii sampled uniformly across one period.
pub fn deformation_from_radii(radii: &[f64], undriven_radius: f64) -> Result<f64> {
    if undriven_radius <= 0.0 {
        return Err(Error::DegenerateLimitCycle);
    }
    if radii.is_empty() {
        return Err(Error::Sampling("no snapshots inside the deformation window".into()));
    }
    Ok(radii.iter().map(|r| (r - undriven_radius).abs() / undriven_radius).sum::<f64>() / radii.len() as f64)
}

/// Frequency of the largest non-DC Fourier component of uniformly sampled data,
/// together with the bin width.
pub fn dominant_frequency(values: &[f64], dt: f64) -> (f64, f64) {
    use rustfft::FftPlanner;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<C64> = values.iter().map(|v| C64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bin = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let best = (1..n / 2 + 1).max_by(|&i, &j| buf[i].norm().total_cmp(&buf[j].norm())).unwrap_or(0);
    (best as f64 * bin, bin)
}
