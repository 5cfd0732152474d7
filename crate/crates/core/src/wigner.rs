//! Wigner quasi-probability from Fock-basis matrix elements.
//!
//! For m = n + k ≥ n the kernel of |m⟩⟨n| is
//! ((−1)^n/π) √(n!/m!) (√2 r)^k e^{−ikφ} e^{−r²} L_n^{(k)}(2r²),
//! and the m < n kernels are complex conjugates. W at polar point (r, φ)
//! is therefore Σ_k Re[g_k(r) e^{−ikφ}] with radial sums g_k.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::{log_factorials, DensityMatrix};
use crate::C64;

/// Radial sums g_k(r) = c_k Σ_n ρ_{n+k,n} R_{n,k}(r), with c_0 = 1, c_k = 2.
struct RadialKernel {
    dim: usize,
    half_log_ratio: Vec<f64>,
}

impl RadialKernel {
    fn new(dim: usize) -> Self {
        let lf = log_factorials(2 * dim);
        let mut half_log_ratio = vec![0.0; dim * dim];
        for k in 0..dim {
            for n in 0..dim - k {
                half_log_ratio[k * dim + n] = 0.5 * (lf[n] - lf[n + k]);
            }
        }
        Self { dim, half_log_ratio }
    }

    fn sums(&self, rho: &DensityMatrix, r: f64, out: &mut [C64]) {
        let dim = self.dim;
        let z = 2.0 * r * r;
        let inv_pi = std::f64::consts::FRAC_1_PI;
        for (k, slot) in out.iter_mut().enumerate().take(dim) {
            *slot = C64::new(0.0, 0.0);
            if r == 0.0 && k > 0 {
                continue;
            }
            let kf = k as f64;
            let base = if r == 0.0 { 0.0 } else { kf * (std::f64::consts::SQRT_2 * r).ln() } - r * r;
            let mut l_prev = 0.0;
            let mut l_cur = 1.0;
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..dim - k {
                if n == 1 {
                    l_prev = 1.0;
                    l_cur = 1.0 + kf - z;
                } else if n > 1 {
                    let j = (n - 1) as f64;
                    let next = ((2.0 * j + 1.0 + kf - z) * l_cur - (j + kf) * l_prev) / (j + 1.0);
                    l_prev = l_cur;
                    l_cur = next;
                }
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let weight = sign * (base + self.half_log_ratio[k * dim + n]).exp() * l_cur;
                acc += rho.get(n + k, n) * weight;
            }
            *slot = acc * (inv_pi * if k == 0 { 1.0 } else { 2.0 });
        }
    }
}

fn angular_sum(g: &[C64], phi: f64) -> f64 {
    let step = C64::from_polar(1.0, -phi);
    let mut rot = C64::new(1.0, 0.0);
    let mut acc = 0.0;
    for gk in g {
        acc += (gk * rot).re;
        rot *= step;
    }
    acc
}

/// W(x, p) at a single phase-space point.
pub fn wigner_at(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let kernel = RadialKernel::new(rho.dim());
    let mut g = vec![C64::new(0.0, 0.0); rho.dim()];
    kernel.sums(rho, x.hypot(p), &mut g);
    angular_sum(&g, p.atan2(x))
}

/// W sampled on a rectangular grid; `values[ip * x.len() + ix]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid integral of W over the grid; falls short of 1 when the grid
    /// does not cover the state.
    pub norm_estimate: f64,
}

impl WignerGrid {
    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.x.len() + ix]
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Evaluates W on the tensor grid `x_axis × p_axis`.
pub fn wigner(rho: &DensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> WignerGrid {
    let kernel = RadialKernel::new(rho.dim());
    let values: Vec<f64> = p_axis
        .par_iter()
        .flat_map_iter(|&p| {
            let mut g = vec![C64::new(0.0, 0.0); rho.dim()];
            x_axis
                .iter()
                .map(|&x| {
                    kernel.sums(rho, x.hypot(p), &mut g);
                    angular_sum(&g, p.atan2(x))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let wx = trapezoid_weights(x_axis);
    let wp = trapezoid_weights(p_axis);
    let mut norm = 0.0;
    for (ip, wpi) in wp.iter().enumerate() {
        for (ix, wxi) in wx.iter().enumerate() {
            norm += values[ip * x_axis.len() + ix] * wxi * wpi;
        }
    }
    WignerGrid { x: x_axis.to_vec(), p: p_axis.to_vec(), values, norm_estimate: norm }
}

/// Uniform axis of `n` points over [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Polar sampling used for locating the Wigner maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub n_phi: usize,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self { r_max: 6.0, n_r: 200, n_phi: 256 }
    }
}

impl PolarGrid {
    /// Grid reaching `amplitude + 4` with radial spacing below 1% of `amplitude`.
    pub fn for_amplitude(amplitude: f64) -> Self {
        let r_max = amplitude + 4.0;
        let n_r = ((r_max / (0.01 * amplitude)).ceil() as usize + 1).max(200);
        Self { r_max, n_r, n_phi: 256 }
    }

    pub fn radius(&self, j: usize) -> f64 {
        self.r_max * j as f64 / (self.n_r - 1) as f64
    }

    pub fn angle(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * i as f64 / self.n_phi as f64
    }

    pub fn radial_step(&self) -> f64 {
        self.r_max / (self.n_r - 1) as f64
    }
}

/// Location of the global Wigner maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxLocation {
    pub radius: f64,
    pub phi: f64,
    pub value: f64,
}

/// W on a polar grid; `values[j * n_phi + i]` at radius j, angle i.
pub fn wigner_polar(rho: &DensityMatrix, grid: &PolarGrid) -> Vec<f64> {
    let kernel = RadialKernel::new(rho.dim());
    let mut g = vec![C64::new(0.0, 0.0); rho.dim()];
    let mut out = Vec::with_capacity(grid.n_r * grid.n_phi);
    for j in 0..grid.n_r {
        kernel.sums(rho, grid.radius(j), &mut g);
        for i in 0..grid.n_phi {
            out.push(angular_sum(&g, grid.angle(i)));
        }
    }
    out
}

/// Global maximum on a polar grid; ties go to the smallest radius, then the
/// smallest angle index.
pub fn wigner_max_radius_polar(rho: &DensityMatrix, grid: &PolarGrid) -> MaxLocation {
    let values = wigner_polar(rho, grid);
    let mut best = MaxLocation { radius: 0.0, phi: 0.0, value: f64::NEG_INFINITY };
    for j in 0..grid.n_r {
        for i in 0..grid.n_phi {
            let w = values[j * grid.n_phi + i];
            if w > best.value {
                best = MaxLocation { radius: grid.radius(j), phi: grid.angle(i), value: w };
            }
        }
    }
    best
}

/// Global maximum of a rectangular grid with the same tie-break order.
pub fn wigner_max_radius_grid(w: &WignerGrid) -> MaxLocation {
    let mut best = MaxLocation { radius: 0.0, phi: 0.0, value: f64::NEG_INFINITY };
    for (ip, &p) in w.p.iter().enumerate() {
        for (ix, &x) in w.x.iter().enumerate() {
            let value = w.value(ix, ip);
            let radius = x.hypot(p);
            let phi = p.atan2(x).rem_euclid(2.0 * std::f64::consts::PI);
            let better = value > best.value
                || (value == best.value && (radius < best.radius || (radius == best.radius && phi < best.phi)));
            if better {
                best = MaxLocation { radius, phi, value };
            }
        }
    }
    best
}

/// Angular structure of W on a polar grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    /// max over radii of (max_φ W − min_φ W), relative to the global maximum.
    pub variation: f64,
    /// Strict local maxima in φ along the ring through the global maximum.
    pub lobes: usize,
}

pub fn angular_profile(rho: &DensityMatrix, grid: &PolarGrid) -> AngularProfile {
    let values = wigner_polar(rho, grid);
    let n_phi = grid.n_phi;
    let global = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut variation: f64 = 0.0;
    let mut ring = 0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..grid.n_r {
        let row = &values[j * n_phi..(j + 1) * n_phi];
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        variation = variation.max(hi - lo);
        if hi > best {
            best = hi;
            ring = j;
        }
    }
    let row = &values[ring * n_phi..(ring + 1) * n_phi];
    let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // flat rings have no lobes; ripples below 1e-9 of the ring range are ignored
    let lobes = if hi - lo <= 1e-12 * global.abs().max(f64::MIN_POSITIVE) {
        0
    } else {
        let tol = 1e-9 * (hi - lo);
        (0..n_phi)
            .filter(|&i| {
                let prev = row[(i + n_phi - 1) % n_phi];
                let next = row[(i + 1) % n_phi];
                row[i] > prev + tol && row[i] >= next + tol
            })
            .count()
    };
    AngularProfile { variation: variation / global, lobes }
}
