//! Banded Fock-basis kernel of the master equation.
//!
//! Each entry ρ̇_kl depends only on ρ_kl and neighbours at offsets of at most
//! two in each index. A frame rotating at ω_R multiplies every neighbour read
//! at offset (d₁, d₂) by e^{−iω_R(d₁−d₂)t} and shifts the free frequency to
//! 1 − ω_R, so one kernel serves both frames.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::liouvillian::{DriveModel, Frame};
use crate::params::SystemParams;
use crate::C64;

/// Precomputed coefficient tables for one parameter set and dimension.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    dim: usize,
    params: SystemParams,
    drive: DriveModel,
    omega_r: f64,
    sqrt: Vec<f64>,
    diag: Vec<C64>,
    gain: Vec<f64>,
    loss: Vec<f64>,
    pair: Vec<f64>,
    /// Reads ρ_{k+2,l}, ρ_{k,l+2}, ρ_{k,l−2}, ρ_{k−2,l}.
    skew: [Vec<f64>; 4],
    has_skew: bool,
}

impl MasterEquation {
    pub fn new(params: SystemParams, drive: DriveModel, frame: Frame, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        params.validate()?;
        let omega_r = frame.omega_r();
        let n = dim;
        let sqrt: Vec<f64> = (0..n + 3).map(|k| (k as f64).sqrt()).collect();
        let s = |k: isize| if k < 0 { 0.0 } else { sqrt[k as usize] };
        let SystemParams { gamma1_plus: gp, gamma1_minus: gm, alpha, beta, delta, .. } = params;
        let q = 0.25 * (beta - delta);
        let c_pair = alpha + 0.5 * (beta + delta);
        // truncated a a† has a zero in its last diagonal entry
        let up = |k: usize| if k + 1 < n { (k + 1) as f64 } else { 0.0 };

        let mut diag = vec![C64::new(0.0, 0.0); n * n];
        let mut gain = vec![0.0; n * n];
        let mut loss = vec![0.0; n * n];
        let mut pair = vec![0.0; n * n];
        let mut skew = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for l in 0..n {
            for k in 0..n {
                let i = k + l * n;
                let (kf, lf) = (k as f64, l as f64);
                let (ki, li) = (k as isize, l as isize);
                let re = -0.5 * gp * (up(k) + up(l))
                    - 0.5 * gm * (kf + lf)
                    - 0.5 * alpha * (kf * (kf - 1.0) + lf * (lf - 1.0))
                    + 0.25 * (beta + delta) * (2.0 * kf * lf - 2.0 * kf * kf - 2.0 * lf * lf + kf + lf);
                diag[i] = C64::new(re, -(1.0 - omega_r) * (kf - lf));
                gain[i] = gp * s(ki) * s(li);
                loss[i] = gm * s(ki + 1) * s(li + 1);
                pair[i] = c_pair * s(ki + 1) * s(ki + 2) * s(li + 1) * s(li + 2);
                skew[0][i] = q * (2.0 * lf - kf) * s(ki + 1) * s(ki + 2);
                skew[1][i] = q * (2.0 * kf - lf) * s(li + 1) * s(li + 2);
                skew[2][i] = q * (2.0 - lf) * s(li) * s(li - 1);
                skew[3][i] = q * (2.0 - kf) * s(ki) * s(ki - 1);
            }
        }
        Ok(Self { dim, params, drive, omega_r, sqrt, diag, gain, loss, pair, skew, has_skew: q != 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn drive(&self) -> DriveModel {
        self.drive
    }

    pub fn frame(&self) -> Frame {
        Frame::from_omega_r(self.omega_r)
    }

    /// True when the generator does not depend on time.
    pub fn is_autonomous(&self) -> bool {
        let no_skew_phase = !self.has_skew || self.omega_r == 0.0;
        let no_drive_phase =
            self.params.omega_drive == 0.0 || (self.drive == DriveModel::Rwa && self.omega_r == self.params.omega_d);
        no_skew_phase && no_drive_phase
    }

    /// Drive coefficients multiplying the raising and lowering neighbour groups.
    fn drive_coefficients(&self, t: f64) -> (C64, C64) {
        let om = self.params.omega_drive;
        if om == 0.0 {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let wd = self.params.omega_d;
        let wr = self.omega_r;
        match self.drive {
            DriveModel::Full => {
                let amp = C64::new(0.0, -om * (wd * t).sin() * std::f64::consts::FRAC_1_SQRT_2);
                (amp * C64::from_polar(1.0, wr * t), amp * C64::from_polar(1.0, -wr * t))
            }
            DriveModel::Rwa => {
                let c = om / (2.0 * std::f64::consts::SQRT_2);
                let u = C64::from_polar(1.0, (wd - wr) * t);
                (u.conj() * c, -u * c)
            }
        }
    }

    /// Writes ρ̇ for a general (not necessarily Hermitian) operator.
    pub fn apply(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        self.apply_inner(t, rho, out, false, true);
    }

    /// Writes ρ̇ assuming ρ is Hermitian: only the upper triangle is computed.
    pub fn apply_hermitian(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        self.apply_inner(t, rho, out, true, true);
        let n = self.dim;
        for l in 0..n {
            for k in 0..l {
                out[l + k * n] = out[k + l * n].conj();
            }
        }
    }

    /// Writes only the drive contribution −i[V(t), ρ].
    pub fn apply_drive(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let (c_up, c_dn) = self.drive_coefficients(t);
        self.add_drive(rho, out, c_up, c_dn, false);
    }

    fn add_drive(&self, rho: &[C64], out: &mut [C64], c_up: C64, c_dn: C64, upper: bool) {
        let n = self.dim;
        let s = &self.sqrt;
        for l in 0..n {
            let kmax = if upper { l + 1 } else { n };
            for k in 0..kmax {
                let i = k + l * n;
                let mut raise = C64::new(0.0, 0.0);
                let mut lower = C64::new(0.0, 0.0);
                if k > 0 {
                    raise += rho[i - 1] * s[k];
                }
                if l + 1 < n {
                    raise -= rho[i + n] * s[l + 1];
                }
                if k + 1 < n {
                    lower += rho[i + 1] * s[k + 1];
                }
                if l > 0 {
                    lower -= rho[i - n] * s[l];
                }
                out[i] += c_up * raise + c_dn * lower;
            }
        }
    }

    fn apply_inner(&self, t: f64, rho: &[C64], out: &mut [C64], upper: bool, with_drive: bool) {
        let n = self.dim;
        debug_assert_eq!(rho.len(), n * n);
        debug_assert_eq!(out.len(), n * n);
        let e2 = C64::from_polar(1.0, -2.0 * self.omega_r * t);
        let e2c = e2.conj();
        for l in 0..n {
            let kmax = if upper { l + 1 } else { n };
            for k in 0..kmax {
                let i = k + l * n;
                let mut acc = self.diag[i] * rho[i];
                if k > 0 && l > 0 {
                    acc += rho[i - 1 - n] * self.gain[i];
                }
                if k + 1 < n && l + 1 < n {
                    acc += rho[i + 1 + n] * self.loss[i];
                    if k + 2 < n && l + 2 < n {
                        acc += rho[i + 2 + 2 * n] * self.pair[i];
                    }
                }
                if self.has_skew {
                    let mut fwd = C64::new(0.0, 0.0);
                    let mut bwd = C64::new(0.0, 0.0);
                    if k + 2 < n {
                        fwd += rho[i + 2] * self.skew[0][i];
                    }
                    if l >= 2 {
                        fwd += rho[i - 2 * n] * self.skew[2][i];
                    }
                    if l + 2 < n {
                        bwd += rho[i + 2 * n] * self.skew[1][i];
                    }
                    if k >= 2 {
                        bwd += rho[i - 2] * self.skew[3][i];
                    }
                    acc += fwd * e2 + bwd * e2c;
                }
                out[i] = acc;
            }
        }
        if with_drive && self.params.omega_drive != 0.0 {
            let (c_up, c_dn) = self.drive_coefficients(t);
            self.add_drive(rho, out, c_up, c_dn, upper);
        }
    }
}

/// Laboratory-frame banded evaluation of ρ̇.
pub fn rhs_fock_explicit(
    params: &SystemParams,
    drive: DriveModel,
    frame: Frame,
    t: f64,
    rho: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    if frame.omega_r() != 0.0 {
        return Err(Error::UnsupportedFrame(
            "the explicit Fock-basis kernel is defined in the laboratory frame".into(),
        ));
    }
    let n = rho.nrows();
    if rho.ncols() != n {
        return Err(Error::Shape { expected: n, rows: n, cols: rho.ncols() });
    }
    let eq = MasterEquation::new(*params, drive, Frame::Laboratory, n)?;
    let mut out = DMatrix::zeros(n, n);
    eq.apply(t, rho.as_slice(), out.as_mut_slice());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, k: usize, l: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(n, n);
        m[(k, l)] = C64::new(1.0, 0.0);
        m
    }

    #[test]
    fn gain_from_vacuum() {
        let p = SystemParams::undriven(0.3, 0.0, 0.0, 0.0, 0.0);
        let out = rhs_fock_explicit(&p, DriveModel::Rwa, Frame::Laboratory, 0.0, &basis(4, 0, 0)).unwrap();
        assert!((out[(0, 0)].re + 0.3).abs() < 1e-15);
        assert!((out[(1, 1)].re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rotating_frame_rejected() {
        let p = SystemParams::undriven(0.3, 0.0, 0.0, 0.0, 0.0);
        let err = rhs_fock_explicit(&p, DriveModel::Rwa, Frame::Rotating { omega_r: 1.0 }, 0.0, &basis(4, 0, 0));
        assert!(matches!(err, Err(Error::UnsupportedFrame(_))));
    }

    #[test]
    fn equal_beta_delta_keeps_offset_family() {
        let p = SystemParams::undriven(0.2, 0.1, 0.3, 0.4, 0.4);
        let out = rhs_fock_explicit(&p, DriveModel::Full, Frame::Laboratory, 0.0, &basis(8, 2, 5)).unwrap();
        for l in 0..8 {
            for k in 0..8 {
                if l as isize - k as isize != 3 {
                    assert_eq!(out[(k, l)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn autonomy_detection() {
        let p = SystemParams::undriven(0.2, 0.1, 0.3, 0.0, 0.0).with_drive(0.3).with_detuning(0.1);
        let rot = Frame::Rotating { omega_r: p.omega_d };
        assert!(MasterEquation::new(p, DriveModel::Rwa, rot, 6).unwrap().is_autonomous());
        assert!(!MasterEquation::new(p, DriveModel::Full, rot, 6).unwrap().is_autonomous());
        let q = SystemParams { beta: 0.1, ..p };
        assert!(!MasterEquation::new(q, DriveModel::Rwa, rot, 6).unwrap().is_autonomous());
    }
}
