//! Master-equation generator assembled from operators and dissipators.
//!
//! This is the reference form: it multiplies dense matrices and is used to
//! validate the banded kernel in [`crate::stencil`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::LadderOperators;
use crate::params::SystemParams;
use crate::C64;

/// How the classical drive couples to the oscillator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveModel {
    /// Ω sin(ω_D t)(a + a†)/√2.
    Full,
    /// Co-rotating terms only.
    #[default]
    Rwa,
}

/// Reference frame of the density matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Laboratory,
    Rotating {
        omega_r: f64,
    },
}

impl Frame {
    pub fn omega_r(self) -> f64 {
        match self {
            Frame::Laboratory => 0.0,
            Frame::Rotating { omega_r } => omega_r,
        }
    }

    pub fn from_omega_r(omega_r: f64) -> Self {
        if omega_r == 0.0 {
            Frame::Laboratory
        } else {
            Frame::Rotating { omega_r }
        }
    }
}

fn check_square(m: &DMatrix<C64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Shape { expected: dim, rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// D[C]ρ = CρC† − ½{C†C, ρ}.
pub fn apply_dissipator(jump: &DMatrix<C64>, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_square(rho, jump.nrows())?;
    check_square(jump, rho.nrows())?;
    let jd = jump.adjoint();
    let jdj = &jd * jump;
    Ok(jump * rho * &jd - (&jdj * rho + rho * &jdj) * C64::new(0.5, 0.0))
}

/// Dense-operator generator with cached ladder operators.
#[derive(Clone, Debug)]
pub struct GenericLiouvillian {
    params: SystemParams,
    drive: DriveModel,
    omega_r: f64,
    ops: LadderOperators,
    pair: DMatrix<C64>,
}

impl GenericLiouvillian {
    pub fn new(params: SystemParams, drive: DriveModel, frame: Frame, dim: usize) -> Result<Self> {
        params.validate()?;
        let ops = LadderOperators::new(dim)?;
        let pair = &ops.annihilation * &ops.annihilation;
        Ok(Self { params, drive, omega_r: frame.omega_r(), ops, pair })
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let a = &self.ops.annihilation;
        let ad = &self.ops.creation;
        let mut h = self.ops.number() * C64::new(1.0 - self.omega_r, 0.0);
        let om = self.params.omega_drive;
        if om != 0.0 {
            let wd = self.params.omega_d;
            let wr = self.omega_r;
            // Ω/(2i√2) prefactor of the exponential forms
            let c = C64::new(0.0, -om / (2.0 * std::f64::consts::SQRT_2));
            let e = |w: f64| C64::from_polar(1.0, w * t);
            h += (a * e(wd - wr) - ad * e(-(wd - wr))) * c;
            if self.drive == DriveModel::Full {
                h += (ad * e(wd + wr) - a * e(-(wd + wr))) * c;
            }
        }
        h
    }

    /// Jump operators of the β and δ channels in the current frame.
    fn quadrature_jumps(&self, t: f64) -> (DMatrix<C64>, DMatrix<C64>) {
        let a = &self.ops.annihilation;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let y = a * ((C64::from_polar(1.0, -self.omega_r * t) - 1.0) * s);
        let yd = y.adjoint();
        let x_rot = &self.ops.position + &y + &yd;
        let p_rot = &self.ops.momentum - (&y - &yd) * C64::new(0.0, 1.0);
        (x_rot * a, p_rot * a)
    }

    pub fn rhs(&self, t: f64, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        check_square(rho, self.dim())?;
        let p = &self.params;
        let h = self.hamiltonian(t);
        let mut out = (&h * rho - rho * &h) * C64::new(0.0, -1.0);
        let mut add = |rate: f64, jump: &DMatrix<C64>| -> Result<()> {
            if rate != 0.0 {
                out += apply_dissipator(jump, rho)? * C64::new(rate, 0.0);
            }
            Ok(())
        };
        add(p.gamma1_plus, &self.ops.creation)?;
        add(p.gamma1_minus, &self.ops.annihilation)?;
        add(p.alpha, &self.pair)?;
        if p.beta != 0.0 || p.delta != 0.0 {
            let (xa, pa) = self.quadrature_jumps(t);
            add(p.beta, &xa)?;
            add(p.delta, &pa)?;
        }
        Ok(out)
    }
}

/// ρ̇ in the given frame, assembled from dense operators.
pub fn rhs_generic(
    params: &SystemParams,
    drive: DriveModel,
    frame: Frame,
    t: f64,
    rho: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    GenericLiouvillian::new(*params, drive, frame, rho.nrows())?.rhs(t, rho)
}

/// ρ̇ in the frame rotating at `omega_r`.
pub fn rhs_rotating(
    params: &SystemParams,
    drive: DriveModel,
    omega_r: f64,
    t: f64,
    rho: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    rhs_generic(params, drive, Frame::Rotating { omega_r }, t, rho)
}

/// Phases e^{−iω(k−l)t} mapping rotating-frame entries to the laboratory frame.
pub fn to_laboratory(rho_rot: &DMatrix<C64>, omega_r: f64, t: f64) -> DMatrix<C64> {
    DMatrix::from_fn(rho_rot.nrows(), rho_rot.ncols(), |k, l| {
        rho_rot[(k, l)] * C64::from_polar(1.0, -omega_r * (k as f64 - l as f64) * t)
    })
}

/// Inverse of [`to_laboratory`].
pub fn to_rotating(rho_lab: &DMatrix<C64>, omega_r: f64, t: f64) -> DMatrix<C64> {
    to_laboratory(rho_lab, -omega_r, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket_bra(n: usize, k: usize, l: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(n, n);
        m[(k, l)] = C64::new(1.0, 0.0);
        m
    }

    #[test]
    fn decay_of_vacuum_is_zero() {
        let ops = LadderOperators::new(4).unwrap();
        let out = apply_dissipator(&ops.annihilation, &ket_bra(4, 0, 0)).unwrap();
        assert!(out.norm() == 0.0);
    }

    #[test]
    fn single_photon_decay() {
        let ops = LadderOperators::new(4).unwrap();
        let out = apply_dissipator(&ops.annihilation, &ket_bra(4, 1, 1)).unwrap();
        let expect = ket_bra(4, 0, 0) - ket_bra(4, 1, 1);
        assert!((out - expect).norm() < 1e-15);
    }

    #[test]
    fn two_photon_loss() {
        let ops = LadderOperators::new(5).unwrap();
        let aa = &ops.annihilation * &ops.annihilation;
        let out = apply_dissipator(&aa, &ket_bra(5, 2, 2)).unwrap();
        let expect = (ket_bra(5, 0, 0) - ket_bra(5, 2, 2)) * C64::new(2.0, 0.0);
        assert!((out - expect).norm() < 1e-14);
    }

    #[test]
    fn dissipator_shape_mismatch() {
        let ops = LadderOperators::new(4).unwrap();
        assert!(matches!(apply_dissipator(&ops.annihilation, &ket_bra(3, 0, 0)), Err(Error::Shape { .. })));
    }

    #[test]
    fn free_rotation_of_coherence() {
        let p = SystemParams::undriven(0.0, 0.0, 0.0, 0.0, 0.0);
        let out = rhs_generic(&p, DriveModel::Rwa, Frame::Laboratory, 0.0, &ket_bra(3, 0, 1)).unwrap();
        assert!((out[(0, 1)] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((out.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gain_from_vacuum_matches_table_coefficient() {
        let g = 0.37;
        let p = SystemParams::undriven(g, 0.0, 0.0, 0.0, 0.0);
        let out = rhs_generic(&p, DriveModel::Rwa, Frame::Laboratory, 0.0, &ket_bra(4, 0, 0)).unwrap();
        assert!((out[(0, 0)].re + g).abs() < 1e-15);
        assert!((out[(1, 1)].re - g).abs() < 1e-15);
    }

    #[test]
    fn zero_rotation_is_laboratory() {
        let p = SystemParams::undriven(0.2, 0.1, 0.3, 0.2, 0.05).with_drive(0.4);
        let rho = ket_bra(5, 1, 3) + ket_bra(5, 3, 1) + ket_bra(5, 2, 2);
        let lab = rhs_generic(&p, DriveModel::Full, Frame::Laboratory, 0.7, &rho).unwrap();
        let rot = rhs_rotating(&p, DriveModel::Full, 0.0, 0.7, &rho).unwrap();
        assert!((lab - rot).norm() < 1e-15);
    }

    #[test]
    fn drive_rotating_frame_is_time_independent_for_rvdp() {
        let p = SystemParams::undriven(0.2, 0.1, 0.3, 0.0, 0.0).with_drive(0.3).with_detuning(0.1);
        let rho = ket_bra(5, 1, 2) * C64::new(0.5, 0.5) + ket_bra(5, 2, 1) * C64::new(0.5, -0.5);
        let a = rhs_rotating(&p, DriveModel::Rwa, p.omega_d, 0.0, &rho).unwrap();
        let b = rhs_rotating(&p, DriveModel::Rwa, p.omega_d, 3.3, &rho).unwrap();
        assert!((a - b).norm() < 1e-14);
    }
}
