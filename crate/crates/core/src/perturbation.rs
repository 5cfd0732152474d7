//! Weak-drive expansion ρ = ρ⁽⁰⁾ + Ωρ⁽¹⁾ + O(Ω²) in the frame co-rotating
//! with the drive.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::liouvillian::{DriveModel, Frame};
use crate::observables::mean_annihilation;
use crate::params::SystemParams;
use crate::stencil::MasterEquation;
use crate::superop::{materialize_with, undriven_generator, SteadyBlock};
use crate::C64;

/// Largest Fock dimension for which superoperators are materialized.
pub const MAX_MATERIALIZED_DIM: usize = 32;

/// Condition estimate above which the first-order solve is rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Dense generator on vectorized (column-major) density matrices.
#[derive(Clone, Debug)]
pub struct SuperoperatorMatrix {
    pub dim: usize,
    pub matrix: DMatrix<C64>,
}

impl SuperoperatorMatrix {
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = DVector::from_column_slice(rho.as_slice());
        let w = &self.matrix * v;
        DMatrix::from_column_slice(self.dim, self.dim, w.as_slice())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_MATERIALIZED_DIM {
        return Err(Error::InvalidParameter(format!(
            "superoperator materialization is limited to dim <= {MAX_MATERIALIZED_DIM}, got {dim}"
        )));
    }
    Ok(())
}

/// Undriven generator L₀ and the drive generator at the configured Ω in the
/// RWA frame rotating at ω_D, where both are time-independent when β = δ.
pub fn materialize_generators(params: &SystemParams, dim: usize) -> Result<(SuperoperatorMatrix, SuperoperatorMatrix)> {
    check_dim(dim)?;
    if !params.is_phase_covariant() {
        return Err(Error::UnsupportedConfiguration(
            "beta != delta makes the rotating-frame generator time-dependent".into(),
        ));
    }
    let frame = Frame::Rotating { omega_r: params.omega_d };
    let undriven = SystemParams { omega_drive: 0.0, ..*params };
    let l0 = MasterEquation::new(undriven, DriveModel::Rwa, frame, dim)?;
    let ld = MasterEquation::new(*params, DriveModel::Rwa, frame, dim)?;
    let l0 = materialize_with(dim, SteadyBlock::Full, |x, y| l0.apply(0.0, x, y))?;
    let ld = materialize_with(dim, SteadyBlock::Full, |x, y| ld.apply_drive(0.0, x, y))?;
    let to_natural = |op: crate::superop::Superoperator| {
        // block order groups by offset; permute back to column-major order
        let mut m = DMatrix::zeros(dim * dim, dim * dim);
        for &(r, c, v) in &op.entries {
            m[(op.indices[r], op.indices[c])] += v;
        }
        SuperoperatorMatrix { dim, matrix: m }
    };
    Ok((to_natural(l0), to_natural(ld)))
}

/// Zeroth- and first-order states with diagnostics.
#[derive(Clone, Debug)]
pub struct FirstOrder {
    pub rho0: DensityMatrix,
    pub rho1: DMatrix<C64>,
    /// max |L₀ρ⁽¹⁾ + L_drive ρ⁽⁰⁾|.
    pub residual: f64,
    /// 1-norm condition number of the bordered system.
    pub condition: f64,
    /// χ = Tr[a ρ⁽¹⁾].
    pub chi: C64,
}

impl FirstOrder {
    /// ρ⁽⁰⁾ + Ωρ⁽¹⁾.
    pub fn state_at(&self, omega_drive: f64) -> DMatrix<C64> {
        self.rho0.matrix() + &self.rho1 * C64::new(omega_drive, 0.0)
    }
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solves L₀ρ⁽¹⁾ = −L_drive ρ⁽⁰⁾ on the trace-zero subspace through the
/// bordered system [[L₀, ρ⁽⁰⁾], [Tr, 0]].
pub fn first_order_state(params: &SystemParams, dim: usize) -> Result<FirstOrder> {
    let (l0, ld) = materialize_generators(&params.with_drive(1.0), dim)?;
    let rho0 = crate::superop::block_steady_state(params, dim, SteadyBlock::Diagonal)?;
    let n2 = dim * dim;
    let v0 = DVector::from_column_slice(rho0.as_slice());
    let mut bordered = DMatrix::zeros(n2 + 1, n2 + 1);
    bordered.view_mut((0, 0), (n2, n2)).copy_from(&l0.matrix);
    bordered.view_mut((0, n2), (n2, 1)).copy_from(&v0);
    for k in 0..dim {
        bordered[(n2, k + k * dim)] = C64::new(1.0, 0.0);
    }
    let source = -(&ld.matrix * &v0);
    let mut rhs = DVector::zeros(n2 + 1);
    rhs.rows_mut(0, n2).copy_from(&source);
    let norm = one_norm(&bordered);
    let inverse = bordered.clone().lu().try_inverse().ok_or(Error::Conditioning { estimate: f64::INFINITY })?;
    let condition = norm * one_norm(&inverse);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Conditioning { estimate: condition });
    }
    let solution = &inverse * &rhs;
    let rho1 = DMatrix::from_column_slice(dim, dim, &solution.as_slice()[..n2]);
    let check = &l0.matrix * DVector::from_column_slice(rho1.as_slice()) - source;
    let residual = check.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let chi = mean_annihilation(dim, rho1.as_slice());
    Ok(FirstOrder { rho0, rho1, residual, condition, chi })
}

/// χ = ∂⟨a⟩/∂Ω at Ω = 0 in the frame rotating with the drive.
pub fn susceptibility(params: &SystemParams, dim: usize) -> Result<C64> {
    Ok(first_order_state(params, dim)?.chi)
}

/// Singular values of the undriven laboratory-frame generator, ascending.
pub fn undriven_singular_values(params: &SystemParams, dim: usize) -> Result<Vec<f64>> {
    check_dim(dim)?;
    let op = undriven_generator(params, dim, SteadyBlock::Full)?;
    let mut sv: Vec<f64> = op.to_dense().singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    Ok(sv)
}

/// Exports of the first-order solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderSummary {
    pub chi: C64,
    pub residual: f64,
    pub condition: f64,
    /// ρ⁽¹⁾_{n,n−1} for n = 1..dim.
    pub subdiagonal: Vec<C64>,
    pub max_off_band: f64,
}

impl From<&FirstOrder> for FirstOrderSummary {
    fn from(f: &FirstOrder) -> Self {
        let dim = f.rho1.nrows();
        let mut max_off_band: f64 = 0.0;
        for l in 0..dim {
            for k in 0..dim {
                if k.abs_diff(l) != 1 {
                    max_off_band = max_off_band.max(f.rho1[(k, l)].norm());
                }
            }
        }
        Self {
            chi: f.chi,
            residual: f.residual,
            condition: f.condition,
            subdiagonal: (1..dim).map(|n| f.rho1[(n, n - 1)]).collect(),
            max_off_band,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_generator_spectrum() {
        let p = SystemParams::undriven(0.0, 0.6, 0.0, 0.0, 0.0);
        let (l0, _) = materialize_generators(&p, 2).unwrap();
        let eigen = l0.matrix.clone().schur().eigenvalues().unwrap();
        let mut re: Vec<f64> = eigen.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let expect = [-0.6, -0.3, -0.3, 0.0];
        for (a, b) in re.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn drive_generator_is_linear_in_omega() {
        let p = SystemParams::undriven(0.2, 0.1, 0.8, 0.0, 0.0).with_drive(0.3);
        let (_, a) = materialize_generators(&p, 5).unwrap();
        let (_, b) = materialize_generators(&p.with_drive(0.6), 5).unwrap();
        assert!((a.matrix * C64::new(2.0, 0.0) - b.matrix).norm() < 1e-15);
    }

    #[test]
    fn beta_delta_mismatch_rejected() {
        let p = SystemParams::undriven(0.2, 0.1, 0.0, 0.4, 0.0);
        assert!(matches!(materialize_generators(&p, 4), Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn linear_oscillator_response() {
        let (gp, gm) = (0.05, 0.3);
        let p = SystemParams::undriven(gp, gm, 0.0, 0.0, 0.0).with_detuning(0.1);
        let chi = susceptibility(&p, 24).unwrap();
        let kappa = gm - gp;
        let expect = C64::new(1.0, 0.0) / (C64::new(kappa / 2.0, -p.detuning()) * (2.0 * std::f64::consts::SQRT_2));
        assert!((chi - expect).norm() < 1e-9 * expect.norm(), "{chi} vs {expect}");
    }
}
