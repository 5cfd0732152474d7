//! Truncated Fock-space operators and density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::C64;

/// Default bound on the population of the last retained Fock level.
pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-6;

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

/// Ladder, position and momentum operators on the first `dim` Fock states.
#[derive(Clone, Debug)]
pub struct LadderOperators {
    pub annihilation: DMatrix<C64>,
    pub creation: DMatrix<C64>,
    pub position: DMatrix<C64>,
    pub momentum: DMatrix<C64>,
}

impl LadderOperators {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let annihilation =
            DMatrix::from_fn(
                dim,
                dim,
                |r, c| {
                    if c == r + 1 {
                        C64::new((c as f64).sqrt(), 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                },
            );
        let creation = annihilation.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let position = (&annihilation + &creation) * C64::new(s, 0.0);
        // (a - a†)/(√2 i) = -i (a - a†)/√2
        let momentum = (&annihilation - &creation) * C64::new(0.0, -s);
        Ok(Self { annihilation, creation, position, momentum })
    }

    pub fn dim(&self) -> usize {
        self.annihilation.nrows()
    }

    pub fn number(&self) -> DMatrix<C64> {
        &self.creation * &self.annihilation
    }
}

/// Hermitian, unit-trace operator on the truncated Fock space, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps a square matrix; only the shape is checked.
    pub fn from_matrix(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Shape { expected: data.nrows(), rows: data.nrows(), cols: data.ncols() });
        }
        check_dim(data.nrows())?;
        Ok(Self { data })
    }

    /// Column-major vector of length dim².
    pub fn from_column_major(dim: usize, values: Vec<C64>) -> Result<Self> {
        check_dim(dim)?;
        if values.len() != dim * dim {
            return Err(Error::Shape { expected: dim, rows: values.len(), cols: 1 });
        }
        Ok(Self { data: DMatrix::from_vec(dim, dim, values) })
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::Truncation { leakage: 1.0, threshold: 0.0, dim, suggested: n + 2 });
        }
        let mut data = DMatrix::zeros(dim, dim);
        data[(n, n)] = C64::new(1.0, 0.0);
        Ok(Self { data })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(0, dim)
    }

    /// Diagonal state with the given populations (renormalized).
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let dim = populations.len();
        check_dim(dim)?;
        let total: f64 = populations.iter().sum();
        let mut data = DMatrix::zeros(dim, dim);
        for (k, p) in populations.iter().enumerate() {
            data[(k, k)] = C64::new(p / total, 0.0);
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn as_slice(&self) -> &[C64] {
        self.data.as_slice()
    }

    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.data[(k, l)]
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_kl|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for k in 0..=l {
                worst = worst.max((self.data[(k, l)] - self.data[(l, k)].conj()).norm());
            }
        }
        worst
    }

    /// Population of the last retained Fock level.
    pub fn leakage(&self) -> f64 {
        let n = self.dim() - 1;
        self.data[(n, n)].re.abs()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.data[(k, k)].re).collect()
    }

    /// Checks trace and Hermiticity against the given tolerances.
    pub fn validate(&self, trace_tol: f64, hermiticity_tol: f64) -> Result<()> {
        let drift = (self.trace() - C64::new(1.0, 0.0)).norm();
        if drift > trace_tol {
            return Err(Error::TraceDrift { drift, tolerance: trace_tol, t: f64::NAN });
        }
        let herm = self.hermiticity_residual();
        if herm > hermiticity_tol {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian: residual {herm:.3e}")));
        }
        Ok(())
    }

    /// Coherent state truncated to `dim` levels and renormalized.
    ///
    /// Returns the state and the weight discarded by the truncation.
    pub fn coherent(alpha0: C64, dim: usize, leakage_threshold: f64) -> Result<(Self, f64)> {
        let amps = coherent_amplitudes(alpha0, dim)?;
        let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let discarded = (1.0 - kept).max(0.0);
        let leak = amps[dim - 1].norm_sqr() / kept;
        if leak >= leakage_threshold {
            return Err(Error::Truncation {
                leakage: leak,
                threshold: leakage_threshold,
                dim,
                suggested: coherent_required_dim(alpha0.norm(), leakage_threshold),
            });
        }
        let mut data = DMatrix::zeros(dim, dim);
        for l in 0..dim {
            for k in 0..dim {
                data[(k, l)] = amps[k] * amps[l].conj() / kept;
            }
        }
        Ok((Self { data }, discarded))
    }
}

/// ln k! for k = 0..n, by cumulative summation.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        if k > 0 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Unnormalized-by-truncation amplitudes e^{-|α|²/2} α^k / √k!.
pub fn coherent_amplitudes(alpha0: C64, dim: usize) -> Result<Vec<C64>> {
    check_dim(dim)?;
    let r = alpha0.norm();
    let theta = alpha0.arg();
    let lf = log_factorials(dim);
    Ok((0..dim)
        .map(|k| {
            if r == 0.0 {
                return if k == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
            let log_mag = -0.5 * r * r + k as f64 * r.ln() - 0.5 * lf[k];
            Complex64::from_polar(log_mag.exp(), k as f64 * theta)
        })
        .collect())
}

/// Smallest dimension whose last level carries less than `threshold` of a
/// coherent state with amplitude `r`.
pub fn coherent_required_dim(r: f64, threshold: f64) -> usize {
    let mut dim = 2;
    while dim < 4096 {
        let amps = coherent_amplitudes(C64::new(r, 0.0), dim).expect("dim >= 2");
        let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if amps[dim - 1].norm_sqr() / kept < threshold {
            return dim;
        }
        dim += 1;
    }
    dim
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimension_below_two_rejected() {
        assert!(matches!(LadderOperators::new(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn two_level_annihilation() {
        let ops = LadderOperators::new(2).unwrap();
        assert_eq!(ops.annihilation[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(ops.annihilation[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(ops.annihilation[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn three_level_entry() {
        let ops = LadderOperators::new(3).unwrap();
        assert_abs_diff_eq!(ops.annihilation[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn commutator_identity_except_edge() {
        let ops = LadderOperators::new(16).unwrap();
        let comm = &ops.annihilation * &ops.creation - &ops.creation * &ops.annihilation;
        for k in 0..16 {
            for l in 0..16 {
                let expect = match (k == l, k) {
                    (true, 15) => -15.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert_abs_diff_eq!(comm[(k, l)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(comm[(k, l)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quadratures_hermitian_and_canonical() {
        let ops = LadderOperators::new(10).unwrap();
        assert!((&ops.position - ops.position.adjoint()).norm() < 1e-14);
        assert!((&ops.momentum - ops.momentum.adjoint()).norm() < 1e-14);
        let comm = &ops.position * &ops.momentum - &ops.momentum * &ops.position;
        for k in 0..9 {
            assert_abs_diff_eq!(comm[(k, k)].im, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_coherent_is_vacuum() {
        let (rho, discarded) = DensityMatrix::coherent(C64::new(0.0, 0.0), 8, 1e-6).unwrap();
        assert_eq!(rho, DensityMatrix::vacuum(8).unwrap());
        assert_eq!(discarded, 0.0);
    }

    #[test]
    fn coherent_mean_number() {
        let alpha0 = C64::new(0.75, 0.75);
        let (rho, _) = DensityMatrix::coherent(alpha0, 30, 1e-6).unwrap();
        let n: f64 = (0..30).map(|k| k as f64 * rho.get(k, k).re).sum();
        assert_abs_diff_eq!(n, 9.0 / 8.0, epsilon = 1e-10);
    }

    #[test]
    fn coherent_partial_sum_at_sixteen_levels() {
        // Poisson partial sum Σ_{k<16} e^{-1}/k! computed in plain f64 arithmetic
        let mut term = (-1.0f64).exp();
        let mut sum = 0.0;
        for k in 0..16 {
            if k > 0 {
                term /= k as f64;
            }
            sum += term;
        }
        let amps = coherent_amplitudes(C64::new(1.0, 0.0), 16).unwrap();
        let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(kept, sum, epsilon = 1e-14);
        assert!((kept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_truncation_error_names_dimension() {
        let err = DensityMatrix::coherent(C64::new(3.0, 0.0), 10, 1e-6).unwrap_err();
        match err {
            Error::Truncation { suggested, .. } => {
                assert!(suggested > 10);
                let ok = DensityMatrix::coherent(C64::new(3.0, 0.0), suggested, 1e-6);
                assert!(ok.is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn log_factorials_survive_large_arguments() {
        let lf = log_factorials(400);
        assert!(lf[399].is_finite());
        assert_abs_diff_eq!(lf[5], 120f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn coherent_is_pure() {
        let (rho, _) = DensityMatrix::coherent(C64::new(1.2, -0.4), 30, 1e-8).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-8);
        rho.validate(1e-12, 1e-14).unwrap();
    }
}
