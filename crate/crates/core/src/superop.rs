//! Explicit superoperator matrices built column by column from the stencil.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::liouvillian::{DriveModel, Frame};
use crate::params::SystemParams;
use crate::stencil::MasterEquation;
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Subspace of vectorized density matrices closed under the undriven generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteadyBlock {
    /// Populations only (k = l).
    Diagonal,
    /// Entries with even k − l.
    EvenParity,
    /// All N² entries.
    Full,
}

impl SteadyBlock {
    fn contains(self, k: usize, l: usize) -> bool {
        match self {
            SteadyBlock::Diagonal => k == l,
            SteadyBlock::EvenParity => (k + l).is_multiple_of(2),
            SteadyBlock::Full => true,
        }
    }

    /// Column-major indices k + l·N of the block entries, grouped by the
    /// offset k − l and then by k. The undriven generator only couples offsets
    /// that differ by 0 or 2, so this order keeps its bandwidth near 3N.
    pub fn indices(self, dim: usize) -> Vec<usize> {
        let n = dim as isize;
        let mut out = Vec::new();
        for d in -(n - 1)..n {
            for k in d.max(0)..(n + d.min(0)) {
                let (k, l) = (k as usize, (k - d) as usize);
                if self.contains(k, l) {
                    out.push(k + l * dim);
                }
            }
        }
        out
    }
}

/// Generator acting on vectorized (column-major) density matrices, restricted
/// to `indices` and stored as (row, column, value) triplets in block positions.
#[derive(Clone, Debug)]
pub struct Superoperator {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub entries: Vec<(usize, usize, C64)>,
}

impl Superoperator {
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.size(), self.size());
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Embeds a block vector back into a dim × dim matrix.
    pub fn unpack(&self, v: &[C64]) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (j, &idx) in self.indices.iter().enumerate() {
            m[(idx % self.dim, idx / self.dim)] = v[j];
        }
        m
    }

    pub fn pack(&self, m: &DMatrix<C64>) -> DVector<C64> {
        DVector::from_iterator(self.size(), self.indices.iter().map(|&idx| m[(idx % self.dim, idx / self.dim)]))
    }
}

/// Materializes `apply` on the given block. A nonzero image outside the block
/// is an error, since the block would not be invariant.
pub fn materialize_with<F>(dim: usize, block: SteadyBlock, mut apply: F) -> Result<Superoperator>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let indices = block.indices(dim);
    let mut position = vec![usize::MAX; dim * dim];
    for (j, &idx) in indices.iter().enumerate() {
        position[idx] = j;
    }
    let mut entries = Vec::new();
    let mut basis = vec![ZERO; dim * dim];
    let mut image = vec![ZERO; dim * dim];
    for (col, &idx) in indices.iter().enumerate() {
        basis[idx] = ONE;
        apply(&basis, &mut image);
        basis[idx] = ZERO;
        for (row_idx, &v) in image.iter().enumerate() {
            if v == ZERO {
                continue;
            }
            match position[row_idx] {
                usize::MAX => {
                    return Err(Error::UnsupportedConfiguration(format!(
                        "{block:?} block is not invariant under the generator"
                    )))
                }
                row => entries.push((row, col, v)),
            }
        }
    }
    Ok(Superoperator { dim, indices, entries })
}

/// Undriven generator in the laboratory frame on `block`.
pub fn undriven_generator(params: &SystemParams, dim: usize, block: SteadyBlock) -> Result<Superoperator> {
    let undriven = SystemParams { omega_drive: 0.0, ..*params };
    let eq = MasterEquation::new(undriven, DriveModel::Rwa, Frame::Laboratory, dim)?;
    materialize_with(dim, block, |x, y| eq.apply(0.0, x, y))
}

/// Banded matrix with partial pivoting storage: row i holds columns
/// i − lower ..= i + lower + upper.
struct BandedSystem {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandedSystem {
    fn new(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self { n, lower, upper, width, data: vec![ZERO; n * width] }
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.lower - row)
    }

    fn add(&mut self, row: usize, col: usize, v: C64) {
        let s = self.slot(row, col);
        self.data[s] += v;
    }

    fn set(&mut self, row: usize, col: usize, v: C64) {
        let s = self.slot(row, col);
        self.data[s] = v;
    }

    fn get(&self, row: usize, col: usize) -> C64 {
        self.data[self.slot(row, col)]
    }

    /// Gaussian elimination with partial pivoting; consumes the matrix.
    #[allow(clippy::needless_range_loop)]
    fn solve(mut self, mut rhs: Vec<C64>) -> Option<Vec<C64>> {
        let n = self.n;
        let reach = self.lower + self.upper;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..n {
            let last_row = (i + self.lower).min(n - 1);
            let last_col = (i + reach).min(n - 1);
            let pivot = (i..=last_row).max_by(|&a, &b| self.get(a, i).norm().total_cmp(&self.get(b, i).norm()))?;
            if self.get(pivot, i).norm() <= f64::EPSILON * scale * n as f64 {
                return None;
            }
            if pivot != i {
                for c in i..=last_col {
                    let (a, b) = (self.slot(i, c), self.slot(pivot, c));
                    self.data.swap(a, b);
                }
                rhs.swap(i, pivot);
            }
            let inv = ONE / self.get(i, i);
            for r in i + 1..=last_row {
                let factor = self.get(r, i) * inv;
                if factor == ZERO {
                    continue;
                }
                self.set(r, i, ZERO);
                for c in i + 1..=last_col {
                    let v = self.get(i, c);
                    if v != ZERO {
                        self.add(r, c, -factor * v);
                    }
                }
                let v = rhs[i];
                rhs[r] -= factor * v;
            }
        }
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for c in i + 1..=(i + reach).min(n - 1) {
                acc -= self.get(i, c) * rhs[c];
            }
            rhs[i] = acc / self.get(i, i);
        }
        Some(rhs)
    }
}

/// Unique normalized null vector of the undriven generator on `block`.
pub fn block_steady_state(params: &SystemParams, dim: usize, block: SteadyBlock) -> Result<DensityMatrix> {
    let op = undriven_generator(params, dim, block)?;
    let m = op.size();
    // the vacuum population row is replaced by the trace constraint
    let pivot = op.indices.iter().position(|&i| i == 0).expect("every block holds ρ_00");
    let trace_cols: Vec<usize> =
        op.indices.iter().enumerate().filter(|(_, &idx)| idx % dim == idx / dim).map(|(j, _)| j).collect();
    let mut lower = 0;
    let mut upper = 0;
    for &(r, c, _) in op.entries.iter().filter(|e| e.0 != pivot) {
        lower = lower.max(r.saturating_sub(c));
        upper = upper.max(c.saturating_sub(r));
    }
    for &c in &trace_cols {
        lower = lower.max(pivot.saturating_sub(c));
        upper = upper.max(c.saturating_sub(pivot));
    }
    let mut system = BandedSystem::new(m, lower, upper);
    for &(r, c, v) in op.entries.iter().filter(|e| e.0 != pivot) {
        system.add(r, c, v);
    }
    for &c in &trace_cols {
        system.set(pivot, c, ONE);
    }
    let mut rhs = vec![ZERO; m];
    rhs[pivot] = ONE;
    let solution = system.solve(rhs).ok_or_else(|| Error::Convergence("steady-state system is singular".into()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence("steady-state solve produced non-finite entries".into()));
    }
    let raw = op.unpack(&solution);
    let mut hermitian = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let trace = hermitian.trace();
    hermitian /= trace;
    DensityMatrix::from_matrix(hermitian)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sizes() {
        assert_eq!(SteadyBlock::Diagonal.indices(5).len(), 5);
        assert_eq!(SteadyBlock::EvenParity.indices(5).len(), 13);
        let mut full = SteadyBlock::Full.indices(5);
        full.sort_unstable();
        assert_eq!(full, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn banded_solve_matches_dense() {
        let n = 12;
        let mut dense = DMatrix::<C64>::zeros(n, n);
        let mut banded = BandedSystem::new(n, 2, 3);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 3).min(n - 1) {
                let v = C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64);
                dense[(i, j)] = v;
                banded.set(i, j, v);
            }
        }
        let rhs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let expect = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let got = banded.solve(rhs).unwrap();
        for i in 0..n {
            assert!((expect[i] - got[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn blocks_agree_for_covariant_rates() {
        let p = SystemParams::undriven(0.2, 0.1, 0.4, 0.2, 0.2);
        let a = block_steady_state(&p, 10, SteadyBlock::Diagonal).unwrap();
        let b = block_steady_state(&p, 10, SteadyBlock::Full).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-10);
    }

    #[test]
    fn diagonal_block_not_invariant_when_beta_differs_from_delta() {
        let p = SystemParams::undriven(0.2, 0.0, 0.0, 0.4, 0.0);
        assert!(undriven_generator(&p, 6, SteadyBlock::Diagonal).is_err());
        let even = block_steady_state(&p, 12, SteadyBlock::EvenParity).unwrap();
        let full = block_steady_state(&p, 12, SteadyBlock::Full).unwrap();
        assert!((even.matrix() - full.matrix()).norm() < 1e-10);
    }

    #[test]
    fn thermal_state_of_linear_oscillator() {
        let (gp, gm) = (0.1, 0.3);
        let rho =
            block_steady_state(&SystemParams::undriven(gp, gm, 0.0, 0.0, 0.0), 40, SteadyBlock::Diagonal).unwrap();
        let ratio = gp / gm;
        for k in 0..10 {
            let expect = (1.0 - ratio) * ratio.powi(k as i32);
            assert!((rho.get(k, k).re - expect).abs() < 1e-12);
        }
    }
}
