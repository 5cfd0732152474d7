#![allow(dead_code)]

use nalgebra::DMatrix;
use qrvdp::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Hermitian positive unit-trace matrix built as G G† / Tr.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
