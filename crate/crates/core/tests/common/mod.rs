#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use ptmoments::qstate::{DensityMatrix, SiteLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()).scale(0.5)
}

/// Random mixed state of rank `rank` on qubit sites `1..=n`.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, rank: usize) -> DensityMatrix {
    let d = 1 << n;
    let g = ginibre(rng, d, rank);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    DensityMatrix::new(SiteLayout::qubits(n), rho.map(|z| z / tr)).unwrap()
}

/// Random partition of `1..=n` into two non-empty halves.
pub fn random_partition<R: Rng>(rng: &mut R, n: usize) -> (Vec<usize>, Vec<usize>) {
    loop {
        let mask: u32 = rng.random_range(1..(1u32 << n) - 1);
        let (a, b): (Vec<usize>, Vec<usize>) = (1..=n).partition(|s| mask >> (s - 1) & 1 == 1);
        if !a.is_empty() && !b.is_empty() {
            return (a, b);
        }
    }
}
