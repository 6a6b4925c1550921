use super::{PartitionSpec, SiteLayout};
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::{Error, Result};

/// Largest `n`-copy index space `D^n` the dense oracle will enumerate.
pub const MAX_COPY_SPACE: usize = 1 << 24;

/// Direction of a cyclic permutation of `n` copies of a subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cycle {
    /// `|k1, k2, ..., kn> -> |kn, k1, ..., k(n-1)>`
    Forward,
    /// `|k1, k2, ..., kn> -> |k2, ..., kn, k1>`
    Backward,
}

impl Cycle {
    /// Copy whose content lands in copy `c` under the permutation.
    fn source(self, c: usize, n: usize) -> usize {
        match self {
            Cycle::Forward => (c + n - 1) % n,
            Cycle::Backward => (c + 1) % n,
        }
    }

    /// Copy that lands in copy `c` under the inverse permutation.
    fn inverse_source(self, c: usize, n: usize) -> usize {
        match self {
            Cycle::Forward => (c + 1) % n,
            Cycle::Backward => (c + n - 1) % n,
        }
    }
}

struct CopySplit {
    dim: usize,
    /// For every single-copy index, its `A` and `B` digit contributions.
    a_part: Vec<usize>,
    b_part: Vec<usize>,
}

fn split(layout: &SiteLayout, partition: &PartitionSpec) -> Result<CopySplit> {
    partition.check_covers(layout)?;
    let strides = layout.strides();
    let dims = layout.dims();
    let a_pos: Vec<usize> = partition
        .a_sites()
        .iter()
        .map(|s| layout.position(*s).expect("covered"))
        .collect();
    let dim = layout.total_dim();
    let mut a_part = vec![0; dim];
    let mut b_part = vec![0; dim];
    for k in 0..dim {
        let a: usize = a_pos
            .iter()
            .map(|&p| (k / strides[p]) % dims[p] * strides[p])
            .sum();
        a_part[k] = a;
        b_part[k] = k - a;
    }
    Ok(CopySplit {
        dim,
        a_part,
        b_part,
    })
}

fn copy_space(dim: usize, n: usize) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..n {
        total = total
            .checked_mul(dim)
            .filter(|&t| t <= MAX_COPY_SPACE)
            .ok_or_else(|| {
                Error::resource(format!(
                    "{n} copies of dimension {dim} exceed {MAX_COPY_SPACE}"
                ))
            })?;
    }
    Ok(total)
}

/// Dense permutation operator `P_A ⊗ P_B` acting on `n` copies of the sites in
/// `layout`, where `P_A` cycles the `A` factors and `P_B` the `B` factors. The
/// copy index is the most significant.
pub fn cyclic_permutation_matrix(
    layout: &SiteLayout,
    partition: &PartitionSpec,
    n: usize,
    a_cycle: Cycle,
    b_cycle: Cycle,
) -> Result<CMatrix> {
    let sp = split(layout, partition)?;
    let total = copy_space(sp.dim, n)?;
    if total > 1 << 12 {
        return Err(Error::resource("dense permutation matrix too large"));
    }
    let mut p = CMatrix::zeros(total, total);
    let mut digits = vec![0usize; n];
    for k in 0..total {
        decompose(k, sp.dim, &mut digits);
        let image = (0..n).fold(0, |acc, c| {
            let v =
                sp.a_part[digits[a_cycle.source(c, n)]] + sp.b_part[digits[b_cycle.source(c, n)]];
            acc * sp.dim + v
        });
        p[(image, k)] = ONE;
    }
    Ok(p)
}

fn decompose(mut k: usize, dim: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = k % dim;
        k /= dim;
    }
}

/// `Tr[P_A P_B (X_1 ⊗ ... ⊗ X_n)]` for cyclic permutations of the given
/// directions, evaluated entry by entry without forming the Kronecker product.
pub fn multicopy_trace(
    factors: &[&CMatrix],
    layout: &SiteLayout,
    partition: &PartitionSpec,
    a_cycle: Cycle,
    b_cycle: Cycle,
) -> Result<C64> {
    let n = factors.len();
    if n == 0 {
        return Err(Error::invalid("need at least one copy"));
    }
    let sp = split(layout, partition)?;
    for f in factors {
        if f.nrows() != sp.dim || f.ncols() != sp.dim {
            return Err(Error::invalid("factor shape does not match the layout"));
        }
    }
    let total = copy_space(sp.dim, n)?;
    let mut digits = vec![0usize; n];
    let mut acc = ZERO;
    for k in 0..total {
        decompose(k, sp.dim, &mut digits);
        let mut term = ONE;
        for (c, f) in factors.iter().enumerate() {
            // row index of copy c in the preimage of |k> under the permutation
            let j = sp.a_part[digits[a_cycle.inverse_source(c, n)]]
                + sp.b_part[digits[b_cycle.inverse_source(c, n)]];
            term *= f[(j, digits[c])];
            if term == ZERO {
                break;
            }
        }
        acc += term;
    }
    Ok(acc)
}

/// Real part of `Tr[Π→_A Π←_B X_1 ⊗ ... ⊗ X_n]`; equals `p_n` when every
/// factor is the same state.
pub fn multicopy_pt_moment_oracle(
    factors: &[&CMatrix],
    layout: &SiteLayout,
    partition: &PartitionSpec,
    n: usize,
) -> Result<f64> {
    if !(2..=4).contains(&n) {
        return Err(Error::UnsupportedOrder(n));
    }
    if factors.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} factors, got {}",
            factors.len()
        )));
    }
    Ok(multicopy_trace(factors, layout, partition, Cycle::Forward, Cycle::Backward)?.re)
}
