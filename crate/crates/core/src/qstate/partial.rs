use nalgebra::DMatrix;

use super::{DensityMatrix, PartitionSpec, PureState, SiteLayout};
use crate::linalg::{hermitian_eigenvalues, CMatrix, C64};
use crate::{Error, Result};

/// Eigenvalues of the partial transpose above `-NEGATIVITY_CUTOFF` count as
/// nonnegative.
pub const NEGATIVITY_CUTOFF: f64 = 1e-10;

/// Borrowed view of either kind of state.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(s: &'a PureState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(s: &'a DensityMatrix) -> Self {
        StateRef::Mixed(s)
    }
}

impl StateRef<'_> {
    pub fn layout(&self) -> SiteLayout {
        match self {
            StateRef::Pure(p) => SiteLayout::qubits(p.n_qubits()),
            StateRef::Mixed(m) => m.layout().clone(),
        }
    }
}

/// Reduced state on `sites`, with tensor factors in the order given.
pub fn reduced_density_matrix<'a>(
    state: impl Into<StateRef<'a>>,
    sites: &[usize],
) -> Result<DensityMatrix> {
    if sites.is_empty() {
        return Err(Error::invalid("site list for the reduced state is empty"));
    }
    match state.into() {
        StateRef::Pure(psi) => reduce_pure(psi, sites),
        StateRef::Mixed(rho) => reduce_mixed(rho, sites),
    }
}

/// Traces out `traced` and keeps the remaining sites in their current order.
/// Tracing every site yields the 1x1 matrix `[Tr rho]`.
pub fn partial_trace(rho: &DensityMatrix, traced: &[usize]) -> Result<DensityMatrix> {
    for s in traced {
        if rho.layout().position(*s).is_none() {
            return Err(Error::invalid(format!("site {s} is not part of the state")));
        }
    }
    let keep: Vec<usize> = rho
        .sites()
        .iter()
        .copied()
        .filter(|s| !traced.contains(s))
        .collect();
    if keep.is_empty() {
        let tr = crate::linalg::trace(rho.matrix());
        let layout = SiteLayout::new(vec![], vec![])?;
        return DensityMatrix::from_parts_unchecked(layout, CMatrix::from_element(1, 1, tr));
    }
    reduce_mixed(rho, &keep)
}

fn check_sites(layout: &SiteLayout, sites: &[usize]) -> Result<Vec<usize>> {
    let mut positions = Vec::with_capacity(sites.len());
    for (i, s) in sites.iter().enumerate() {
        if sites[..i].contains(s) {
            return Err(Error::invalid(format!("site {s} listed twice")));
        }
        let p = layout
            .position(*s)
            .ok_or_else(|| Error::invalid(format!("site {s} is not part of the state")))?;
        positions.push(p);
    }
    Ok(positions)
}

fn reduce_pure(psi: &PureState, sites: &[usize]) -> Result<DensityMatrix> {
    let n = psi.n_qubits();
    let layout = SiteLayout::qubits(n);
    let keep = check_sites(&layout, sites)?;
    let env: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let (dk, de) = (1usize << keep.len(), 1usize << env.len());
    let mut psi_mat = DMatrix::<C64>::zeros(dk, de);
    for (x, amp) in psi.amplitudes().iter().enumerate() {
        let bit = |p: usize| (x >> (n - 1 - p)) & 1;
        let ki = keep.iter().fold(0, |acc, &p| (acc << 1) | bit(p));
        let ei = env.iter().fold(0, |acc, &p| (acc << 1) | bit(p));
        psi_mat[(ki, ei)] = *amp;
    }
    let rho = &psi_mat * psi_mat.adjoint();
    DensityMatrix::from_parts_unchecked(SiteLayout::with_sites(sites)?, rho)
}

fn reduce_mixed(rho: &DensityMatrix, sites: &[usize]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    let keep = check_sites(layout, sites)?;
    let dims = layout.dims();
    let env: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&p| dims[p]).collect();
    let dk: usize = keep_dims.iter().product();
    let de: usize = env.iter().map(|&p| dims[p]).product();
    let strides = layout.strides();

    // full index of (keep index, env index)
    let digits_to_full = |ki: usize, ei: usize| -> usize {
        let mut full = 0;
        let mut rem = ki;
        for &p in keep.iter().rev() {
            full += (rem % dims[p]) * strides[p];
            rem /= dims[p];
        }
        let mut rem = ei;
        for &p in env.iter().rev() {
            full += (rem % dims[p]) * strides[p];
            rem /= dims[p];
        }
        full
    };

    let m = rho.matrix();
    let mut out = CMatrix::zeros(dk, dk);
    let mut rows = vec![0usize; dk];
    for e in 0..de {
        for (k, r) in rows.iter_mut().enumerate() {
            *r = digits_to_full(k, e);
        }
        for i in 0..dk {
            for j in 0..dk {
                out[(i, j)] += m[(rows[i], rows[j])];
            }
        }
    }
    let layout = SiteLayout::new(sites.to_vec(), keep_dims)?;
    DensityMatrix::from_parts_unchecked(layout, out)
}

/// Transposes the tensor factors at `sites` of an operator with the given
/// layout.
pub fn transpose_sites(m: &CMatrix, layout: &SiteLayout, sites: &[usize]) -> Result<CMatrix> {
    let positions = check_sites(layout, sites)?;
    let dims = layout.dims();
    let strides = layout.strides();
    let d = layout.total_dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::invalid("operator shape does not match its layout"));
    }
    let mut out = CMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let (mut r2, mut c2) = (r, c);
            for &p in &positions {
                let dr = (r / strides[p]) % dims[p];
                let dc = (c / strides[p]) % dims[p];
                r2 = r2 - dr * strides[p] + dc * strides[p];
                c2 = c2 - dc * strides[p] + dr * strides[p];
            }
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// `rho^{T_A}`. The partition must cover exactly the sites of `rho`. The
/// result is Hermitian with unit trace but in general not positive.
pub fn partial_transpose(rho: &DensityMatrix, partition: &PartitionSpec) -> Result<CMatrix> {
    partition.check_covers(rho.layout())?;
    transpose_sites(rho.matrix(), rho.layout(), partition.a_sites())
}

/// Spectrum of `rho^{T_A}`, ascending.
pub fn pt_eigenvalues(rho: &DensityMatrix, partition: &PartitionSpec) -> Result<Vec<f64>> {
    Ok(hermitian_eigenvalues(&partial_transpose(rho, partition)?))
}

/// `[p_1, ..., p_{n_max}]` with `p_n = Tr[(rho^{T_A})^n]`.
pub fn pt_moments_exact(
    rho: &DensityMatrix,
    partition: &PartitionSpec,
    n_max: usize,
) -> Result<Vec<f64>> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let ev = pt_eigenvalues(rho, partition)?;
    Ok((1..=n_max as i32)
        .map(|n| ev.iter().map(|l| l.powi(n)).sum())
        .collect())
}

/// Sum of `|lambda|` over eigenvalues of `rho^{T_A}` below `-NEGATIVITY_CUTOFF`.
pub fn negativity(rho: &DensityMatrix, partition: &PartitionSpec) -> Result<f64> {
    Ok(pt_eigenvalues(rho, partition)?
        .iter()
        .filter(|&&l| l < -NEGATIVITY_CUTOFF)
        .map(|l| -l)
        .sum())
}

/// `(1 - s) rho + s I/d`.
pub fn depolarize(rho: &DensityMatrix, strength: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::invalid(format!(
            "depolarizing strength {strength} outside [0, 1]"
        )));
    }
    let d = rho.dim();
    let mixed = CMatrix::identity(d, d) * C64::new(strength / d as f64, 0.0);
    let m = rho.matrix() * C64::new(1.0 - strength, 0.0) + mixed;
    DensityMatrix::from_parts_unchecked(rho.layout().clone(), m)
}
