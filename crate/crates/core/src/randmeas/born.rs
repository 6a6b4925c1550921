use super::LocalUnitary;
use crate::linalg::{Mat2, C64, ZERO};
use crate::qstate::{reduced_density_matrix, PureState, StateRef};
use crate::{Error, Result};

/// Largest measured register for which the outcome distribution is built.
pub(crate) const MAX_MEASURED_QUBITS: usize = 20;

/// Outcome distribution on `sites` after applying `u` there.
///
/// Index `k` of the result is the bitstring with `sites[0]` as its most
/// significant bit. Sites outside the list are not measured (traced out).
pub fn born_probabilities<'a>(
    state: impl Into<StateRef<'a>>,
    u: &LocalUnitary,
    sites: &[usize],
) -> Result<Vec<f64>> {
    if u.len() != sites.len() {
        return Err(Error::invalid(format!(
            "{} unitary factors for {} sites",
            u.len(),
            sites.len()
        )));
    }
    if sites.len() > MAX_MEASURED_QUBITS {
        return Err(Error::resource(format!(
            "cannot tabulate 2^{} outcome probabilities",
            sites.len()
        )));
    }
    let state = state.into();
    let layout = state.layout();
    if layout.dims().iter().any(|&d| d != 2) {
        return Err(Error::invalid(
            "randomized measurements need a qubit register",
        ));
    }
    for s in sites {
        if layout.position(*s).is_none() {
            return Err(Error::invalid(format!("site {s} is not part of the state")));
        }
    }
    let mut probs = match state {
        StateRef::Pure(psi) if psi.dim() <= 1 << (2 * sites.len()) => pure_route(psi, u, sites),
        _ => mixed_route(state, u, sites)?,
    };
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p = (*p / total).max(0.0));
    Ok(probs)
}

/// Rotates the full state vector and marginalises onto `sites`.
fn pure_route(psi: &PureState, u: &LocalUnitary, sites: &[usize]) -> Vec<f64> {
    let n = psi.n_qubits();
    let mut amps = psi.amplitudes().to_vec();
    for (&site, g) in sites.iter().zip(u.factors()) {
        apply_single(&mut amps, n, site, g);
    }
    let k = sites.len();
    let mut probs = vec![0.0; 1 << k];
    for (x, a) in amps.iter().enumerate() {
        let idx = sites
            .iter()
            .fold(0, |acc, &s| (acc << 1) | ((x >> (n - s)) & 1));
        probs[idx] += a.norm_sqr();
    }
    probs
}

fn apply_single(amps: &mut [C64], n: usize, site: usize, g: &Mat2) {
    let mask = 1usize << (n - site);
    for x in 0..amps.len() {
        if x & mask == 0 {
            let (a0, a1) = (amps[x], amps[x | mask]);
            amps[x] = g.at(0, 0) * a0 + g.at(0, 1) * a1;
            amps[x | mask] = g.at(1, 0) * a0 + g.at(1, 1) * a1;
        }
    }
}

/// Reduces to `sites` first, then evaluates `diag(u rho u^dagger)`.
fn mixed_route(state: StateRef<'_>, u: &LocalUnitary, sites: &[usize]) -> Result<Vec<f64>> {
    let rho = reduced_density_matrix(state, sites)?;
    let k = sites.len();
    let d = 1usize << k;
    let mut m = rho.into_matrix();
    // rho <- (g ⊗ I) rho (g ⊗ I)^dagger, one qubit at a time
    for (pos, g) in u.factors().iter().enumerate() {
        let mask = 1usize << (k - 1 - pos);
        for c in 0..d {
            for r in 0..d {
                if r & mask == 0 {
                    let (x0, x1) = (m[(r, c)], m[(r | mask, c)]);
                    m[(r, c)] = g.at(0, 0) * x0 + g.at(0, 1) * x1;
                    m[(r | mask, c)] = g.at(1, 0) * x0 + g.at(1, 1) * x1;
                }
            }
        }
        let gc = g.adjoint();
        for r in 0..d {
            for c in 0..d {
                if c & mask == 0 {
                    let (x0, x1) = (m[(r, c)], m[(r, c | mask)]);
                    m[(r, c)] = x0 * gc.at(0, 0) + x1 * gc.at(1, 0);
                    m[(r, c | mask)] = x0 * gc.at(0, 1) + x1 * gc.at(1, 1);
                }
            }
        }
    }
    Ok((0..d)
        .map(|i| if m[(i, i)] == ZERO { 0.0 } else { m[(i, i)].re })
        .collect())
}
