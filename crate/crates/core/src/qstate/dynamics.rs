use nalgebra::{DMatrix, DVector};

use super::{Hamiltonian, PureState};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::{Error, Result};

/// Spectral decomposition of one invariant block of a Hamiltonian.
#[derive(Clone, Debug)]
struct Block {
    /// Basis indices spanned by the block, ascending.
    indices: Vec<usize>,
    energies: Vec<f64>,
    /// Columns are eigenvectors in the block's local basis.
    vectors: CMatrix,
}

/// Eigendecomposition of a Hamiltonian, reusable across evolution times.
///
/// The matrix is first split into the connected components of its nonzero
/// pattern (the magnetisation sectors of the XY chain, the parity sectors of
/// the Ising chain) and each block is diagonalised densely.
#[derive(Clone, Debug)]
pub struct Propagator {
    dim: usize,
    blocks: Vec<Block>,
}

impl Propagator {
    pub fn new(h: &Hamiltonian) -> Self {
        let m = h.matrix();
        let dim = m.nrows();
        let blocks = invariant_blocks(m)
            .into_iter()
            .map(|indices| diagonalize_block(m, indices))
            .collect();
        Self { dim, blocks }
    }

    /// `exp(-i H t) |psi>`.
    pub fn evolve(&self, state: &PureState, t: f64) -> Result<PureState> {
        if state.dim() != self.dim {
            return Err(Error::invalid(format!(
                "state dimension {} does not match Hamiltonian dimension {}",
                state.dim(),
                self.dim
            )));
        }
        if !t.is_finite() || t < 0.0 {
            return Err(Error::invalid(format!(
                "evolution time must be finite and >= 0, got {t}"
            )));
        }
        let amps = state.amplitudes();
        let mut out = vec![ZERO; self.dim];
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| amps[i]));
            if local.iter().all(|z| *z == ZERO) {
                continue;
            }
            let mut coeff = b.vectors.adjoint() * local;
            for (c, e) in coeff.iter_mut().zip(&b.energies) {
                *c *= C64::from_polar(1.0, -e * t);
            }
            let back = &b.vectors * coeff;
            for (k, &i) in b.indices.iter().enumerate() {
                out[i] = back[k];
            }
        }
        PureState::normalized(state.n_qubits(), out)
    }

    /// All eigenvalues, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.energies.iter().copied())
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Connected components of the graph with an edge wherever `m[(i, j)] != 0`.
fn invariant_blocks(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

fn diagonalize_block(m: &CMatrix, indices: Vec<usize>) -> Block {
    let k = indices.len();
    let sub = CMatrix::from_fn(k, k, |r, c| m[(indices[r], indices[c])]);
    let (energies, vectors) = if sub.iter().all(|z| z.im == 0.0) {
        let real = DMatrix::<f64>::from_fn(k, k, |r, c| sub[(r, c)].re);
        let eig = real.symmetric_eigen();
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let eig = sub.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    Block {
        indices,
        energies,
        vectors,
    }
}

/// `exp(-i H t)|psi>` via a one-off eigendecomposition of `h`.
pub fn evolve(state: &PureState, h: &Hamiltonian, t: f64) -> Result<PureState> {
    Propagator::new(h).evolve(state, t)
}

/// Lowest eigenvector of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: PureState,
    pub energy: f64,
    /// Set when the spectral gap above the ground energy is below 1e-10; the
    /// returned vector is then one element of a degenerate ground space.
    pub degenerate: bool,
}

/// Normalised eigenvector of the smallest eigenvalue, with the phase fixed so
/// that the first nonzero amplitude is real and positive.
pub fn ground_state(h: &Hamiltonian) -> Result<GroundState> {
    let m = h.matrix();
    let dim = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let g = order[0];
    let energy = eig.eigenvalues[g];
    let degenerate = dim > 1 && eig.eigenvalues[order[1]] - energy < 1e-10;
    let mut amps: Vec<C64> = eig.eigenvectors.column(g).iter().copied().collect();
    if let Some(first) = amps.iter().find(|a| a.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        amps.iter_mut().for_each(|a| *a *= phase);
    }
    let state = PureState::normalized(h.n_qubits(), amps)?;
    Ok(GroundState {
        state,
        energy,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;
    use crate::qstate::{build_hamiltonian, make_neel, HamiltonianSpec};

    /// Classical fixed-step RK4 on `d psi/dt = -i H psi`.
    fn rk4(h: &CMatrix, psi: &PureState, t: f64, dt: f64) -> Vec<C64> {
        let mi = C64::new(0.0, -1.0);
        let f = |v: &DVector<C64>| (h * v) * mi;
        let mut v = DVector::from_column_slice(psi.amplitudes());
        let steps = (t / dt).round() as usize;
        for _ in 0..steps {
            let k1 = f(&v);
            let k2 = f(&(&v + &k1 * C64::new(dt / 2.0, 0.0)));
            let k3 = f(&(&v + &k2 * C64::new(dt / 2.0, 0.0)));
            let k4 = f(&(&v + &k3 * C64::new(dt, 0.0)));
            v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(dt / 6.0, 0.0);
        }
        v.iter().copied().collect()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = build_hamiltonian(&HamiltonianSpec::xy(4, 420.0, 1.24, 0.0)).unwrap();
        let psi = make_neel(4).unwrap();
        let out = evolve(&psi, &h, 0.0).unwrap();
        assert!((out.inner(&psi).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn neel_quench_matches_rk4() {
        let h = build_hamiltonian(&HamiltonianSpec::xy(4, 420.0, 1.24, 0.0)).unwrap();
        let psi = make_neel(4).unwrap();
        let exact = evolve(&psi, &h, 1e-3).unwrap();
        let reference = PureState::normalized(4, rk4(h.matrix(), &psi, 1e-3, 1e-6)).unwrap();
        let deficit = 1.0 - exact.inner(&reference).norm_sqr();
        assert!(deficit < 1e-6, "overlap deficit {deficit}");
    }

    #[test]
    fn norm_and_energy_conserved() {
        let h = build_hamiltonian(&HamiltonianSpec::xy(6, 420.0, 1.24, 50.0)).unwrap();
        let psi = PureState::normalized(
            6,
            (0..64)
                .map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
                .collect(),
        )
        .unwrap();
        let prop = Propagator::new(&h);
        let e0 = psi.expectation(h.matrix());
        for t in [1e-4, 1e-3, 5e-3] {
            let out = prop.evolve(&psi, t).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-9);
            assert!((out.expectation(h.matrix()) - e0).abs() < 1e-8 * e0.abs().max(1.0));
        }
        assert!(prop.evolve(&make_neel(5).unwrap(), 1.0).is_err());
        assert!(prop.evolve(&psi, -1.0).is_err());
    }

    #[test]
    fn block_spectrum_matches_full() {
        let h = build_hamiltonian(&HamiltonianSpec::tfim(5, 1.0)).unwrap();
        let a = Propagator::new(&h).energies();
        let b = hermitian_eigenvalues(h.matrix());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn diagonal_ground_state() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(
            [-1.0, 0.0, 0.0, 1.0]
                .iter()
                .map(|&x| C64::new(x, 0.0))
                .collect(),
        ));
        let h = Hamiltonian::from_matrix(2, m).unwrap();
        let g = ground_state(&h).unwrap();
        assert_eq!(g.state, PureState::basis(2, 0).unwrap());
        assert!(!g.degenerate);
        assert_eq!(g.energy, -1.0);
    }

    #[test]
    fn tfim_ground_state_residual_and_phase() {
        let h = build_hamiltonian(&HamiltonianSpec::tfim(2, 1.0)).unwrap();
        let g = ground_state(&h).unwrap();
        assert!((g.energy + 5f64.sqrt()).abs() < 1e-12);
        let v = DVector::from_column_slice(g.state.amplitudes());
        let residual = (h.matrix() * &v - &v * C64::new(g.energy, 0.0)).norm();
        assert!(residual < 1e-9);
        let first = g
            .state
            .amplitudes()
            .iter()
            .find(|a| a.norm() > 1e-12)
            .unwrap();
        assert!(first.im.abs() < 1e-15 && first.re > 0.0);
    }

    #[test]
    fn degenerate_ground_space_is_flagged() {
        let h = Hamiltonian::from_matrix(1, CMatrix::identity(2, 2)).unwrap();
        assert!(ground_state(&h).unwrap().degenerate);
    }
}
