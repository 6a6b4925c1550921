use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

/// Hard cap on the number of qubits of any dense simulation.
pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Long-range XY chain, `J_ij = j0 / |i-j|^alpha`.
    Xy,
    /// Open transverse-field Ising chain.
    Tfim,
}

/// Parameters of the spin-chain Hamiltonians.
///
/// * `Xy`: `H = sum_{i<j} J_ij (s+_i s-_j + s-_i s+_j) + b_field sum_i Z_i`, in
///   units of 1/s (hbar divided out).
/// * `Tfim`: `H = j_tfim (sum_i X_i X_{i+1} + b_field sum_i Z_i)`, dimensionless;
///   `b_field = 1` is the critical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub model: Model,
    pub n_qubits: usize,
    #[serde(default)]
    pub j0: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub b_field: f64,
    #[serde(default = "default_j_tfim")]
    pub j_tfim: f64,
}

fn default_j_tfim() -> f64 {
    1.0
}

impl HamiltonianSpec {
    pub fn xy(n_qubits: usize, j0: f64, alpha: f64, b_field: f64) -> Self {
        Self {
            model: Model::Xy,
            n_qubits,
            j0,
            alpha,
            b_field,
            j_tfim: 0.0,
        }
    }

    /// Critical transverse-field Ising chain with overall scale `j`.
    pub fn tfim(n_qubits: usize, j: f64) -> Self {
        Self {
            model: Model::Tfim,
            n_qubits,
            j0: 0.0,
            alpha: 0.0,
            b_field: 1.0,
            j_tfim: j,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::invalid("a spin chain needs at least 2 qubits"));
        }
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::resource(format!(
                "{} qubits exceeds the dense cap {MAX_QUBITS}",
                self.n_qubits
            )));
        }
        if self.model == Model::Xy && !(self.j0 > 0.0) {
            return Err(Error::invalid("XY coupling j0 must be positive"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid(
                "power-law exponent alpha must be nonnegative",
            ));
        }
        if !self.b_field.is_finite() || !self.j_tfim.is_finite() {
            return Err(Error::invalid("non-finite field or coupling"));
        }
        Ok(())
    }

    /// `J_ij` of the XY model for 1-based sites `i != j`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let dist = i.abs_diff(j) as f64;
        self.j0 / dist.powf(self.alpha)
    }
}

/// Dense Hermitian Hamiltonian in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    matrix: CMatrix,
}

impl Hamiltonian {
    pub fn from_matrix(n_qubits: usize, matrix: CMatrix) -> Result<Self> {
        let d = 1usize << n_qubits;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::invalid(
                "Hamiltonian shape does not match the qubit count",
            ));
        }
        if crate::linalg::hermiticity_defect(&matrix) > 1e-10 {
            return Err(Error::invalid("Hamiltonian is not Hermitian"));
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Builds the dense Hamiltonian for `spec`.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<Hamiltonian> {
    spec.validate()?;
    let n = spec.n_qubits;
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    // bit of 1-based site s in basis index x
    let mask = |s: usize| 1usize << (n - s);
    let z = |x: usize, s: usize| if x & mask(s) == 0 { 1.0 } else { -1.0 };

    match spec.model {
        Model::Xy => {
            for x in 0..dim {
                let diag: f64 = (1..=n).map(|s| spec.b_field * z(x, s)).sum();
                h[(x, x)] += C64::new(diag, 0.0);
                for i in 1..=n {
                    for j in i + 1..=n {
                        // hopping only between anti-aligned spins
                        if (x & mask(i) == 0) != (x & mask(j) == 0) {
                            let y = x ^ mask(i) ^ mask(j);
                            h[(y, x)] += C64::new(spec.coupling(i, j), 0.0);
                        }
                    }
                }
            }
        }
        Model::Tfim => {
            for x in 0..dim {
                let diag: f64 = (1..=n).map(|s| z(x, s)).sum::<f64>() * spec.b_field;
                h[(x, x)] += C64::new(spec.j_tfim * diag, 0.0);
                for i in 1..n {
                    let y = x ^ mask(i) ^ mask(i + 1);
                    h[(y, x)] += C64::new(spec.j_tfim, 0.0);
                }
            }
        }
    }
    Hamiltonian::from_matrix(n, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, kron, CMatrix};

    fn pauli(which: char) -> CMatrix {
        let m = match which {
            'x' => crate::linalg::gates::pauli_x(),
            'y' => crate::linalg::gates::pauli_y(),
            'z' => crate::linalg::gates::pauli_z(),
            _ => crate::linalg::Mat2::IDENTITY,
        };
        m.to_dense()
    }

    /// Kronecker-product construction from Pauli strings.
    fn pauli_string(n: usize, ops: &[(usize, char)]) -> CMatrix {
        let mut out = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for s in 1..=n {
            let op = ops
                .iter()
                .find(|(site, _)| *site == s)
                .map(|(_, c)| *c)
                .unwrap_or('i');
            out = kron(&out, &pauli(op));
        }
        out
    }

    #[test]
    fn xy_two_sites() {
        let h = build_hamiltonian(&HamiltonianSpec::xy(2, 1.0, 1.24, 0.0)).unwrap();
        let m = h.matrix();
        assert_eq!(m[(1, 2)], C64::new(1.0, 0.0));
        assert_eq!(m[(2, 1)], C64::new(1.0, 0.0));
        for i in 0..4 {
            assert_eq!(m[(i, i)], C64::new(0.0, 0.0));
        }
        assert_eq!(m[(0, 3)], C64::new(0.0, 0.0));
    }

    #[test]
    fn xy_matches_pauli_construction() {
        let spec = HamiltonianSpec::xy(4, 420.0, 1.24, 3.0);
        let h = build_hamiltonian(&spec).unwrap();
        let mut dense = CMatrix::zeros(16, 16);
        for i in 1..=4 {
            for j in i + 1..=4 {
                let c = C64::new(spec.coupling(i, j) / 2.0, 0.0);
                dense += (pauli_string(4, &[(i, 'x'), (j, 'x')])
                    + pauli_string(4, &[(i, 'y'), (j, 'y')]))
                    * c;
            }
            dense += pauli_string(4, &[(i, 'z')]) * C64::new(3.0, 0.0);
        }
        assert!((h.matrix() - dense).norm() < 1e-10);
    }

    #[test]
    fn xy_is_real_symmetric_and_conserves_magnetization() {
        let h = build_hamiltonian(&HamiltonianSpec::xy(5, 420.0, 1.24, 2.0)).unwrap();
        let m = h.matrix();
        assert!(m.iter().all(|z| z.im == 0.0));
        assert!((m - m.transpose()).norm() < 1e-12);
        let mut sz = CMatrix::zeros(32, 32);
        for s in 1..=5 {
            sz += pauli_string(5, &[(s, 'z')]);
        }
        assert!((m * &sz - &sz * m).norm() < 1e-10);
    }

    #[test]
    fn tfim_spectrum_matches_pauli_construction() {
        let h = build_hamiltonian(&HamiltonianSpec::tfim(2, 1.0)).unwrap();
        let dense = pauli_string(2, &[(1, 'x'), (2, 'x')])
            + pauli_string(2, &[(1, 'z')])
            + pauli_string(2, &[(2, 'z')]);
        let a = hermitian_eigenvalues(h.matrix());
        let b = hermitian_eigenvalues(&dense);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        // closed form for two sites: +-1 and +-sqrt(5)
        let expected = [-(5f64.sqrt()), -1.0, 1.0, 5f64.sqrt()];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            build_hamiltonian(&HamiltonianSpec::xy(15, 1.0, 1.0, 0.0)),
            Err(Error::ResourceLimit(_))
        ));
        assert!(build_hamiltonian(&HamiltonianSpec::xy(1, 1.0, 1.0, 0.0)).is_err());
        assert!(build_hamiltonian(&HamiltonianSpec::xy(3, 0.0, 1.0, 0.0)).is_err());
        assert!(build_hamiltonian(&HamiltonianSpec::xy(3, 1.0, -1.0, 0.0)).is_err());
    }
}
