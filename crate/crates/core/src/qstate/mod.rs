//! Exact dense simulation of small qubit (and qudit) systems.
//!
//! Basis convention: for `N` qubits the bitstring `k_1 ... k_N` is stored at
//! index `sum_i k_i 2^(N-i)`, so site 1 is the most significant bit. Sites are
//! labelled from 1 everywhere in the public API.

mod dynamics;
mod hamiltonian;
mod multicopy;
mod partial;
mod textio;

pub use dynamics::{evolve, ground_state, GroundState, Propagator};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, HamiltonianSpec, Model, MAX_QUBITS};
pub use multicopy::{
    cyclic_permutation_matrix, multicopy_pt_moment_oracle, multicopy_trace, Cycle, MAX_COPY_SPACE,
};
pub use partial::{
    depolarize, negativity, partial_trace, partial_transpose, pt_eigenvalues, pt_moments_exact,
    reduced_density_matrix, transpose_sites, StateRef, NEGATIVITY_CUTOFF,
};
pub use textio::{read_matrix_text, read_state_text, write_matrix_text, write_state_text};

use std::collections::BTreeSet;

use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, trace, CMatrix, C64, ONE, ZERO};
use crate::{Error, Result};

/// Normalised state vector of `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Wraps an amplitude vector, checking length and normalisation (1e-10).
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::invalid(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm {norm} differs from 1")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Normalises an arbitrary nonzero vector.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalise a zero vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(n_qubits, amplitudes)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes: amps,
        })
    }

    /// Tensor product of single-qubit states, site 1 first.
    pub fn product(local: &[[C64; 2]]) -> Result<Self> {
        let mut amps = vec![ONE];
        for q in local {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Self::normalized(local.len(), amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<psi|H|psi>` (real part).
    pub fn expectation(&self, h: &CMatrix) -> f64 {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        (v.adjoint() * h * &v)[(0, 0)].re
    }

    /// `|psi><psi|` over sites `1..=N`.
    pub fn to_density_matrix(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityMatrix {
            layout: SiteLayout::qubits(self.n_qubits),
            matrix: &v * v.adjoint(),
        }
    }
}

/// `(|0...0> + |1...1>)/sqrt(2)`.
pub fn make_ghz(n_qubits: usize) -> Result<PureState> {
    if n_qubits < 1 {
        return Err(Error::invalid("GHZ state needs at least one qubit"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::resource(format!(
            "{n_qubits} qubits exceeds the dense cap {MAX_QUBITS}"
        )));
    }
    let dim = 1usize << n_qubits;
    let mut amps = vec![ZERO; dim];
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = h;
    amps[dim - 1] = h;
    PureState::new(n_qubits, amps)
}

/// Néel product state `|0101...>` with spin up (`|0>`) on site 1.
pub fn make_neel(n_qubits: usize) -> Result<PureState> {
    if n_qubits < 1 {
        return Err(Error::invalid("Néel state needs at least one qubit"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::resource(format!(
            "{n_qubits} qubits exceeds the dense cap {MAX_QUBITS}"
        )));
    }
    let index = (0..n_qubits)
        .filter(|i| i % 2 == 1)
        .map(|i| 1usize << (n_qubits - 1 - i))
        .sum();
    PureState::basis(n_qubits, index)
}

/// Site labels and local dimensions of a dense operator. Position 0 is the
/// most significant tensor factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteLayout {
    sites: Vec<usize>,
    dims: Vec<usize>,
}

impl SiteLayout {
    pub fn new(sites: Vec<usize>, dims: Vec<usize>) -> Result<Self> {
        if sites.len() != dims.len() {
            return Err(Error::invalid("sites and dims must have equal length"));
        }
        if dims.iter().any(|&d| d < 1) {
            return Err(Error::invalid("local dimensions must be positive"));
        }
        let unique: BTreeSet<_> = sites.iter().collect();
        if unique.len() != sites.len() {
            return Err(Error::invalid("duplicate site labels"));
        }
        if sites.contains(&0) {
            return Err(Error::invalid("site labels start at 1"));
        }
        Ok(Self { sites, dims })
    }

    /// Sites `1..=n`, all of dimension 2.
    pub fn qubits(n: usize) -> Self {
        Self {
            sites: (1..=n).collect(),
            dims: vec![2; n],
        }
    }

    pub fn with_sites(sites: &[usize]) -> Result<Self> {
        Self::new(sites.to_vec(), vec![2; sites.len()])
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    /// Stride of each position in the flattened index.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }
}

/// Dense density operator with site labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SiteLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checks shape, Hermiticity (1e-10), unit trace (1e-10) and positivity
    /// (smallest eigenvalue >= -1e-9).
    pub fn new(layout: SiteLayout, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_parts_unchecked(layout, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked only; for operators that are not states (snapshots,
    /// partial transposes) or when the caller vouches for validity.
    pub fn from_parts_unchecked(layout: SiteLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, layout requires {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { layout, matrix })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = hermiticity_defect(&self.matrix);
        if herm > 1e-10 {
            return Err(Error::Validation(format!(
                "matrix not Hermitian (defect {herm:e})"
            )));
        }
        let tr = trace(&self.matrix);
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::Validation(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigenvalues(&self.matrix)[0];
        if min < -1e-9 {
            return Err(Error::Validation(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `I/d` over the given layout.
    pub fn maximally_mixed(layout: SiteLayout) -> Self {
        let d = layout.total_dim();
        let matrix = CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn sites(&self) -> &[usize] {
        self.layout.sites()
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        crate::linalg::trace_mul(&self.matrix, &self.matrix).re
    }

    /// `Tr(rho^n)` from the spectrum.
    pub fn trace_power(&self, n: u32) -> f64 {
        hermitian_eigenvalues(&self.matrix)
            .iter()
            .map(|l| l.powi(n as i32))
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Tensor product `self ⊗ other`; site labels must be disjoint.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut sites = self.layout.sites.clone();
        sites.extend_from_slice(&other.layout.sites);
        let mut dims = self.layout.dims.clone();
        dims.extend_from_slice(&other.layout.dims);
        let layout = SiteLayout::new(sites, dims)?;
        Ok(Self {
            layout,
            matrix: crate::linalg::kron(&self.matrix, &other.matrix),
        })
    }
}

/// Bipartition of a set of sites into `A` and `B`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PartitionSpec {
    #[serde(rename = "A")]
    a_sites: Vec<usize>,
    #[serde(rename = "B")]
    b_sites: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(a_sites: Vec<usize>, b_sites: Vec<usize>) -> Result<Self> {
        if a_sites.is_empty() || b_sites.is_empty() {
            return Err(Error::invalid("partitions A and B must be nonempty"));
        }
        if a_sites.iter().chain(&b_sites).any(|&s| s == 0) {
            return Err(Error::invalid("site labels start at 1"));
        }
        let a: BTreeSet<_> = a_sites.iter().collect();
        let b: BTreeSet<_> = b_sites.iter().collect();
        if a.len() != a_sites.len() || b.len() != b_sites.len() {
            return Err(Error::invalid("duplicate site within a partition"));
        }
        if a.intersection(&b).next().is_some() {
            return Err(Error::invalid("partitions A and B overlap"));
        }
        Ok(Self { a_sites, b_sites })
    }

    pub fn a_sites(&self) -> &[usize] {
        &self.a_sites
    }

    pub fn b_sites(&self) -> &[usize] {
        &self.b_sites
    }

    /// Sorted union `A ∪ B`.
    pub fn ab_sites(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.a_sites.iter().chain(&self.b_sites).copied().collect();
        s.sort_unstable();
        s
    }

    pub fn ab_size(&self) -> usize {
        self.a_sites.len() + self.b_sites.len()
    }

    pub fn contains_a(&self, site: usize) -> bool {
        self.a_sites.contains(&site)
    }

    /// The same sites with the roles of `A` and `B` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a_sites: self.b_sites.clone(),
            b_sites: self.a_sites.clone(),
        }
    }

    /// Errors unless every site of `A ∪ B` is at most `n_sites`.
    pub fn check_within(&self, n_sites: usize) -> Result<()> {
        match self
            .a_sites
            .iter()
            .chain(&self.b_sites)
            .find(|&&s| s > n_sites)
        {
            Some(s) => Err(Error::invalid(format!(
                "site {s} exceeds system size {n_sites}"
            ))),
            None => Ok(()),
        }
    }

    /// Errors unless `A ∪ B` equals the layout's site set.
    pub(crate) fn check_covers(&self, layout: &SiteLayout) -> Result<()> {
        let mut ours = self.ab_sites();
        let mut theirs = layout.sites().to_vec();
        ours.sort_unstable();
        theirs.sort_unstable();
        if ours != theirs {
            return Err(Error::invalid(format!(
                "partition covers sites {ours:?} but the operator acts on {theirs:?}"
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // runs of consecutive sites print as ranges: 1-3,7
        let join = |v: &[usize]| {
            let mut out = Vec::new();
            let mut i = 0;
            while i < v.len() {
                let mut j = i;
                while j + 1 < v.len() && v[j + 1] == v[j] + 1 {
                    j += 1;
                }
                out.push(if j > i {
                    format!("{}-{}", v[i], v[j])
                } else {
                    v[i].to_string()
                });
                i = j + 1;
            }
            out.join(",")
        };
        write!(f, "A={};B={}", join(&self.a_sites), join(&self.b_sites))
    }
}

/// Parses `A=1-3;B=7,9-10`: 1-based sites, inclusive ranges, comma lists.
impl std::str::FromStr for PartitionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::invalid(format!("partition {s:?}: {msg}"));
        let mut a = None;
        let mut b = None;
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, list) = part
                .split_once('=')
                .ok_or_else(|| bad("expected NAME=SITES"))?;
            let slot = match name.trim() {
                "A" => &mut a,
                "B" => &mut b,
                other => return Err(bad(&format!("unknown subsystem {other:?}"))),
            };
            if slot.is_some() {
                return Err(bad("subsystem given twice"));
            }
            *slot = Some(parse_site_list(list).map_err(|e| bad(&e))?);
        }
        match (a, b) {
            (Some(a), Some(b)) => PartitionSpec::new(a, b),
            _ => Err(bad("both A and B are required")),
        }
    }
}

fn parse_site_list(list: &str) -> std::result::Result<Vec<usize>, String> {
    let mut sites = Vec::new();
    for item in list.split(',').map(str::trim) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad site {t:?}"))
        };
        match item.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty range {item}"));
                }
                sites.extend(lo..=hi);
            }
            None => sites.push(num(item)?),
        }
    }
    Ok(sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_grammar() {
        let p: PartitionSpec = "A=1-3;B=7,9-10".parse().unwrap();
        assert_eq!(p.a_sites(), &[1, 2, 3]);
        assert_eq!(p.b_sites(), &[7, 9, 10]);
        assert_eq!(p.to_string().parse::<PartitionSpec>().unwrap(), p);
        for bad in [
            "A=1-3",
            "A=1;B=1",
            "A=3-1;B=4",
            "A=x;B=2",
            "C=1;A=2;B=3",
            "A=0;B=1",
        ] {
            assert!(bad.parse::<PartitionSpec>().is_err(), "{bad}");
        }
    }
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn ghz_amplitudes() {
        let g = make_ghz(2).unwrap();
        assert!((g.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g.amplitudes()[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(g.amplitudes()[1], ZERO);
        let g1 = make_ghz(1).unwrap();
        assert!((g1.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((make_ghz(4).unwrap().to_density_matrix().purity() - 1.0).abs() < 1e-12);
        assert!(matches!(make_ghz(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn neel_indices() {
        assert_eq!(make_neel(2).unwrap(), PureState::basis(2, 0b01).unwrap());
        assert_eq!(make_neel(3).unwrap(), PureState::basis(3, 0b010).unwrap());
        assert_eq!(make_neel(4).unwrap(), PureState::basis(4, 0b0101).unwrap());
        assert!(make_neel(0).is_err());
    }

    #[test]
    fn neel_reduced_states_are_pure() {
        let s = make_neel(5).unwrap();
        for sites in [vec![1], vec![2, 4], vec![1, 3, 5], vec![5, 2]] {
            let r = reduced_density_matrix(&s, &sites).unwrap();
            assert!((r.purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_validation() {
        assert!(PartitionSpec::new(vec![], vec![1]).is_err());
        assert!(PartitionSpec::new(vec![1, 2], vec![2]).is_err());
        assert!(PartitionSpec::new(vec![0], vec![2]).is_err());
        let p = PartitionSpec::new(vec![1, 3], vec![7, 9]).unwrap();
        assert_eq!(p.ab_sites(), vec![1, 3, 7, 9]);
        assert_eq!(p.to_string(), "A=1,3;B=7,9");
        assert!(p.check_within(8).is_err());
        let q = PartitionSpec::new(vec![1, 2, 3], vec![7, 9, 10]).unwrap();
        assert_eq!(q.to_string(), "A=1-3;B=7,9-10");
    }

    #[test]
    fn density_matrix_validation() {
        let layout = SiteLayout::qubits(1);
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(layout.clone(), bad_trace).is_err());
        let negative = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.5, 0.0),
            C64::new(-0.5, 0.0),
        ]));
        assert!(DensityMatrix::new(layout.clone(), negative).is_err());
        assert!(DensityMatrix::new(layout, CMatrix::identity(3, 3)).is_err());
    }
}
