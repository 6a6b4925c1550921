use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::born::{born_probabilities, MAX_MEASURED_QUBITS};
use super::clifford::{sample_haar_su2, sample_single_qubit_clifford};
use crate::linalg::Mat2;
use crate::qstate::{reduced_density_matrix, StateRef};
use crate::{Error, Result};

/// Ensemble the local unitaries were drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Uniform over the 24-element single-qubit Clifford group.
    #[default]
    Clifford,
    /// Haar measure on U(2).
    Haar,
    /// Unitaries supplied by an external source (e.g. experimental records).
    External,
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensemble::Clifford => "clifford",
            Ensemble::Haar => "haar",
            Ensemble::External => "external",
        })
    }
}

impl std::str::FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clifford" => Ok(Ensemble::Clifford),
            "haar" => Ok(Ensemble::Haar),
            "external" => Ok(Ensemble::External),
            other => Err(Error::invalid(format!("unknown ensemble `{other}`"))),
        }
    }
}

/// Product unitary `u_1 ⊗ ... ⊗ u_k`, one factor per measured site.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary(Vec<Mat2>);

impl LocalUnitary {
    /// Every factor must be unitary within 1e-10.
    pub fn new(factors: Vec<Mat2>) -> Result<Self> {
        Self::with_tolerance(factors, 1e-10)
    }

    pub(crate) fn with_tolerance(factors: Vec<Mat2>, tol: f64) -> Result<Self> {
        if let Some((i, f)) = factors
            .iter()
            .enumerate()
            .find(|(_, f)| f.unitarity_defect() > tol)
        {
            return Err(Error::Validation(format!(
                "factor {i} is not unitary (defect {:e})",
                f.unitarity_defect()
            )));
        }
        Ok(Self(factors))
    }

    pub fn factors(&self) -> &[Mat2] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One random unitary and the `P` outcomes recorded after applying it.
///
/// Outcomes are stored as integers whose most significant of `k` bits belongs
/// to the first measured site.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub unitary: LocalUnitary,
    pub outcomes: Vec<u32>,
}

impl MeasurementRecord {
    /// Outcome bit of measured position `pos` in shot `shot`.
    #[inline]
    pub fn bit(&self, shot: usize, pos: usize) -> u8 {
        let k = self.unitary.len();
        ((self.outcomes[shot] >> (k - 1 - pos)) & 1) as u8
    }

    /// Shot `shot` as a `'0'`/`'1'` string, first measured site first.
    pub fn bitstring(&self, shot: usize) -> String {
        (0..self.unitary.len())
            .map(|p| if self.bit(shot, p) == 0 { '0' } else { '1' })
            .collect()
    }
}

/// `M` measurement records on an ordered list of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementDataset {
    pub n_sites: usize,
    pub sites: Vec<usize>,
    pub ensemble: Ensemble,
    pub seed: u64,
    /// Shots per unitary.
    pub p: usize,
    pub records: Vec<MeasurementRecord>,
}

impl MeasurementDataset {
    pub fn m(&self) -> usize {
        self.records.len()
    }

    /// Checks the structural invariants shared by generated and parsed data.
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Validation("dataset has no records".into()));
        }
        if self.p == 0 {
            return Err(Error::Validation(
                "dataset needs at least one shot per unitary".into(),
            ));
        }
        if self.sites.is_empty() || self.sites.len() > MAX_MEASURED_QUBITS {
            return Err(Error::Validation(format!(
                "bad measured-site count {}",
                self.sites.len()
            )));
        }
        if let Some(s) = self.sites.iter().find(|&&s| s == 0 || s > self.n_sites) {
            return Err(Error::Validation(format!(
                "site {s} outside 1..={}",
                self.n_sites
            )));
        }
        let k = self.sites.len();
        for (r, rec) in self.records.iter().enumerate() {
            if rec.unitary.len() != k {
                return Err(Error::Validation(format!(
                    "record {r}: {} unitary factors",
                    rec.unitary.len()
                )));
            }
            if rec.outcomes.len() != self.p {
                return Err(Error::Validation(format!(
                    "record {r}: {} outcomes",
                    rec.outcomes.len()
                )));
            }
            if rec.outcomes.iter().any(|&o| (o as u64) >> k != 0) {
                return Err(Error::Validation(format!(
                    "record {r}: outcome wider than {k} bits"
                )));
            }
        }
        Ok(())
    }
}

/// The random stream owned by record `record` of a dataset seeded with `seed`.
pub fn record_rng(seed: u64, record: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for a labelled sub-task (a time step, a trial, ...) of a run
/// with seed `master`. Distinct tag sequences give unrelated seeds.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ t))
}

/// Simulates `m` randomized measurements with `p` shots each on `sites`.
pub fn generate_dataset<'a>(
    state: impl Into<StateRef<'a>>,
    sites: &[usize],
    m: usize,
    p: usize,
    ensemble: Ensemble,
    seed: u64,
) -> Result<MeasurementDataset> {
    if m < 1 || p < 1 {
        return Err(Error::invalid("need m >= 1 unitaries and p >= 1 shots"));
    }
    if sites.is_empty() {
        return Err(Error::invalid("no sites to measure"));
    }
    if sites.len() > MAX_MEASURED_QUBITS {
        return Err(Error::resource(format!(
            "cannot tabulate 2^{} outcome probabilities",
            sites.len()
        )));
    }
    if ensemble == Ensemble::External {
        return Err(Error::invalid("cannot sample from the external ensemble"));
    }
    let state = state.into();
    let n_sites = state.layout().sites().iter().copied().max().unwrap_or(0);

    // A pure state is rotated directly when its vector is no larger than the
    // reduced density matrix; otherwise reduce once up front.
    let reduced;
    let (source, measured): (StateRef<'_>, Vec<usize>) = match state {
        StateRef::Pure(psi) if psi.dim() <= 1 << (2 * sites.len()) => (state, sites.to_vec()),
        _ => {
            reduced = reduced_density_matrix(state, sites)?;
            (StateRef::Mixed(&reduced), sites.to_vec())
        }
    };

    let records = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut rng = record_rng(seed, r);
            let factors: Vec<Mat2> = (0..measured.len())
                .map(|_| match ensemble {
                    Ensemble::Haar => sample_haar_su2(&mut rng),
                    _ => sample_single_qubit_clifford(&mut rng),
                })
                .collect();
            let unitary = LocalUnitary(factors);
            let probs = born_probabilities(source, &unitary, &measured)?;
            let outcomes = sample_outcomes(&probs, p, &mut rng);
            Ok(MeasurementRecord { unitary, outcomes })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MeasurementDataset {
        n_sites,
        sites: sites.to_vec(),
        ensemble,
        seed,
        p,
        records,
    })
}

fn sample_outcomes<R: Rng>(probs: &[f64], shots: usize, rng: &mut R) -> Vec<u32> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    (0..shots)
        .map(|_| {
            let x: f64 = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= x).min(last) as u32
        })
        .collect()
}
