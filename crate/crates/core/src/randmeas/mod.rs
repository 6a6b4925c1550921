//! Local random unitaries, Born-rule measurement simulation and measurement
//! datasets.
//!
//! Each record of a dataset holds one product unitary `u_1 ⊗ ... ⊗ u_|AB|`
//! drawn from a single-qubit 3-design and `P` computational-basis outcomes
//! sampled after applying it. Record `r` draws all of its randomness from a
//! ChaCha8 stream selected by `(seed, r)`, so any record can be regenerated
//! on its own and generation order does not matter.

mod born;
mod clifford;
mod dataset;
mod io;

pub use born::born_probabilities;
pub use clifford::{clifford_group, sample_haar_su2, sample_single_qubit_clifford};
pub use dataset::{
    derive_seed, generate_dataset, record_rng, Ensemble, LocalUnitary, MeasurementDataset,
    MeasurementRecord,
};
pub use io::{read_dataset, read_dataset_file, write_dataset, write_dataset_file, DATASET_VERSION};
