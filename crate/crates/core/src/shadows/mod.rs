//! Classical shadows of randomized-measurement data and U-statistic estimators
//! of trace moments.
//!
//! A snapshot of record `r` is the product of single-qubit factors
//! `3 u_i^dagger |k_i><k_i| u_i - I`, averaged over the record's `P` shots. The
//! estimators average kernels over distinct snapshots only, so every kernel
//! is an unbiased estimate of its target:
//!
//! * `p2 = Tr[(rho^{T_A})^2]`, kernel `Tr(X_i^{T_A} X_j^{T_A})`,
//! * `p3 = Tr[(rho^{T_A})^3]`, kernel `Re Tr(X_i^{T_A} X_j^{T_A} X_k^{T_A})`,
//! * `s3 = Tr(rho^3)`, the same without transposition,
//! * `p4`, averaged over all orderings of each 4-subset.
//!
//! For product snapshots each kernel factorises into 2x2 traces per qubit.

mod estimators;
mod record;
mod snapshot;
mod ustat;

pub use estimators::{
    estimate, estimate_p2, estimate_p3, estimate_pn, estimate_s3, estimate_value, estimate_with,
    estimate_with_replicates, jackknife_error, jackknife_spread, median_of_means,
    reconstruct_mean_state, Engine, Estimate, Method, Statistic,
};
pub use record::EstimateRecord;
pub use snapshot::{snapshot_from_record, snapshots_from_dataset, Snapshot};
