//! Moments of the partially transposed density matrix from local randomized
//! measurements.
//!
//! The crate is organised bottom-up:
//!
//! * [`qstate`]: dense state preparation, spin-chain dynamics, partial traces and
//!   transposes, and exact PT-moment oracles.
//! * [`randmeas`]: local random unitaries (single-qubit Clifford group or Haar),
//!   Born-rule sampling and the line-delimited dataset format.
//! * [`shadows`]: classical-shadow snapshots and U-statistic estimators of
//!   `p2`, `p3`, `Tr(rho^3)` and `p4`, with jackknife and median-of-means errors.
//! * [`entcond`]: the `p3`-PPT test and related moment conditions, Schatten norms
//!   and closed-form Werner-state analytics.
//! * [`bounds`]: variance bounds, sample-size calculators and Monte Carlo error
//!   scaling sweeps.

pub mod bounds;
pub mod entcond;
mod error;
pub mod linalg;
pub mod qstate;
pub mod randmeas;
pub mod shadows;
pub mod stats;

pub use error::{Error, Result};
