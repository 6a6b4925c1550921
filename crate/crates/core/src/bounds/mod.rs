//! Error bounds for the moment estimators and a Monte Carlo harness that
//! measures actual estimation errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qstate::{pt_moments_exact, reduced_density_matrix, PartitionSpec, StateRef};
use crate::randmeas::{derive_seed, generate_dataset, Ensemble};
use crate::shadows::{estimate_value, snapshots_from_dataset, Statistic};
use crate::stats::{self, CompensatedSum};
use crate::{Error, Result};

/// Largest subsystem the harness accepts.
pub const MAX_SWEEP_QUBITS: usize = 8;
/// Upper limit on `M * trials` summed over a sweep grid.
pub const MAX_SWEEP_SNAPSHOTS: usize = 50_000_000;

fn check_ab_p2(ab_size: usize, p2: f64) -> Result<()> {
    if ab_size == 0 {
        return Err(Error::invalid("|AB| must be positive"));
    }
    if !(p2 > 0.0 && p2 <= 1.0) {
        return Err(Error::invalid(format!("p2 = {p2} outside (0, 1]")));
    }
    Ok(())
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(format!("{name} = {v} outside (0, 1)")));
        }
    }
    Ok(())
}

/// Ceiling that ignores representation noise just above an integer.
fn ceil_clean(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// `4 * 2^|AB| p2 / M + 4 * (2^{1.5|AB|} / M)^2`.
pub fn variance_bound_p2(ab_size: usize, p2: f64, m: usize) -> Result<f64> {
    check_ab_p2(ab_size, p2)?;
    if m < 2 {
        return Err(Error::invalid(format!("M = {m} below 2")));
    }
    let (dim, m) = (2f64.powi(ab_size as i32), m as f64);
    Ok(4.0 * dim * p2 / m + 4.0 * (dim.powf(1.5) / m).powi(2))
}

/// `8 max{2^|AB| p2 / (eps^2 delta), 2^{1.5|AB|} / (eps sqrt(delta))}`.
pub fn sample_size_p2(ab_size: usize, p2: f64, epsilon: f64, delta: f64) -> Result<usize> {
    check_ab_p2(ab_size, p2)?;
    check_eps_delta(epsilon, delta)?;
    let dim = 2f64.powi(ab_size as i32);
    let a = dim * p2 / (epsilon * epsilon * delta);
    let b = dim.powf(1.5) / (epsilon * delta.sqrt());
    Ok(ceil_clean(8.0 * a.max(b)))
}

/// `39 max{2^|AB| p2^2 / (eps^2 delta), 2^{1.5|AB|} p2 / (eps sqrt(delta)),
/// 2^{2|AB|} / (eps^{2/3} delta^{1/3})}`.
pub fn sample_size_p3(ab_size: usize, p2: f64, epsilon: f64, delta: f64) -> Result<usize> {
    check_ab_p2(ab_size, p2)?;
    check_eps_delta(epsilon, delta)?;
    let dim = 2f64.powi(ab_size as i32);
    let a = dim * p2 * p2 / (epsilon * epsilon * delta);
    let b = dim.powf(1.5) * p2 / (epsilon * delta.sqrt());
    let c = dim * dim / (epsilon.powf(2.0 / 3.0) * delta.cbrt());
    Ok(ceil_clean(39.0 * a.max(b).max(c)))
}

/// Seed of one Monte Carlo trial, derived from the master seed, the number
/// of unitaries and the trial index.
pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    derive_seed(master, &[m as u64, trial as u64])
}

/// Exact value of `statistic` for `state` and `partition`.
pub fn exact_value<'a>(
    state: impl Into<StateRef<'a>>,
    partition: &PartitionSpec,
    statistic: Statistic,
) -> Result<f64> {
    let rho = reduced_density_matrix(state, &partition.ab_sites())?;
    Ok(match statistic {
        Statistic::S3 => rho.trace_power(3),
        s => pt_moments_exact(&rho, partition, s.order())?[s.order() - 1],
    })
}

/// Options shared by the Monte Carlo studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub shots: usize,
    pub ensemble: Ensemble,
    pub trials: usize,
    pub seed: u64,
}

impl TrialSetup {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            shots: 1,
            ensemble: Ensemble::Clifford,
            trials,
            seed,
        }
    }
}

/// Independent estimates of `statistic`, one per trial, each from a fresh
/// dataset of `m` unitaries.
pub fn trial_estimates<'a>(
    state: impl Into<StateRef<'a>>,
    partition: &PartitionSpec,
    statistic: Statistic,
    m: usize,
    setup: TrialSetup,
) -> Result<Vec<f64>> {
    let state = state.into();
    let sites = partition.ab_sites();
    if sites.len() > MAX_SWEEP_QUBITS {
        return Err(Error::resource(format!(
            "Monte Carlo studies limited to |AB| <= {MAX_SWEEP_QUBITS}"
        )));
    }
    (0..setup.trials)
        .into_par_iter()
        .map(|t| {
            let ds = generate_dataset(
                state,
                &sites,
                m,
                setup.shots,
                setup.ensemble,
                trial_seed(setup.seed, m, t),
            )?;
            estimate_value(&snapshots_from_dataset(&ds, &sites)?, partition, statistic)
        })
        .collect()
}

/// Error summary of one batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean_abs_err: f64,
    /// Standard error of `mean_abs_err` across trials.
    pub stderr: f64,
    pub rmse: f64,
    pub trials: usize,
}

impl ErrorStats {
    pub fn from_estimates(estimates: &[f64], exact: f64) -> Self {
        let abs: Vec<f64> = estimates.iter().map(|e| (e - exact).abs()).collect();
        let sq: CompensatedSum = abs.iter().map(|a| a * a).collect();
        Self {
            mean_abs_err: stats::mean(&abs),
            stderr: stats::std_error_of_mean(&abs),
            rmse: (sq.value() / abs.len() as f64).sqrt(),
            trials: abs.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    #[serde(flatten)]
    pub errors: ErrorStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub statistic: Statistic,
    pub state_label: String,
    pub ab_size: usize,
    pub exact: f64,
    pub grid: Vec<SweepPoint>,
    /// Log-log slope of the mean absolute error below the grid's geometric
    /// midpoint.
    pub small_m_slope: f64,
    /// Same, above the midpoint.
    pub large_m_slope: f64,
}

impl SweepResult {
    /// Delimited table `M,mean_abs_err,stderr,trials,rmse`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,mean_abs_err,stderr,trials,rmse\n");
        for p in &self.grid {
            out.push_str(&format!(
                "{},{:.10e},{:.10e},{},{:.10e}\n",
                p.m, p.errors.mean_abs_err, p.errors.stderr, p.errors.trials, p.errors.rmse
            ));
        }
        out
    }
}

/// Least-squares slopes of the points below and above the grid's geometric
/// midpoint. A half with fewer than two points borrows its neighbour.
fn regime_slopes(grid: &[SweepPoint]) -> (f64, f64) {
    let n = grid.len();
    if n < 2 {
        return (f64::NAN, f64::NAN);
    }
    let ms: Vec<f64> = grid.iter().map(|p| p.m as f64).collect();
    let errs: Vec<f64> = grid.iter().map(|p| p.errors.mean_abs_err).collect();
    let mid = (ms[0] * ms[n - 1]).sqrt();
    let below = ms.iter().filter(|&&m| m <= mid).count();
    let lo_end = below.clamp(2, n);
    let hi_start = below.min(n - 2);
    (
        stats::loglog_slope(&ms[..lo_end], &errs[..lo_end]),
        stats::loglog_slope(&ms[hi_start..], &errs[hi_start..]),
    )
}

/// Mean absolute error of `statistic` across `m_grid`, with fitted slopes
/// for the small-M and large-M regimes.
pub fn error_scaling_sweep<'a>(
    state: impl Into<StateRef<'a>>,
    partition: &PartitionSpec,
    statistic: Statistic,
    m_grid: &[usize],
    setup: TrialSetup,
) -> Result<SweepResult> {
    if setup.trials < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 trials, got {}",
            setup.trials
        )));
    }
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "M grid must be non-empty and strictly increasing",
        ));
    }
    let total: usize = m_grid.iter().sum::<usize>().saturating_mul(setup.trials);
    if total > MAX_SWEEP_SNAPSHOTS {
        return Err(Error::resource(format!(
            "sweep needs {total} snapshots, limit {MAX_SWEEP_SNAPSHOTS}"
        )));
    }
    let state = state.into();
    let exact = exact_value(state, partition, statistic)?;
    let grid = m_grid
        .iter()
        .map(|&m| {
            let est = trial_estimates(state, partition, statistic, m, setup)?;
            Ok(SweepPoint {
                m,
                errors: ErrorStats::from_estimates(&est, exact),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (small_m_slope, large_m_slope) = regime_slopes(&grid);
    Ok(SweepResult {
        statistic,
        state_label: String::new(),
        ab_size: partition.ab_size(),
        exact,
        grid,
        small_m_slope,
        large_m_slope,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub p: usize,
    pub m: usize,
    pub p2: ErrorStats,
    pub p3: ErrorStats,
}

/// Errors of `p2` and `p3` when a fixed budget `M * P` is split with each of
/// the given shot counts.
pub fn budget_split_study<'a>(
    state: impl Into<StateRef<'a>>,
    partition: &PartitionSpec,
    total_budget: usize,
    p_values: &[usize],
    setup: TrialSetup,
) -> Result<Vec<BudgetRow>> {
    let state = state.into();
    let exact2 = exact_value(state, partition, Statistic::P2)?;
    let exact3 = exact_value(state, partition, Statistic::P3)?;
    p_values
        .iter()
        .map(|&p| {
            if p == 0 || !total_budget.is_multiple_of(p) {
                return Err(Error::invalid(format!(
                    "budget {total_budget} not divisible by P = {p}"
                )));
            }
            let m = total_budget / p;
            let setup = TrialSetup { shots: p, ..setup };
            let e2 = trial_estimates(state, partition, Statistic::P2, m, setup)?;
            let e3 = trial_estimates(state, partition, Statistic::P3, m, setup)?;
            Ok(BudgetRow {
                p,
                m,
                p2: ErrorStats::from_estimates(&e2, exact2),
                p3: ErrorStats::from_estimates(&e3, exact3),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::make_ghz;

    #[test]
    fn bound_examples() {
        assert!((variance_bound_p2(2, 1.0, 100).unwrap() - 0.1856).abs() < 1e-12);
        assert!(variance_bound_p2(2, 1.0, 200).unwrap() < variance_bound_p2(2, 1.0, 100).unwrap());
        assert!(variance_bound_p2(2, 1.5, 100).is_err());
        assert!(variance_bound_p2(2, 1.0, 1).is_err());
        assert_eq!(sample_size_p2(2, 1.0, 0.2, 0.25).unwrap(), 3200);
        assert_eq!(sample_size_p3(2, 1.0, 0.5, 0.5).unwrap(), 1248);
        assert!(sample_size_p2(2, 1.0, 0.0, 0.25).is_err());
    }

    #[test]
    fn sample_size_terms_scale() {
        // first p2 term dominates here; two more qubits quadruple it
        let a = sample_size_p2(2, 1.0, 0.01, 0.25).unwrap() as f64;
        let b = sample_size_p2(4, 1.0, 0.01, 0.25).unwrap() as f64;
        assert!((b / a - 4.0).abs() < 1e-3);
    }

    #[test]
    fn seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for m in [10, 20] {
            for t in 0..50 {
                assert!(seen.insert(trial_seed(1, m, t)));
            }
        }
        assert_ne!(trial_seed(1, 10, 0), trial_seed(2, 10, 0));
    }

    #[test]
    fn sweep_is_reproducible_and_validated() {
        let g = make_ghz(2).unwrap();
        let part = PartitionSpec::new(vec![1], vec![2]).unwrap();
        let setup = TrialSetup::new(10, 9);
        let a = error_scaling_sweep(&g, &part, Statistic::P2, &[20, 40], setup).unwrap();
        let b = error_scaling_sweep(&g, &part, Statistic::P2, &[20, 40], setup).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!((a.exact - 1.0).abs() < 1e-12);
        assert!(a.to_csv().starts_with("M,mean_abs_err,stderr,trials"));
        assert!(error_scaling_sweep(&g, &part, Statistic::P2, &[40, 20], setup).is_err());
        assert!(
            error_scaling_sweep(&g, &part, Statistic::P2, &[20], TrialSetup::new(5, 1)).is_err()
        );
    }

    #[test]
    fn budget_errors() {
        let g = make_ghz(2).unwrap();
        let part = PartitionSpec::new(vec![1], vec![2]).unwrap();
        let setup = TrialSetup::new(3, 1);
        assert!(budget_split_study(&g, &part, 100, &[3], setup).is_err());
        assert!(matches!(
            budget_split_study(&g, &part, 100, &[100], setup),
            Err(Error::InsufficientData { .. })
        ));
        let rows = budget_split_study(&g, &part, 120, &[1, 2], setup).unwrap();
        assert_eq!(rows[1].m, 60);
    }
}
