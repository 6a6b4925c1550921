use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ustat::{kernel_sums, mean_operator, route_for, KernelSums, Prepared, Route};
use super::Snapshot;
use crate::qstate::{DensityMatrix, PartitionSpec, SiteLayout};
use crate::stats;
use crate::{Error, Result};

/// Largest register for [`reconstruct_mean_state`].
const MEAN_STATE_MAX_QUBITS: usize = 8;

/// Trace functional being estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// `Tr[(rho^{T_A})^2]`
    P2,
    /// `Tr[(rho^{T_A})^3]`
    P3,
    /// `Tr(rho_AB^3)`
    S3,
    /// `Tr[(rho^{T_A})^4]`
    P4,
}

impl Statistic {
    pub fn order(self) -> usize {
        match self {
            Statistic::P2 => 2,
            Statistic::P3 | Statistic::S3 => 3,
            Statistic::P4 => 4,
        }
    }

    pub fn is_transposed(self) -> bool {
        !matches!(self, Statistic::S3)
    }

    /// PT-moment of order `n`.
    pub fn pn(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Statistic::P2),
            3 => Ok(Statistic::P3),
            4 => Ok(Statistic::P4),
            _ => Err(Error::UnsupportedOrder(n)),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::P2 => "p2",
            Statistic::P3 => "p3",
            Statistic::S3 => "s3",
            Statistic::P4 => "p4",
        })
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p2" => Ok(Statistic::P2),
            "p3" => Ok(Statistic::P3),
            "s3" => Ok(Statistic::S3),
            "p4" => Ok(Statistic::P4),
            other => Err(Error::invalid(format!("unknown statistic {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    UStatistic,
    MedianOfMeans,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::UStatistic => "u-statistic",
            Method::MedianOfMeans => "median-of-means",
        })
    }
}

/// How kernel sums are evaluated. Both engines give the same numbers up to
/// rounding; `Auto` picks the cheaper one for the data at hand.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    #[default]
    Auto,
    /// Explicit loops over index subsets.
    Factorized,
    /// Power sums of dense snapshot sums; orders 2 and 3 only.
    Dense,
}

impl Engine {
    fn route(self, order: usize, p: &Prepared) -> Route {
        match self {
            Engine::Auto => route_for(order, p),
            Engine::Factorized => Route::Factorized,
            Engine::Dense if order <= 3 => Route::Dense,
            Engine::Dense => Route::Factorized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub statistic: Statistic,
    pub value: f64,
    /// Jackknife error, or the scaled MAD for median-of-means. Infinite when
    /// there are too few snapshots to leave one out.
    pub std_error: f64,
    pub method: Method,
    pub m_used: usize,
    pub p_used: usize,
}

fn shots_of(snapshots: &[Snapshot]) -> usize {
    snapshots.iter().map(Snapshot::shots).min().unwrap_or(0)
}

fn prepare(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
) -> Result<Prepared> {
    if snapshots.len() < statistic.order() {
        return Err(Error::InsufficientData {
            needed: statistic.order(),
            got: snapshots.len(),
        });
    }
    Prepared::new(snapshots, partition, statistic.is_transposed())
}

fn sums(p: &Prepared, statistic: Statistic, engine: Engine, per_index: bool) -> Result<KernelSums> {
    let order = statistic.order();
    kernel_sums(p, order, engine.route(order, p), per_index)
}

fn jackknife(s: &KernelSums) -> f64 {
    if s.m <= s.order {
        return f64::INFINITY;
    }
    jackknife_spread(&(0..s.m).map(|r| s.leave_one_out(r)).collect::<Vec<_>>())
}

/// `sqrt((M - 1) / M * sum_r (theta_r - mean)^2)` for leave-one-out values
/// `theta_r`. Derived quantities such as ratios of two statistics get their
/// error by passing their own replicates.
pub fn jackknife_spread(replicates: &[f64]) -> f64 {
    let m = replicates.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let mean = stats::mean(replicates);
    let ss: f64 = replicates.iter().map(|t| (t - mean).powi(2)).sum();
    ((m - 1) as f64 / m as f64 * ss).sqrt()
}

/// U-statistic with its jackknife error, plus the `M` leave-one-out values
/// for propagating the error into derived quantities. With exactly `order`
/// snapshots there are no replicates and the error is infinite.
pub fn estimate_with_replicates(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
) -> Result<(Estimate, Vec<f64>)> {
    let p = prepare(snapshots, partition, statistic)?;
    let s = sums(&p, statistic, Engine::Auto, true)?;
    let replicates: Vec<f64> = if s.m > statistic.order() {
        (0..s.m).map(|r| s.leave_one_out(r)).collect()
    } else {
        Vec::new()
    };
    let estimate = Estimate {
        statistic,
        value: s.value(),
        std_error: jackknife_spread(&replicates),
        method: Method::UStatistic,
        m_used: snapshots.len(),
        p_used: shots_of(snapshots),
    };
    Ok((estimate, replicates))
}

/// U-statistic with its jackknife error, using the given engine.
pub fn estimate_with(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
    engine: Engine,
) -> Result<Estimate> {
    let p = prepare(snapshots, partition, statistic)?;
    let s = sums(&p, statistic, engine, true)?;
    Ok(Estimate {
        statistic,
        value: s.value(),
        std_error: jackknife(&s),
        method: Method::UStatistic,
        m_used: snapshots.len(),
        p_used: shots_of(snapshots),
    })
}

/// Point value of the U-statistic without error analysis; cheaper than
/// [`estimate`] on the dense route.
pub fn estimate_value(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
) -> Result<f64> {
    let p = prepare(snapshots, partition, statistic)?;
    Ok(sums(&p, statistic, Engine::Auto, false)?.value())
}

pub fn estimate(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
) -> Result<Estimate> {
    estimate_with(snapshots, partition, statistic, Engine::Auto)
}

pub fn estimate_p2(snapshots: &[Snapshot], partition: &PartitionSpec) -> Result<Estimate> {
    estimate(snapshots, partition, Statistic::P2)
}

pub fn estimate_p3(snapshots: &[Snapshot], partition: &PartitionSpec) -> Result<Estimate> {
    estimate(snapshots, partition, Statistic::P3)
}

pub fn estimate_s3(snapshots: &[Snapshot], partition: &PartitionSpec) -> Result<Estimate> {
    estimate(snapshots, partition, Statistic::S3)
}

/// PT-moment of order `n` in `2..=4`.
pub fn estimate_pn(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    n: usize,
) -> Result<Estimate> {
    estimate(snapshots, partition, Statistic::pn(n)?)
}

/// Delete-one jackknife error of the U-statistic. Needs at least `order + 1`
/// snapshots.
pub fn jackknife_error(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
) -> Result<f64> {
    let needed = statistic.order() + 1;
    if snapshots.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: snapshots.len(),
        });
    }
    let p = prepare(snapshots, partition, statistic)?;
    Ok(jackknife(&sums(&p, statistic, Engine::Auto, true)?))
}

/// Median of the U-statistics of `k_groups` contiguous chunks. When `M` is
/// not a multiple of `k_groups` the first chunks take one extra snapshot.
pub fn median_of_means(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    statistic: Statistic,
    k_groups: usize,
) -> Result<Estimate> {
    if k_groups == 0 {
        return Err(Error::invalid("k_groups must be at least 1"));
    }
    let m = snapshots.len();
    let needed = k_groups * statistic.order();
    if m < needed {
        return Err(Error::InsufficientData { needed, got: m });
    }
    let p = prepare(snapshots, partition, statistic)?;
    let (base, extra) = (m / k_groups, m % k_groups);
    let mut start = 0;
    let mut values = Vec::with_capacity(k_groups);
    for g in 0..k_groups {
        let len = base + usize::from(g < extra);
        let chunk = p.select(start..start + len);
        values.push(sums(&chunk, statistic, Engine::Auto, false)?.value());
        start += len;
    }
    let std_error = 1.4826 * stats::median_abs_deviation(&values) / (k_groups as f64).sqrt();
    Ok(Estimate {
        statistic,
        value: stats::median(&values),
        std_error,
        method: Method::MedianOfMeans,
        m_used: m,
        p_used: shots_of(snapshots),
    })
}

/// Mean of the dense snapshot operators, on the sites of the first snapshot.
/// The result has unit trace but need not be positive.
pub fn reconstruct_mean_state(snapshots: &[Snapshot]) -> Result<DensityMatrix> {
    let first = snapshots
        .first()
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let sites = first.sites().to_vec();
    if sites.len() > MEAN_STATE_MAX_QUBITS {
        return Err(Error::resource(format!(
            "mean state limited to {MEAN_STATE_MAX_QUBITS} qubits, got {}",
            sites.len()
        )));
    }
    let acc = mean_operator(snapshots, &sites)?;
    DensityMatrix::from_parts_unchecked(SiteLayout::with_sites(&sites)?, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;

    fn diag_snapshots(m: usize) -> Vec<Snapshot> {
        let f = Mat2::real(2.0, 0.0, 0.0, -1.0);
        (0..m)
            .map(|_| Snapshot::from_factors(vec![1, 2], vec![f, f], 1).unwrap())
            .collect()
    }

    fn part() -> PartitionSpec {
        PartitionSpec::new(vec![1], vec![2]).unwrap()
    }

    #[test]
    fn identical_diagonal_snapshots() {
        let s = diag_snapshots(3);
        assert!((estimate_p2(&s[..2], &part()).unwrap().value - 25.0).abs() < 1e-12);
        assert!((estimate_p3(&s, &part()).unwrap().value - 49.0).abs() < 1e-12);
        assert!((estimate_s3(&s, &part()).unwrap().value - 49.0).abs() < 1e-12);
        let e = estimate_p2(&diag_snapshots(6), &part()).unwrap();
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.m_used, 6);
        assert_eq!(e.p_used, 1);
    }

    #[test]
    fn too_few_snapshots() {
        let s = diag_snapshots(2);
        assert!(matches!(
            estimate_p3(&s, &part()),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
        assert!(estimate_p2(&s, &part()).unwrap().std_error.is_infinite());
        assert!(jackknife_error(&s, &part(), Statistic::P2).is_err());
        assert!(matches!(
            estimate_pn(&s, &part(), 5),
            Err(Error::UnsupportedOrder(5))
        ));
    }

    #[test]
    fn single_group_median_is_plain_estimate() {
        let s = diag_snapshots(7);
        let a = estimate_p2(&s, &part()).unwrap();
        let b = median_of_means(&s, &part(), Statistic::P2, 1).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(b.method, Method::MedianOfMeans);
        assert!(median_of_means(&s, &part(), Statistic::P2, 4).is_err());
    }

    #[test]
    fn mean_state_of_one_snapshot() {
        let rho = reconstruct_mean_state(&diag_snapshots(1)).unwrap();
        let expect = [4.0, -2.0, -2.0, 1.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((rho.matrix()[(i, i)].re - e).abs() < 1e-12);
        }
    }

    #[test]
    fn statistic_names_round_trip() {
        for s in [Statistic::P2, Statistic::P3, Statistic::S3, Statistic::P4] {
            assert_eq!(s.to_string().parse::<Statistic>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert_eq!(
            serde_json::to_string(&Method::MedianOfMeans).unwrap(),
            "\"median-of-means\""
        );
    }

    #[test]
    fn engines_agree_on_identical_data() {
        let s = diag_snapshots(9);
        for st in [Statistic::P2, Statistic::P3, Statistic::S3] {
            let a = estimate_with(&s, &part(), st, Engine::Factorized).unwrap();
            let b = estimate_with(&s, &part(), st, Engine::Dense).unwrap();
            assert!((a.value - b.value).abs() < 1e-9);
        }
    }
}
