use crate::linalg::{gates, Mat2};
use crate::randmeas::{MeasurementDataset, MeasurementRecord};
use crate::{Error, Result};

/// Shadow of one measurement record: the mean over its `P` shots of
/// `⊗_i [3 u_i^dagger |k_i><k_i| u_i - I]`.
///
/// `factors` are the single-qubit marginals of that mean. When every shot
/// gave the same bit string the snapshot is their tensor product; otherwise
/// `shots` keeps the unitaries and the outcome histogram, since the mean of
/// products is not a product.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    sites: Vec<usize>,
    factors: Vec<Mat2>,
    shots: usize,
    resolved: Option<ShotResolved>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ShotResolved {
    /// Measurement unitary of each site.
    pub unitaries: Vec<Mat2>,
    /// Distinct bit strings (first site most significant) with their
    /// relative frequencies, sorted by bit string.
    pub outcomes: Vec<(u32, f64)>,
}

impl ShotResolved {
    fn restrict(&self, positions: &[usize], k: usize) -> ShotResolved {
        let mut outcomes: Vec<(u32, f64)> = self
            .outcomes
            .iter()
            .map(|&(bits, w)| {
                let sub = positions
                    .iter()
                    .fold(0u32, |acc, &p| acc << 1 | (bits >> (k - 1 - p) & 1));
                (sub, w)
            })
            .collect();
        outcomes.sort_by_key(|o| o.0);
        outcomes.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        ShotResolved {
            unitaries: positions.iter().map(|&p| self.unitaries[p]).collect(),
            outcomes,
        }
    }
}

impl Snapshot {
    /// Product snapshot from explicit factors (for tests and external data).
    pub fn from_factors(sites: Vec<usize>, factors: Vec<Mat2>, shots: usize) -> Result<Self> {
        if sites.len() != factors.len() {
            return Err(Error::invalid("one factor per site is required"));
        }
        if shots == 0 {
            return Err(Error::invalid("a snapshot averages at least one shot"));
        }
        Ok(Self {
            sites,
            factors,
            shots,
            resolved: None,
        })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Single-qubit marginal factors.
    pub fn factors(&self) -> &[Mat2] {
        &self.factors
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    /// True when the snapshot is the tensor product of [`Snapshot::factors`].
    pub fn is_product(&self) -> bool {
        self.resolved.is_none()
    }

    pub(crate) fn resolved(&self) -> Option<&ShotResolved> {
        self.resolved.as_ref()
    }

    /// Factor belonging to `site`.
    pub fn factor(&self, site: usize) -> Option<&Mat2> {
        self.position(site).map(|p| &self.factors[p])
    }

    fn position(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    /// Restriction to a subset of sites (the snapshot of the reduced state).
    pub fn restrict(&self, sites: &[usize]) -> Result<Snapshot> {
        let positions = sites
            .iter()
            .map(|s| {
                self.position(*s)
                    .ok_or_else(|| Error::invalid(format!("site {s} not in snapshot")))
            })
            .collect::<Result<Vec<_>>>()?;
        let resolved = self
            .resolved
            .as_ref()
            .map(|r| r.restrict(&positions, self.sites.len()))
            .filter(|r| r.outcomes.len() > 1);
        Ok(Snapshot {
            sites: sites.to_vec(),
            factors: positions.iter().map(|&p| self.factors[p]).collect(),
            shots: self.shots,
            resolved,
        })
    }
}

/// `3 u^dagger |k><k| u - I`.
#[inline]
pub(crate) fn shadow_factor(u: &Mat2, k: u8) -> Mat2 {
    (u.adjoint() * gates::projector(k) * *u).scale(3.0) - Mat2::IDENTITY
}

/// Snapshot of `record` restricted to `sites`, where `record_sites` lists the
/// sites the record was measured on.
pub fn snapshot_from_record(
    record: &MeasurementRecord,
    record_sites: &[usize],
    sites: &[usize],
) -> Result<Snapshot> {
    let shots = record.outcomes.len();
    if shots == 0 {
        return Err(Error::invalid("record has no outcomes"));
    }
    let positions = sites
        .iter()
        .map(|s| {
            record_sites
                .iter()
                .position(|r| r == s)
                .ok_or_else(|| Error::invalid(format!("site {s} was not measured in this record")))
        })
        .collect::<Result<Vec<_>>>()?;
    let inv = 1.0 / shots as f64;
    let factors = positions
        .iter()
        .map(|&pos| {
            let u = &record.unitary.factors()[pos];
            let ones = (0..shots).filter(|&s| record.bit(s, pos) == 1).count();
            let zeros = shots - ones;
            let mut f = Mat2::ZERO;
            if zeros > 0 {
                f = f + shadow_factor(u, 0).scale(zeros as f64 * inv);
            }
            if ones > 0 {
                f = f + shadow_factor(u, 1).scale(ones as f64 * inv);
            }
            f
        })
        .collect();
    let full = ShotResolved {
        unitaries: record.unitary.factors().to_vec(),
        outcomes: record.outcomes.iter().map(|&b| (b, inv)).collect(),
    };
    let resolved =
        Some(full.restrict(&positions, record_sites.len())).filter(|r| r.outcomes.len() > 1);
    Ok(Snapshot {
        sites: sites.to_vec(),
        factors,
        shots,
        resolved,
    })
}

/// One snapshot per record of `ds`, restricted to `sites`.
pub fn snapshots_from_dataset(ds: &MeasurementDataset, sites: &[usize]) -> Result<Vec<Snapshot>> {
    ds.records
        .iter()
        .map(|r| snapshot_from_record(r, &ds.sites, sites))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, C64};
    use crate::randmeas::{generate_dataset, Ensemble, LocalUnitary};

    fn record(u: Vec<Mat2>, outcomes: Vec<u32>) -> MeasurementRecord {
        MeasurementRecord {
            unitary: LocalUnitary::new(u).unwrap(),
            outcomes,
        }
    }

    #[test]
    fn identity_outcome_zero() {
        let s = snapshot_from_record(&record(vec![Mat2::IDENTITY], vec![0]), &[1], &[1]).unwrap();
        assert_eq!(s.factors()[0], Mat2::real(2.0, 0.0, 0.0, -1.0));
    }

    #[test]
    fn hadamard_outcome_zero() {
        let s =
            snapshot_from_record(&record(vec![gates::hadamard()], vec![0]), &[1], &[1]).unwrap();
        let expected = Mat2::real(0.5, 1.5, 1.5, 0.5);
        assert!((s.factors()[0] - expected).max_abs() < 1e-15);
    }

    #[test]
    fn two_shots_average() {
        let s =
            snapshot_from_record(&record(vec![Mat2::IDENTITY], vec![0, 1]), &[1], &[1]).unwrap();
        assert!((s.factors()[0] - Mat2::real(0.5, 0.0, 0.0, 0.5)).max_abs() < 1e-15);
        assert_eq!(s.shots(), 2);
        assert!(!s.is_product());
        let same =
            snapshot_from_record(&record(vec![Mat2::IDENTITY], vec![1, 1]), &[1], &[1]).unwrap();
        assert!(same.is_product());
    }

    #[test]
    fn restriction_merges_shot_histogram() {
        let rec = record(vec![Mat2::IDENTITY; 3], vec![0b010, 0b011, 0b110, 0b010]);
        let full = snapshot_from_record(&rec, &[1, 2, 3], &[1, 2, 3]).unwrap();
        let sub = full.restrict(&[3, 2]).unwrap();
        assert_eq!(
            sub,
            snapshot_from_record(&rec, &[1, 2, 3], &[3, 2]).unwrap()
        );
        let r = sub.resolved().unwrap();
        assert_eq!(r.outcomes, vec![(0b01, 0.75), (0b11, 0.25)]);
        // site 2 always gave 1, so its restriction is a product
        assert!(full.restrict(&[2]).unwrap().is_product());
    }

    #[test]
    fn factor_invariants_from_random_data() {
        let g = crate::qstate::make_ghz(3).unwrap();
        let ds = generate_dataset(&g, &[1, 2, 3], 30, 1, Ensemble::Haar, 4).unwrap();
        for snap in snapshots_from_dataset(&ds, &[3, 1]).unwrap() {
            for f in snap.factors() {
                assert!((f.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
                let ev = hermitian_eigenvalues(&f.to_dense());
                assert!((ev[0] + 1.0).abs() < 1e-10 && (ev[1] - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn restriction_selects_sites() {
        let rec = record(
            vec![Mat2::IDENTITY, gates::hadamard(), Mat2::IDENTITY],
            vec![0b011],
        );
        let full = snapshot_from_record(&rec, &[4, 5, 6], &[4, 5, 6]).unwrap();
        let sub = snapshot_from_record(&rec, &[4, 5, 6], &[6, 4]).unwrap();
        assert_eq!(full.restrict(&[6, 4]).unwrap(), sub);
        assert_eq!(sub.factors()[0], Mat2::real(-1.0, 0.0, 0.0, 2.0));
        assert!(snapshot_from_record(&rec, &[4, 5, 6], &[7]).is_err());
    }
}
