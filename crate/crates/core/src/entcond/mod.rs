//! Moment-based entanglement conditions and their exact counterparts.
//!
//! The p3-PPT condition states that every PPT state obeys `p3 >= p2^2`, so
//! `p3 < p2^2` certifies entanglement. All verdicts treat differences below
//! [`TIE_TOLERANCE`] as ties, and ties never count as a violation.

mod werner;

pub use werner::{
    werner_equivalence_sweep, werner_p3_root, werner_pt_moment, werner_r3_nonmonotone_check,
    werner_s3, werner_state, WernerRow, WernerSpec, WernerSweep, WernerWitness, MAX_WERNER_DIM,
};

use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, CMatrix};
use crate::qstate::{
    negativity, pt_moments_exact, reduced_density_matrix, DensityMatrix, PartitionSpec,
};
use crate::{Error, Result};

pub const TIE_TOLERANCE: f64 = 1e-12;

/// Exact comparison of the negativity, the p3-PPT condition and the purity
/// condition for one state and bipartition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub negativity: f64,
    pub p2: f64,
    pub p3: f64,
    /// `1 - p3 / p2^2`; positive values signal entanglement.
    pub p3_ppt_margin: f64,
    /// `Tr rho_AB^2 - Tr rho_A^2`; positive values signal entanglement.
    pub purity_gap: f64,
    pub ppt_violated: bool,
    pub p3_ppt_violated: bool,
    pub purity_condition_met: bool,
}

/// True when `p3 < p2^2`, i.e. the state is certainly not PPT.
pub fn p3_ppt_test(p2: f64, p3: f64) -> Result<bool> {
    if !(p2 > 0.0) {
        return Err(Error::invalid(format!("p2 must be positive, got {p2}")));
    }
    Ok(p3 < p2 * p2 - TIE_TOLERANCE)
}

/// Violation of `p_{q-1}^{q-1} <= p_q^{q-2}` for `q` in `3..=5`, where
/// `moments[n - 1]` holds `p_n`. For `q = 3` this is the p3-PPT test.
pub fn generalized_moment_test(moments: &[f64], q: usize) -> Result<bool> {
    if !(3..=5).contains(&q) {
        return Err(Error::invalid(format!(
            "generalized test order {q} outside 3..=5"
        )));
    }
    if moments.len() < q {
        return Err(Error::invalid(format!(
            "order {q} needs moments up to p{q}, got {}",
            moments.len()
        )));
    }
    let lower = moments[q - 2].powi(q as i32 - 1);
    let upper = moments[q - 1].powi(q as i32 - 2);
    Ok(lower > upper + TIE_TOLERANCE)
}

/// `F3^(a) = -p3 + 2 a p2 - a^2 p1`.
pub fn f3_value(p1: f64, p2: f64, p3: f64, a: f64) -> f64 {
    -p3 + 2.0 * a * p2 - a * a * p1
}

/// Maximiser `p2 / p1` of [`f3_value`] over `a`.
pub fn optimal_a(p1: f64, p2: f64) -> f64 {
    p2 / p1
}

/// Scalar polynomial `-x^3 + 2 a x^2 - a^2 x = -x (x - a)^2` underlying F3.
pub fn f3_pointwise(x: f64, a: f64) -> f64 {
    -x * (x - a) * (x - a)
}

/// True when `Tr rho_A^2 < Tr rho_AB^2`, which certifies entanglement between
/// `A` and `B`.
pub fn purity_condition(purity_a: f64, purity_ab: f64) -> Result<bool> {
    for (name, v) in [("purity_a", purity_a), ("purity_ab", purity_ab)] {
        if !(v > 0.0 && v <= 1.0 + TIE_TOLERANCE) {
            return Err(Error::invalid(format!("{name} = {v} outside (0, 1]")));
        }
    }
    Ok(purity_a < purity_ab - TIE_TOLERANCE)
}

/// `R3 = -log2(p3 / s3)`, defined only for positive arguments.
pub fn r3_ratio(p3: f64, s3: f64) -> Result<f64> {
    if !(p3 > 0.0) || !(s3 > 0.0) {
        return Err(Error::UndefinedRatio(format!(
            "R3 needs p3 > 0 and s3 > 0, got p3 = {p3}, s3 = {s3}"
        )));
    }
    Ok(-(p3 / s3).log2())
}

/// Schatten p-norm of a Hermitian matrix; `p = f64::INFINITY` gives the
/// spectral norm.
pub fn schatten_norm(x: &CMatrix, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("Schatten index {p} below 1")));
    }
    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if hermiticity_defect(x) > 1e-10 * scale {
        return Err(Error::invalid("Schatten norm needs a Hermitian matrix"));
    }
    let abs = hermitian_eigenvalues(x).into_iter().map(f64::abs);
    Ok(if p.is_infinite() {
        abs.fold(0.0, f64::max)
    } else {
        abs.map(|l| l.powf(p)).sum::<f64>().powf(1.0 / p)
    })
}

/// Exact evaluation of all three conditions. `rho` may act on more sites than
/// the partition; it is reduced to `A ∪ B` first.
pub fn compare_conditions(
    rho: &DensityMatrix,
    partition: &PartitionSpec,
) -> Result<ConditionReport> {
    let ab = partition.ab_sites();
    let rho_ab = if rho.sites().len() == ab.len() {
        rho.clone()
    } else {
        reduced_density_matrix(rho, &ab)?
    };
    let moments = pt_moments_exact(&rho_ab, partition, 3)?;
    let (p2, p3) = (moments[1], moments[2]);
    let neg = negativity(&rho_ab, partition)?;
    let purity_a = reduced_density_matrix(&rho_ab, partition.a_sites())?.purity();
    let purity_ab = rho_ab.purity();
    Ok(ConditionReport {
        negativity: neg + 0.0,
        p2,
        p3,
        p3_ppt_margin: 1.0 - p3 / (p2 * p2),
        purity_gap: purity_ab - purity_a,
        ppt_violated: neg > 0.0,
        p3_ppt_violated: p3_ppt_test(p2, p3)?,
        purity_condition_met: purity_condition(purity_a, purity_ab)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE};
    use crate::qstate::{make_ghz, PureState};

    #[test]
    fn p3_ppt_examples() {
        assert!(p3_ppt_test(1.0, 0.25).unwrap());
        assert!(!p3_ppt_test(0.25, 0.0625).unwrap());
        assert!(!p3_ppt_test(1.0, 1.0).unwrap());
        assert!(p3_ppt_test(0.0, 0.1).is_err());
        assert!(generalized_moment_test(&[1.0, 1.0, 0.25], 3).unwrap());
        assert!(generalized_moment_test(&[1.0, 1.0], 3).is_err());
        assert!(generalized_moment_test(&[1.0; 6], 6).is_err());
    }

    #[test]
    fn f3_examples() {
        assert!((f3_value(1.0, 1.0, 0.25, 1.0) - 0.75).abs() < 1e-15);
        let (p2, p3) = (0.4, 0.1);
        let a = optimal_a(1.0, p2);
        assert!((f3_value(1.0, p2, p3, a) - (p2 * p2 - p3)).abs() < 1e-15);
        assert_eq!(f3_pointwise(0.0, 0.5), 0.0);
        assert!(f3_pointwise(0.3, 0.5) < 0.0);
        assert!(f3_pointwise(-0.3, 0.5) > 0.0);
    }

    #[test]
    fn purity_and_ratio() {
        assert!(purity_condition(0.5, 1.0).unwrap());
        assert!(!purity_condition(1.0, 1.0).unwrap());
        assert!(!purity_condition(0.5, 0.25).unwrap());
        assert!(purity_condition(0.0, 1.0).is_err());
        assert!((r3_ratio(0.25, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(r3_ratio(0.3, 0.3).unwrap(), 0.0);
        assert!(matches!(
            r3_ratio(-1.0 / 144.0, 0.1),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn schatten_examples() {
        let id = CMatrix::identity(5, 5);
        assert!((schatten_norm(&id, 1.0).unwrap() - 5.0).abs() < 1e-12);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(3.0),
            C64::from(-4.0),
        ]));
        assert!((schatten_norm(&d, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((schatten_norm(&d, f64::INFINITY).unwrap() - 4.0).abs() < 1e-12);
        assert!(schatten_norm(&d, 0.5).is_err());
        let mut nh = id.clone();
        nh[(0, 1)] = ONE;
        assert!(schatten_norm(&nh, 2.0).is_err());
    }

    #[test]
    fn ghz_all_conditions_fire() {
        let rho = make_ghz(4).unwrap().to_density_matrix();
        let r =
            compare_conditions(&rho, &PartitionSpec::new(vec![1, 2], vec![3, 4]).unwrap()).unwrap();
        assert!(r.ppt_violated && r.p3_ppt_violated && r.purity_condition_met);
        assert!((r.purity_gap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_state_fires_nothing() {
        let rho = PureState::basis(3, 0b101).unwrap().to_density_matrix();
        let r = compare_conditions(&rho, &PartitionSpec::new(vec![1], vec![3]).unwrap()).unwrap();
        assert!(!r.ppt_violated && !r.p3_ppt_violated && !r.purity_condition_met);
        assert!(r.p3_ppt_margin.abs() < 1e-12);
    }
}
