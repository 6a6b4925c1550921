use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{p3_ppt_test, r3_ratio, TIE_TOLERANCE};
use crate::linalg::{CMatrix, C64};
use crate::qstate::{DensityMatrix, SiteLayout};
use crate::{Error, Result};

/// Largest local dimension for the dense Werner construction.
pub const MAX_WERNER_DIM: usize = 12;

/// `rho_W = alpha Pi_+ / C(d+1, 2) + (1 - alpha) Pi_- / C(d, 2)` on `d x d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerSpec {
    pub d: usize,
    pub alpha: f64,
}

impl WernerSpec {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        let spec = Self { d, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::invalid(format!(
                "Werner dimension {} below 2",
                self.d
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "Werner alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }

    fn weights(&self) -> (f64, f64) {
        let d = self.d as f64;
        (
            self.alpha / (d * (d + 1.0) / 2.0),
            (1.0 - self.alpha) / (d * (d - 1.0) / 2.0),
        )
    }

    /// Eigenvalues of the partial transpose: `lambda_0` once, `lambda_1`
    /// with multiplicity `d^2 - 1`.
    fn pt_spectrum(&self) -> (f64, f64) {
        let d = self.d as f64;
        (
            (2.0 * self.alpha - 1.0) / d,
            (1.0 + d - 2.0 * self.alpha) / (d * (d * d - 1.0)),
        )
    }

    fn layout(&self) -> SiteLayout {
        SiteLayout::new(vec![1, 2], vec![self.d, self.d]).expect("two distinct sites")
    }
}

/// Dense Werner state built from the swap operator.
pub fn werner_state(spec: WernerSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    if spec.d > MAX_WERNER_DIM {
        return Err(Error::resource(format!(
            "Werner dimension {} above {MAX_WERNER_DIM}",
            spec.d
        )));
    }
    let d = spec.d;
    let (wp, wm) = spec.weights();
    // Pi_± = (I ± F) / 2 with F|ij> = |ji>
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let r = i * d + j;
            m[(r, r)] += C64::from(0.5 * (wp + wm));
            m[(j * d + i, r)] += C64::from(0.5 * (wp - wm));
        }
    }
    DensityMatrix::new(spec.layout(), m)
}

/// Closed-form `Tr[(rho_W^{T_A})^n]`.
pub fn werner_pt_moment(spec: WernerSpec, n: u32) -> Result<f64> {
    spec.validate()?;
    if n < 1 {
        return Err(Error::invalid("moment order must be at least 1"));
    }
    let (l0, l1) = spec.pt_spectrum();
    let d = spec.d as f64;
    Ok(l0.powi(n as i32) + (d * d - 1.0) * l1.powi(n as i32))
}

/// Closed-form `Tr(rho_W^3)`.
pub fn werner_s3(spec: WernerSpec) -> Result<f64> {
    spec.validate()?;
    let (wp, wm) = spec.weights();
    let d = spec.d as f64;
    Ok(d * (d + 1.0) / 2.0 * wp.powi(3) + d * (d - 1.0) / 2.0 * wm.powi(3))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerRow {
    pub alpha: f64,
    pub p2: f64,
    pub p3: f64,
    pub ppt_violated: bool,
    pub p3_ppt_violated: bool,
}

impl WernerRow {
    pub fn agrees(&self) -> bool {
        self.ppt_violated == self.p3_ppt_violated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerSweep {
    pub d: usize,
    pub rows: Vec<WernerRow>,
    /// Alphas where the two verdicts differ.
    pub disagreements: Vec<f64>,
    /// Zero of `p3` in `(0, 1/2)`, if `p3` changes sign there.
    pub p3_root: Option<f64>,
}

/// Compares the exact PPT verdict with the p3-PPT verdict along `alpha_grid`.
pub fn werner_equivalence_sweep(d: usize, alpha_grid: &[f64]) -> Result<WernerSweep> {
    if !(2..=8).contains(&d) {
        return Err(Error::invalid(format!(
            "Werner sweep dimension {d} outside 2..=8"
        )));
    }
    let rows = alpha_grid
        .par_iter()
        .map(|&alpha| {
            let spec = WernerSpec::new(d, alpha)?;
            let (p2, p3) = (werner_pt_moment(spec, 2)?, werner_pt_moment(spec, 3)?);
            Ok(WernerRow {
                alpha,
                p2,
                p3,
                ppt_violated: spec.pt_spectrum().0 < -TIE_TOLERANCE,
                p3_ppt_violated: p3_ppt_test(p2, p3)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let disagreements = rows
        .iter()
        .filter(|r| !r.agrees())
        .map(|r| r.alpha)
        .collect();
    Ok(WernerSweep {
        d,
        rows,
        disagreements,
        p3_root: werner_p3_root(d)?,
    })
}

/// Bisection (to 1e-9) for the zero of `p3(alpha)` in `(0, 1/2)`. `None`
/// when `p3` has the same sign at both ends.
pub fn werner_p3_root(d: usize) -> Result<Option<f64>> {
    let p3 = |alpha: f64| werner_pt_moment(WernerSpec::new(d, alpha)?, 3);
    let (mut lo, mut hi) = (0.0, 0.5);
    let (f_lo, f_hi) = (p3(lo)?, p3(hi)?);
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 {
        return Ok(None);
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if p3(mid)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Separable Werner state with positive `R3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerWitness {
    pub alpha: f64,
    pub p3: f64,
    pub s3: f64,
    pub r3: f64,
}

/// First alpha on a 100-point grid over `[1/2, 1/2 + 1/(2d))` where the
/// state is separable yet `0 < p3 < s3`.
pub fn werner_r3_nonmonotone_check(d: usize) -> Result<Option<WernerWitness>> {
    let width = 0.5 / d as f64;
    for i in 0..100 {
        let spec = WernerSpec::new(d, 0.5 + width * i as f64 / 100.0)?;
        let (p3, s3) = (werner_pt_moment(spec, 3)?, werner_s3(spec)?);
        if p3 > 0.0 && p3 < s3 - TIE_TOLERANCE {
            return Ok(Some(WernerWitness {
                alpha: spec.alpha,
                p3,
                s3,
                r3: r3_ratio(p3, s3)?,
            }));
        }
    }
    Ok(None)
}
