//! Small complex linear-algebra helpers shared by the simulation and estimator
//! code. Dense matrices are `nalgebra` matrices of `Complex<f64>`; single-qubit
//! operators get their own fixed-size [`Mat2`] so the estimator hot loops stay
//! allocation free.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A 2x2 complex matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> C64 {
        self.0[row][col]
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn transpose(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    #[inline]
    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// `Tr(self * other)` without forming the product.
    #[inline]
    pub fn trace_mul(&self, other: &Mat2) -> C64 {
        let a = &self.0;
        let b = &other.0;
        a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]
    }

    /// Largest entrywise deviation from the identity of `self^dagger * self`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        (p - Mat2::IDENTITY).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMatrix {
        CMatrix::from_fn(2, 2, |r, c| self.0[r][c])
    }

    /// Multiply every entry by the same complex phase.
    pub fn phase(&self, z: C64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * z, m[0][1] * z], [m[1][0] * z, m[1][1] * z]])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    #[inline]
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Dense tensor product of single-qubit factors; factor 0 is the most
/// significant index.
pub fn kron_all(factors: &[Mat2]) -> CMatrix {
    let mut out = CMatrix::from_element(1, 1, ONE);
    for f in factors {
        out = kron(&out, &f.to_dense());
    }
    out
}

/// `Tr(a * b)` in O(n^2).
pub fn trace_mul(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `Tr((f_1 ⊗ ... ⊗ f_n) * y)` for a dense `y` of size `2^n`, without
/// materialising the Kronecker product.
pub fn trace_kron_mul(factors: &[Mat2], y: &CMatrix) -> C64 {
    let dim = 1usize << factors.len();
    debug_assert_eq!(y.nrows(), dim);
    // Row of the Kronecker product, built incrementally per row index.
    let mut row = vec![ZERO; dim];
    let mut acc = ZERO;
    for i in 0..dim {
        kron_row(factors, i, &mut row);
        for (k, w) in row.iter().enumerate() {
            acc += *w * y[(k, i)];
        }
    }
    acc
}

/// Fill `out` with row `i` of `f_1 ⊗ ... ⊗ f_n`.
pub fn kron_row(factors: &[Mat2], i: usize, out: &mut [C64]) {
    let n = factors.len();
    out[0] = ONE;
    let mut len = 1;
    for (q, f) in factors.iter().enumerate() {
        let bit = (i >> (n - 1 - q)) & 1;
        let (lo, hi) = (f.at(bit, 0), f.at(bit, 1));
        for j in (0..len).rev() {
            let v = out[j];
            out[2 * j] = v * lo;
            out[2 * j + 1] = v * hi;
        }
        len *= 2;
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Entries below `1e-14` of the largest one are flushed to zero first: the
/// tridiagonal reduction can produce NaNs on nearly diagonal matrices whose
/// off-diagonal content is roundoff, and the flush moves each eigenvalue by
/// at most `dim * 1e-14` of the largest entry.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cut = scale * 1e-14;
    let flushed = m.map(|z| if z.norm() < cut { ZERO } else { z });
    let mut ev: Vec<f64> = flushed.symmetric_eigenvalues().iter().copied().collect();
    assert!(
        ev.iter().all(|l| l.is_finite()),
        "Hermitian eigensolver returned non-finite values"
    );
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Single-qubit gates used across the crate.
pub mod gates {
    use super::{Mat2, C64, I, ONE, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn hadamard() -> Mat2 {
        Mat2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    }

    pub fn phase_s() -> Mat2 {
        Mat2::new(ONE, ZERO, ZERO, I)
    }

    pub fn pauli_x() -> Mat2 {
        Mat2::real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Mat2 {
        Mat2::new(ZERO, -I, I, ZERO)
    }

    pub fn pauli_z() -> Mat2 {
        Mat2::real(1.0, 0.0, 0.0, -1.0)
    }

    /// `|k><k|` for a computational basis outcome.
    pub fn projector(k: u8) -> Mat2 {
        if k == 0 {
            Mat2::real(1.0, 0.0, 0.0, 0.0)
        } else {
            Mat2::real(0.0, 0.0, 0.0, 1.0)
        }
    }

    pub fn from_parts(entries: [C64; 4]) -> Mat2 {
        Mat2::new(entries[0], entries[1], entries[2], entries[3])
    }
}
