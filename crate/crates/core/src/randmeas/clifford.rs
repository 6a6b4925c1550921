use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{gates, Mat2, C64};

/// The 24 single-qubit Clifford unitaries (modulo global phase) in a frozen
/// order: element `4 j + a` is `V_j S^a` with
/// `V = [I, X, H, H X, S H, S H X]`.
///
/// `V_j Z V_j^dagger` runs through `Z, -Z, X, -X, Y, -Y`, and `S^a` fixes `Z`,
/// so the six cosets are distinct and each contains four elements.
pub fn clifford_group() -> &'static [Mat2; 24] {
    static GROUP: OnceLock<[Mat2; 24]> = OnceLock::new();
    GROUP.get_or_init(|| {
        let (h, s, x) = (gates::hadamard(), gates::phase_s(), gates::pauli_x());
        let cosets = [Mat2::IDENTITY, x, h, h * x, s * h, s * h * x];
        let mut out = [Mat2::IDENTITY; 24];
        for (j, v) in cosets.iter().enumerate() {
            let mut power = Mat2::IDENTITY;
            for a in 0..4 {
                out[4 * j + a] = *v * power;
                power = power * s;
            }
        }
        out
    })
}

/// Uniform draw from [`clifford_group`].
pub fn sample_single_qubit_clifford<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    clifford_group()[rng.random_range(0..24)]
}

/// Haar-random element of U(2) from a normalised complex Gaussian pair
/// `(a, b)`: `[[a, -b*], [b, a*]]`.
pub fn sample_haar_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut g = || -> f64 { rng.sample(StandardNormal) };
    let a = C64::new(g(), g());
    let b = C64::new(g(), g());
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / norm, b / norm);
    Mat2::new(a, -b.conj(), b, a.conj())
}
