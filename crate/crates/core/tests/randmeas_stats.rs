mod common;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use ptmoments::linalg::{gates, kron_all, trace_mul, Mat2};
use ptmoments::qstate::PureState;
use ptmoments::randmeas::{
    clifford_group, generate_dataset, sample_haar_su2, sample_single_qubit_clifford, Ensemble,
};

fn same_up_to_phase(a: &Mat2, b: &Mat2) -> bool {
    let overlap = a.adjoint().trace_mul(b).norm();
    (overlap - 2.0).abs() < 1e-9
}

#[test]
fn clifford_draws_are_uniform() {
    let group = clifford_group();
    let mut rng = common::rng(21);
    let mut counts = [0usize; 24];
    for _ in 0..24_000 {
        let u = sample_single_qubit_clifford(&mut rng);
        let idx = group.iter().position(|g| same_up_to_phase(g, &u)).unwrap();
        counts[idx] += 1;
    }
    for (i, c) in counts.iter().enumerate() {
        assert!((850..=1150).contains(c), "element {i} drawn {c} times");
    }
}

/// Permutation of the three tensor factors of an 8-dimensional space.
fn permutation_operator(perm: [usize; 3]) -> DMatrix<C64> {
    let mut p = DMatrix::zeros(8, 8);
    for k in 0..8usize {
        let bits = [(k >> 2) & 1, (k >> 1) & 1, k & 1];
        let mut out = [0; 3];
        for c in 0..3 {
            out[perm[c]] = bits[c];
        }
        p[(out[0] << 2 | out[1] << 1 | out[2], k)] = C64::new(1.0, 0.0);
    }
    p
}

/// Haar twirl as the Hilbert-Schmidt projection onto the span of the six
/// copy permutations.
fn haar_twirl(x: &DMatrix<C64>, perms: &[DMatrix<C64>]) -> DMatrix<C64> {
    let n = perms.len();
    let gram = DMatrix::from_fn(n, n, |s, t| trace_mul(&perms[s].adjoint(), &perms[t]));
    let rhs = DMatrix::from_fn(n, 1, |s, _| trace_mul(&perms[s].adjoint(), x));
    let coeffs = gram.pseudo_inverse(1e-10).unwrap() * rhs;
    perms
        .iter()
        .zip(coeffs.iter())
        .fold(DMatrix::zeros(8, 8), |acc, (p, c)| acc + p * *c)
}

#[test]
fn clifford_group_is_a_three_design() {
    let perms: Vec<_> = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ]
    .into_iter()
    .map(permutation_operator)
    .collect();
    let triples: Vec<DMatrix<C64>> = clifford_group()
        .iter()
        .map(|u| kron_all(&[*u, *u, *u]))
        .collect();
    for a in 0..8 {
        for b in 0..8 {
            let mut x = DMatrix::zeros(8, 8);
            x[(a, b)] = C64::new(1.0, 0.0);
            let twirled = triples
                .iter()
                .fold(DMatrix::zeros(8, 8), |acc, u| acc + u * &x * u.adjoint())
                / C64::new(24.0, 0.0);
            let diff = (twirled - haar_twirl(&x, &perms)).camax();
            assert!(diff < 1e-10, "input E_{a}{b}: {diff}");
        }
    }
}

#[test]
fn haar_first_moment() {
    let mut rng = common::rng(22);
    let n = 100_000;
    let mut acc = Mat2::real(0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let u = sample_haar_su2(&mut rng);
        acc = acc + u * gates::projector(0) * u.adjoint();
    }
    let mean = acc.scale(1.0 / n as f64);
    let target = Mat2::real(0.5, 0.0, 0.0, 0.5);
    assert!((mean - target).max_abs() < 0.01);
}

/// Asymptotic Kolmogorov p-value for statistic `d` at sample size `n`.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let sum: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

#[test]
fn haar_overlap_is_uniform() {
    let mut rng = common::rng(23);
    let n = 10_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| sample_haar_su2(&mut rng).at(0, 0).norm_sqr())
        .collect();
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| f64::max(x - i as f64 / n as f64, (i + 1) as f64 / n as f64 - x))
        .fold(0.0, f64::max);
    let p = ks_p_value(d, n);
    assert!(p > 0.01, "KS statistic {d}, p = {p}");
}

#[test]
fn product_zero_state_gives_uniform_marginals() {
    let psi = PureState::basis(4, 0).unwrap();
    let m = 4000;
    let ds = generate_dataset(&psi, &[1, 2, 3, 4], m, 1, Ensemble::Clifford, 24).unwrap();
    let sigma = (m as f64 * 0.25).sqrt();
    for pos in 0..4 {
        let ones = ds.records.iter().filter(|r| r.bit(0, pos) == 1).count() as f64;
        assert!(
            (ones - m as f64 / 2.0).abs() < 5.0 * sigma,
            "qubit {pos}: {ones} ones"
        );
    }
}

#[test]
fn generation_at_desk_scale() {
    let psi = ptmoments::qstate::make_ghz(6).unwrap();
    let start = std::time::Instant::now();
    let ds = generate_dataset(&psi, &[1, 2, 3, 4, 5, 6], 500, 150, Ensemble::Clifford, 25).unwrap();
    assert_eq!(ds.m(), 500);
    assert!(ds.records.iter().all(|r| r.outcomes.len() == 150));
    assert!(start.elapsed().as_secs() < 60);
}
