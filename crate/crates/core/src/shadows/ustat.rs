//! U-statistic kernels over snapshot subsets.
//!
//! Two evaluation routes compute identical quantities:
//!
//! * factorized: explicit loops over pairs/triples/quadruples, each kernel a
//!   product of per-qubit 2x2 traces. Cost `O(C(M, n) |AB| T^n)` for
//!   snapshots made of `T` product terms, memory `O(M T)`.
//! * dense: power sums of `S = sum_i X_i` with inclusion-exclusion of the
//!   coinciding indices. Cost `O(M d^2 + d^3)` with `d = 2^|AB|`.
//!
//! Both report the kernel sum over unordered subsets plus, for every index,
//! the sum over the subsets containing it, which is all the delete-one
//! jackknife needs.

use rayon::prelude::*;

use super::snapshot::shadow_factor;
use super::Snapshot;
use crate::linalg::{kron_row, trace_kron_mul, trace_mul, CMatrix, Mat2, C64, ONE, ZERO};
use crate::qstate::PartitionSpec;
use crate::stats::CompensatedSum;
use crate::{Error, Result};

/// Fixed number of work blocks for the factorized loops; results do not depend
/// on how blocks are scheduled onto threads.
const BLOCKS: usize = 64;

/// Largest register handled by the dense route.
pub(crate) const DENSE_MAX_QUBITS: usize = 10;

/// Snapshots as weighted sums of product terms, `k` factors per term, with
/// the `A` factors already transposed where requested. A single-shot
/// snapshot is one term of weight 1.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    k: usize,
    m: usize,
    factors: Vec<Mat2>,
    weights: Vec<f64>,
    /// Outcome bit string of each term, first site most significant.
    bits: Vec<u32>,
    /// Term range of each row.
    rows: Vec<(usize, usize)>,
    /// Per-site basis change `W` with `X = W^dagger diag(v) W`, for rows with
    /// more than one term.
    bases: Vec<Option<Vec<Mat2>>>,
}

impl Prepared {
    pub(crate) fn new(
        snapshots: &[Snapshot],
        partition: &PartitionSpec,
        transpose_a: bool,
    ) -> Result<Self> {
        let sites = partition.ab_sites();
        let flip: Vec<bool> = sites
            .iter()
            .map(|&s| transpose_a && partition.contains_a(s))
            .collect();
        Self::on_sites(snapshots, &sites, &flip)
    }

    /// Rows on `sites`, transposing the factors of the sites flagged in `flip`.
    fn on_sites(snapshots: &[Snapshot], sites: &[usize], flip: &[bool]) -> Result<Self> {
        let k = sites.len();
        let mut out = Prepared {
            k,
            m: 0,
            factors: Vec::with_capacity(snapshots.len() * k),
            weights: Vec::with_capacity(snapshots.len()),
            bits: Vec::with_capacity(snapshots.len()),
            rows: Vec::with_capacity(snapshots.len()),
            bases: Vec::with_capacity(snapshots.len()),
        };
        for (r, snap) in snapshots.iter().enumerate() {
            let start = out.weights.len();
            let resolved = if snap.is_product() {
                None
            } else if snap.sites() == sites {
                Some(snap.clone())
            } else {
                Some(snap.restrict(sites).map_err(|_| {
                    Error::invalid(format!("snapshot {r} does not cover the partition sites"))
                })?)
            };
            match resolved.as_ref().and_then(|s| s.resolved().cloned()) {
                Some(res) => {
                    for &(b, w) in &res.outcomes {
                        for (q, u) in res.unitaries.iter().enumerate() {
                            let f = shadow_factor(u, (b >> (k - 1 - q) & 1) as u8);
                            out.factors.push(if flip[q] { f.transpose() } else { f });
                        }
                        out.weights.push(w);
                        out.bits.push(b);
                    }
                    let basis = res
                        .unitaries
                        .iter()
                        .zip(flip)
                        .map(|(u, &f)| if f { u.adjoint().transpose() } else { *u })
                        .collect();
                    out.bases.push(Some(basis));
                }
                None => {
                    for (&s, &f) in sites.iter().zip(flip) {
                        let x = snap.factor(s).ok_or_else(|| {
                            Error::invalid(format!("snapshot {r} has no factor for site {s}"))
                        })?;
                        out.factors.push(if f { x.transpose() } else { *x });
                    }
                    out.weights.push(1.0);
                    out.bits.push(0);
                    out.bases.push(None);
                }
            }
            out.rows.push((start, out.weights.len()));
            out.m += 1;
        }
        Ok(out)
    }

    /// Mean number of product terms per row.
    pub(crate) fn mean_terms(&self) -> f64 {
        self.weights.len() as f64 / self.m.max(1) as f64
    }

    /// Fraction of rows that are not a single product.
    fn resolved_fraction(&self) -> f64 {
        self.bases.iter().filter(|b| b.is_some()).count() as f64 / self.m.max(1) as f64
    }

    #[inline]
    fn term(&self, t: usize) -> &[Mat2] {
        &self.factors[t * self.k..(t + 1) * self.k]
    }

    #[inline]
    fn terms(&self, i: usize) -> impl Iterator<Item = (f64, &[Mat2])> + '_ {
        let (a, b) = self.rows[i];
        (a..b).map(move |t| (self.weights[t], self.term(t)))
    }

    /// Sub-sample of the given snapshot indices.
    pub(crate) fn select(&self, indices: impl Iterator<Item = usize>) -> Prepared {
        let mut out = Prepared {
            k: self.k,
            m: 0,
            factors: Vec::new(),
            weights: Vec::new(),
            bits: Vec::new(),
            rows: Vec::new(),
            bases: Vec::new(),
        };
        for i in indices {
            let (a, b) = self.rows[i];
            let start = out.weights.len();
            out.factors
                .extend_from_slice(&self.factors[a * self.k..b * self.k]);
            out.weights.extend_from_slice(&self.weights[a..b]);
            out.bits.extend_from_slice(&self.bits[a..b]);
            out.rows.push((start, out.weights.len()));
            out.bases.push(self.bases[i].clone());
            out.m += 1;
        }
        out
    }
}

/// Kernel sums of a U-statistic of order `order`.
#[derive(Clone, Debug)]
pub(crate) struct KernelSums {
    pub order: usize,
    pub m: usize,
    /// Sum of the kernel over all unordered `order`-subsets.
    pub total: f64,
    /// For each index, the kernel sum over subsets containing it.
    pub per_index: Vec<f64>,
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl KernelSums {
    pub(crate) fn value(&self) -> f64 {
        self.total / binomial(self.m, self.order)
    }

    /// U-statistic with snapshot `r` removed.
    pub(crate) fn leave_one_out(&self, r: usize) -> f64 {
        (self.total - self.per_index[r]) / binomial(self.m - 1, self.order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Route {
    Factorized,
    Dense,
}

/// Cheaper route for an order-`order` statistic on `p`.
pub(crate) fn route_for(order: usize, p: &Prepared) -> Route {
    cheaper_route(order, p.m, p.k, p.mean_terms(), p.resolved_fraction())
}

/// Cheaper route for `m` snapshots of `k` qubits with `terms` product terms
/// on average, a fraction `resolved` of them multi-term.
pub(crate) fn cheaper_route(order: usize, m: usize, k: usize, terms: f64, resolved: f64) -> Route {
    if k > DENSE_MAX_QUBITS || order > 3 {
        return Route::Factorized;
    }
    let d = (1usize << k) as f64;
    let factorized = binomial(m, order) * k as f64 * order as f64 * terms.powi(order as i32);
    let dense = m as f64 * d * d * (3.0 + 16.0 * k as f64 * resolved) + 2.0 * d * d * d;
    if dense < factorized {
        Route::Dense
    } else {
        Route::Factorized
    }
}

struct Block {
    total: CompensatedSum,
    per_index: Vec<f64>,
}

fn run_blocks<F>(m: usize, order: usize, body: F) -> KernelSums
where
    F: Fn(usize, &mut Block) + Sync,
{
    let blocks: Vec<Block> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut block = Block {
                total: CompensatedSum::new(),
                per_index: vec![0.0; m],
            };
            for i in (b..m).step_by(BLOCKS) {
                body(i, &mut block);
            }
            block
        })
        .collect();
    let mut total = CompensatedSum::new();
    let mut per_index = vec![0.0; m];
    for b in &blocks {
        total.merge(&b.total);
        for (acc, v) in per_index.iter_mut().zip(&b.per_index) {
            *acc += v;
        }
    }
    KernelSums {
        order,
        m,
        total: total.value(),
        per_index,
    }
}

#[inline]
fn trace_of_products(a: &[Mat2], b: &[Mat2]) -> C64 {
    a.iter()
        .zip(b)
        .fold(ONE, |acc, (x, y)| acc * x.trace_mul(y))
}

pub(crate) fn pairs_factorized(p: &Prepared) -> KernelSums {
    let m = p.m;
    run_blocks(m, 2, |i, block| {
        let mut row = CompensatedSum::new();
        for j in i + 1..m {
            let mut t = ZERO;
            for (wa, a) in p.terms(i) {
                for (wb, b) in p.terms(j) {
                    t += trace_of_products(a, b) * (wa * wb);
                }
            }
            row.add(t.re);
            block.per_index[j] += t.re;
        }
        block.per_index[i] += row.value();
        block.total.merge(&row);
    })
}

pub(crate) fn triples_factorized(p: &Prepared) -> KernelSums {
    let (m, k) = (p.m, p.k);
    run_blocks(m, 3, |i, block| {
        // products x_i x_j for every pair of terms, with their weights
        let mut pair: Vec<Mat2> = Vec::new();
        let mut pair_w: Vec<f64> = Vec::new();
        let mut row_i = CompensatedSum::new();
        for j in i + 1..m {
            pair.clear();
            pair_w.clear();
            for (wa, a) in p.terms(i) {
                for (wb, b) in p.terms(j) {
                    pair.extend(a.iter().zip(b).map(|(x, y)| *x * *y));
                    pair_w.push(wa * wb);
                }
            }
            let mut row_ij = CompensatedSum::new();
            for l in j + 1..m {
                let mut t = ZERO;
                for (ab, w) in pair.chunks_exact(k).zip(&pair_w) {
                    for (wc, c) in p.terms(l) {
                        t += trace_of_products(ab, c) * (w * wc);
                    }
                }
                row_ij.add(t.re);
                block.per_index[l] += t.re;
            }
            block.per_index[j] += row_ij.value();
            row_i.merge(&row_ij);
        }
        block.per_index[i] += row_i.value();
        block.total.merge(&row_i);
    })
}

/// Real part of `Tr(x_1 x_2 x_3 x_4)` for the snapshots `idx`.
#[inline]
fn chain4(p: &Prepared, idx: [usize; 4]) -> f64 {
    let mut acc = ZERO;
    for (w0, r0) in p.terms(idx[0]) {
        for (w1, r1) in p.terms(idx[1]) {
            for (w2, r2) in p.terms(idx[2]) {
                for (w3, r3) in p.terms(idx[3]) {
                    let t = (0..p.k).fold(ONE, |acc, q| {
                        acc * (r0[q] * r1[q] * r2[q]).trace_mul(&r3[q])
                    });
                    acc += t * (w0 * w1 * w2 * w3);
                }
            }
        }
    }
    acc.re
}

/// Order-4 kernel symmetrised over all 24 orderings. Cyclic shifts leave the
/// trace unchanged and reversal conjugates it, so the 24 real parts take at
/// most three distinct values, each eight times.
pub(crate) fn quadruples_factorized(p: &Prepared) -> KernelSums {
    let m = p.m;
    run_blocks(m, 4, |i, block| {
        for j in i + 1..m {
            for k in j + 1..m {
                for l in k + 1..m {
                    let h = (chain4(p, [i, j, k, l])
                        + chain4(p, [i, j, l, k])
                        + chain4(p, [i, k, j, l]))
                        / 3.0;
                    block.total.add(h);
                    for idx in [i, j, k, l] {
                        block.per_index[idx] += h;
                    }
                }
            }
        }
    })
}

/// Row `i` in dense form.
enum DenseRow<'a> {
    /// `w * (f_1 ⊗ ... ⊗ f_k)`.
    Product(f64, &'a [Mat2]),
    /// `W^dagger diag(v) W` with `W = w_1 ⊗ ... ⊗ w_k`.
    Diagonal(&'a [Mat2], Vec<f64>),
}

impl Prepared {
    fn dense_row(&self, i: usize) -> DenseRow<'_> {
        let (a, b) = self.rows[i];
        match &self.bases[i] {
            None => DenseRow::Product(self.weights[a], self.term(a)),
            Some(basis) => {
                // diagonal of sum_b w_b ⊗_q (3|b_q><b_q| - 1) in the measured basis
                let d = 1usize << self.k;
                let mut v = vec![0.0; d];
                for t in a..b {
                    v[self.bits[t] as usize] += self.weights[t];
                }
                for q in 0..self.k {
                    let bit = 1usize << (self.k - 1 - q);
                    for c in (0..d).filter(|c| c & bit == 0) {
                        let (x0, x1) = (v[c], v[c | bit]);
                        v[c] = 2.0 * x0 - x1;
                        v[c | bit] = 2.0 * x1 - x0;
                    }
                }
                DenseRow::Diagonal(basis, v)
            }
        }
    }
}

impl DenseRow<'_> {
    /// `Tr X^n`.
    fn trace_power(&self, n: i32) -> C64 {
        match self {
            DenseRow::Product(w, f) => f.iter().fold(C64::from(w.powi(n)), |acc, x| {
                let t = match n {
                    1 => x.trace(),
                    2 => x.trace_mul(x),
                    _ => (*x * *x).trace_mul(x),
                };
                acc * t
            }),
            DenseRow::Diagonal(_, v) => C64::from(v.iter().map(|x| x.powi(n)).sum::<f64>()),
        }
    }

    /// Dense `X^n` for `n` in `1..=2`.
    fn power(&self, n: i32) -> CMatrix {
        match self {
            DenseRow::Product(w, f) => {
                let d = 1usize << f.len();
                let fs: Vec<Mat2> = if n == 1 { f.to_vec() } else { squares(f) };
                let mut out = CMatrix::zeros(d, d);
                add_kron(&fs, w.powi(n), &mut out, &mut vec![ZERO; d]);
                out
            }
            DenseRow::Diagonal(basis, v) => conjugated_diagonal(basis, v.iter().map(|x| x.powi(n))),
        }
    }

    fn add_power_to(&self, n: i32, target: &mut CMatrix, buf: &mut [C64]) {
        match self {
            DenseRow::Product(w, f) => {
                let fs: Vec<Mat2> = if n == 1 { f.to_vec() } else { squares(f) };
                add_kron(&fs, w.powi(n), target, buf);
            }
            DenseRow::Diagonal(..) => *target += self.power(n),
        }
    }

    /// `Tr(X^n Y)`.
    fn trace_power_with(&self, n: i32, y: &CMatrix) -> C64 {
        match self {
            DenseRow::Product(w, f) => {
                let fs: Vec<Mat2> = if n == 1 { f.to_vec() } else { squares(f) };
                trace_kron_mul(&fs, y) * w.powi(n)
            }
            DenseRow::Diagonal(..) => trace_mul(&self.power(n), y),
        }
    }
}

/// `W^dagger diag(v) W` for `W = w_1 ⊗ ... ⊗ w_k`.
fn conjugated_diagonal(basis: &[Mat2], v: impl Iterator<Item = f64>) -> CMatrix {
    let k = basis.len();
    let d = 1usize << k;
    // D W row by row, then W^dagger from the left one qubit at a time
    let mut m = CMatrix::zeros(d, d);
    let mut row = vec![ZERO; d];
    for (r, vr) in v.enumerate() {
        kron_row(basis, r, &mut row);
        for (c, x) in row.iter().enumerate() {
            m[(r, c)] = *x * vr;
        }
    }
    let data = m.as_mut_slice();
    for (q, w) in basis.iter().enumerate() {
        let bit = 1usize << (k - 1 - q);
        let g = w.adjoint();
        for c in 0..d {
            let col = &mut data[c * d..(c + 1) * d];
            for r in (0..d).filter(|r| r & bit == 0) {
                let (x0, x1) = (col[r], col[r | bit]);
                col[r] = g.at(0, 0) * x0 + g.at(0, 1) * x1;
                col[r | bit] = g.at(1, 0) * x0 + g.at(1, 1) * x1;
            }
        }
    }
    m
}

/// `target += scale * (f_1 ⊗ ... ⊗ f_k)`.
fn add_kron(factors: &[Mat2], scale: f64, target: &mut CMatrix, row: &mut [C64]) {
    let d = target.nrows();
    for r in 0..d {
        kron_row(factors, r, row);
        for (c, v) in row.iter().enumerate() {
            target[(r, c)] += *v * scale;
        }
    }
}

fn squares(row: &[Mat2]) -> Vec<Mat2> {
    row.iter().map(|x| *x * *x).collect()
}

/// Sum `S` of the dense snapshots and sum `Q` of their squares.
fn dense_sums(p: &Prepared, with_squares: bool) -> (CMatrix, Option<CMatrix>) {
    let d = 1usize << p.k;
    let mut s = CMatrix::zeros(d, d);
    let mut q = with_squares.then(|| CMatrix::zeros(d, d));
    let mut buf = vec![ZERO; d];
    for i in 0..p.m {
        let row = p.dense_row(i);
        row.add_power_to(1, &mut s, &mut buf);
        if let Some(q) = q.as_mut() {
            row.add_power_to(2, q, &mut buf);
        }
    }
    (s, q)
}

/// Mean of the dense snapshot operators on `sites`.
pub(crate) fn mean_operator(snapshots: &[Snapshot], sites: &[usize]) -> Result<CMatrix> {
    let p = Prepared::on_sites(snapshots, sites, &vec![false; sites.len()])?;
    let (s, _) = dense_sums(&p, false);
    Ok(s / C64::from(p.m as f64))
}

/// With `per_index == false` the per-index sums are left empty, which skips
/// the `O(M d^2)` contractions against `S`.
pub(crate) fn pairs_dense(p: &Prepared, per_index: bool) -> KernelSums {
    let (s, _) = dense_sums(p, false);
    let tr_s2 = trace_mul(&s, &s);
    let mut diag = ZERO;
    let mut sums = Vec::with_capacity(if per_index { p.m } else { 0 });
    for r in 0..p.m {
        let row = p.dense_row(r);
        let sq = row.trace_power(2);
        diag += sq;
        if per_index {
            sums.push((row.trace_power_with(1, &s) - sq).re);
        }
    }
    KernelSums {
        order: 2,
        m: p.m,
        total: 0.5 * (tr_s2 - diag).re,
        per_index: sums,
    }
}

pub(crate) fn triples_dense(p: &Prepared, per_index: bool) -> KernelSums {
    let (s, q) = dense_sums(p, true);
    let q = q.expect("requested");
    let s2 = &s * &s;
    let tr_s3 = trace_mul(&s2, &s);
    // sum_r Tr(X_r^2 S) = Tr(Q S)
    let mut corr = trace_mul(&q, &s) * 3.0;
    let mut sums = Vec::with_capacity(if per_index { p.m } else { 0 });
    for r in 0..p.m {
        let row = p.dense_row(r);
        let x3 = row.trace_power(3);
        corr -= x3 * 2.0;
        if per_index {
            // ordered (j, l) pairs of other indices, halved to unordered
            let x2_s = row.trace_power_with(2, &s);
            let c =
                row.trace_power_with(1, &s2) - x2_s * 2.0 + x3 * 2.0 - row.trace_power_with(1, &q);
            sums.push(0.5 * c.re);
        }
    }
    KernelSums {
        order: 3,
        m: p.m,
        total: (tr_s3 - corr).re / 6.0,
        per_index: sums,
    }
}

pub(crate) fn kernel_sums(
    p: &Prepared,
    order: usize,
    route: Route,
    per_index: bool,
) -> Result<KernelSums> {
    if p.m < order {
        return Err(Error::InsufficientData {
            needed: order,
            got: p.m,
        });
    }
    if route == Route::Dense && p.k > DENSE_MAX_QUBITS {
        return Err(Error::resource(format!(
            "dense route limited to {DENSE_MAX_QUBITS} qubits, got {}",
            p.k
        )));
    }
    Ok(match (order, route) {
        (2, Route::Factorized) => pairs_factorized(p),
        (2, Route::Dense) => pairs_dense(p, per_index),
        (3, Route::Factorized) => triples_factorized(p),
        (3, Route::Dense) => triples_dense(p, per_index),
        (4, _) => quadruples_factorized(p),
        (n, _) => return Err(Error::UnsupportedOrder(n)),
    })
}
