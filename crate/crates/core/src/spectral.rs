//! Lowest eigenpairs of the pencil `(K, M)` with residual certificates,
//! degeneracy clusters, and cross-weight comparisons.
//!
//! The pencil is reduced to `A = M^{-1/2} K M^{-1/2}`. Small problems are
//! diagonalized densely; larger ones use
//! Chebyshev-filtered subspace iteration with Rayleigh–Ritz extraction.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{total_eigenvalue, OperatorPair};
use crate::error::{Error, Result};
use crate::geometry::Section;
use crate::linalg::{dot, hermitian_eigh, orthonormalize, CsrMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub k: usize,
    /// Residuals must satisfy `residual ≤ tol · (λ + 1)`.
    pub tol: f64,
    pub seed: u64,
    /// Outer-iteration budget; `None` means `500 · k`.
    pub max_iterations: Option<usize>,
    /// Problems up to this size are solved densely.
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { k: 8, tol: 1e-8, seed: 0, max_iterations: None, dense_limit: 600 }
    }
}

impl SolverOptions {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }
}

/// One eigenpair of `L_m`: the section is `M`-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub m: i32,
    pub lambda: f64,
    pub section: Section,
    pub residual: f64,
}

impl EigenPair {
    /// Eigenvalue of the full bundle Laplacian, `λ + m²`.
    pub fn total(&self) -> f64 {
        total_eigenvalue(self.lambda, self.m)
    }
}

/// Computes the `k` lowest eigenpairs of `op`.
pub fn lowest_eigenpairs(op: &OperatorPair, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    let dim = op.size();
    if opts.k == 0 || 4 * opts.k > dim {
        return Err(Error::BadEigenCount { k: opts.k, dim });
    }
    let a = op.reduced();
    let (vals, vecs) = if dim <= opts.dense_limit {
        dense_lowest(&a, opts.k)
    } else {
        subspace_lowest(&a, opts)?
    };
    let inv_sqrt_m: Vec<f64> = op.mass().iter().map(|w| 1.0 / libm::sqrt(*w)).collect();
    let mut out = Vec::with_capacity(opts.k);
    for (j, (lambda, x)) in vals.into_iter().zip(vecs).enumerate() {
        let mut f: Vec<Complex64> = x.iter().zip(&inv_sqrt_m).map(|(v, s)| v * s).collect();
        phase_normalize(&mut f);
        let residual = op.residual(&f, lambda);
        if !(residual <= opts.tol * (lambda.abs() + 1.0)) {
            return Err(Error::NotConverged { index: j, residual, iterations: 0 });
        }
        let section = section_from(op, f);
        out.push(EigenPair { m: op.m(), lambda, section, residual });
    }
    Ok(out)
}

fn section_from(op: &OperatorPair, values: Vec<Complex64>) -> Section {
    Section::from_parts(op.m(), op.dim(), op.n(), *op.flux(), values)
}

/// Rotates `f` so that its first largest-modulus entry is real positive.
fn phase_normalize(f: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (i, v) in f.iter().enumerate() {
        let m = v.norm();
        if m > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = m;
        }
    }
    if best_mod > 0.0 {
        let p = f[best].conj() / best_mod;
        for v in f.iter_mut() {
            *v *= p;
        }
    }
}

fn dense_lowest(a: &CsrMatrix, k: usize) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = a.n();
    let (vals, vecs) = hermitian_eigh(&a.to_dense(), n);
    let cols = (0..k).map(|j| (0..n).map(|i| vecs[i * n + j]).collect()).collect();
    (vals[..k].to_vec(), cols)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Rayleigh–Ritz on the orthonormal block `y`; returns Ritz values, Ritz
/// vectors and their images under `A`.
fn rayleigh_ritz(a: &CsrMatrix, y: &[Vec<Complex64>]) -> (Vec<f64>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let p = y.len();
    let n = a.n();
    let ay: Vec<Vec<Complex64>> = y
        .iter()
        .map(|v| {
            let mut w = vec![ZERO; n];
            a.mul_vec(v, &mut w);
            w
        })
        .collect();
    let mut h = vec![ZERO; p * p];
    for i in 0..p {
        for j in i..p {
            let z = dot(&y[i], &ay[j]);
            h[i * p + j] = z;
            h[j * p + i] = z.conj();
        }
        h[i * p + i] = Complex64::new(h[i * p + i].re, 0.0);
    }
    let (theta, v) = hermitian_eigh(&h, p);
    let combine = |block: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
        (0..p)
            .map(|j| {
                let mut out = vec![ZERO; n];
                for (l, col) in block.iter().enumerate() {
                    let c = v[l * p + j];
                    if c != ZERO {
                        for (o, x) in out.iter_mut().zip(col) {
                            *o += c * x;
                        }
                    }
                }
                out
            })
            .collect()
    };
    (theta, combine(y), combine(&ay))
}

/// Scaled Chebyshev filter damping `[lo, hi]` and amplifying below `lo`;
/// `floor` estimates the bottom of the spectrum.
fn chebyshev_filter(a: &CsrMatrix, x: &[Complex64], degree: usize, lo: f64, hi: f64, floor: f64) -> Vec<Complex64> {
    let n = a.n();
    let e = (hi - lo) / 2.0;
    let c = (hi + lo) / 2.0;
    let mut sigma = e / (floor - c);
    let tau = 2.0 / sigma;
    let mut prev = x.to_vec();
    let mut cur = vec![ZERO; n];
    a.mul_vec(x, &mut cur);
    for (y, xv) in cur.iter_mut().zip(x) {
        *y = (*y - xv * c) * (sigma / e);
    }
    let mut tmp = vec![ZERO; n];
    for _ in 1..degree {
        let sigma_new = 1.0 / (tau - sigma);
        a.mul_vec(&cur, &mut tmp);
        for i in 0..n {
            let next = (tmp[i] - cur[i] * c) * (2.0 * sigma_new / e) - prev[i] * (sigma * sigma_new);
            prev[i] = cur[i];
            cur[i] = next;
        }
        sigma = sigma_new;
    }
    cur
}

fn subspace_lowest(a: &CsrMatrix, opts: &SolverOptions) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = a.n();
    let k = opts.k;
    let p = (k + k.max(8)).min(n);
    let budget = opts.max_iterations.unwrap_or(500 * k);
    let upper = a.gershgorin_upper();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<Complex64>> = (0..p).map(|_| random_vector(&mut rng, n)).collect();
    reorthonormalize(&mut block, &mut rng);
    let (mut theta, mut x, mut ax) = rayleigh_ritz(a, &block);
    let mut worst = (0, f64::INFINITY);
    for iter in 0..budget {
        worst = (0, 0.0);
        let mut done = true;
        for j in 0..k {
            let r: f64 = libm::sqrt(ax[j].iter().zip(&x[j]).map(|(u, v)| (u - v * theta[j]).norm_sqr()).sum());
            if !(r <= 0.5 * opts.tol * (theta[j].abs() + 1.0)) {
                if done {
                    worst = (j, r);
                }
                done = false;
            }
        }
        if done {
            let vecs = x.into_iter().take(k).collect();
            return Ok((theta[..k].to_vec(), vecs));
        }
        if iter + 1 == budget {
            break;
        }
        let lo = theta[p - 1];
        let floor = theta[0] - 1e-3 * (lo - theta[0]).abs() - 1e-12;
        let hi = upper.max(lo + 1.0);
        let degree = filter_degree(theta[0], lo, hi);
        block = x.iter().map(|v| chebyshev_filter(a, v, degree, lo, hi, floor)).collect();
        reorthonormalize(&mut block, &mut rng);
        (theta, x, ax) = rayleigh_ritz(a, &block);
    }
    Err(Error::NotConverged { index: worst.0, residual: worst.1, iterations: budget })
}

/// Degree making the filter gain at the bottom Ritz value about `1e4`.
fn filter_degree(bottom: f64, lo: f64, hi: f64) -> usize {
    let e = (hi - lo) / 2.0;
    let c = (hi + lo) / 2.0;
    let x0 = ((c - bottom) / e).max(1.0 + 1e-12);
    let rate = libm::acosh(x0);
    let d = libm::ceil(libm::acosh(1e4) / rate);
    (d as usize).clamp(8, 200)
}

fn reorthonormalize(block: &mut [Vec<Complex64>], rng: &mut ChaCha8Rng) {
    for _ in 0..4 {
        let collapsed = orthonormalize(block);
        if collapsed.is_empty() {
            return;
        }
        let n = block[0].len();
        for j in collapsed {
            block[j] = random_vector(rng, n);
        }
    }
}

/// One cluster of consecutive eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub start: usize,
    pub size: usize,
    pub mean: f64,
    pub spread: f64,
    /// Distance to the next cluster; `None` for the last one.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterReport {
    pub groups: Vec<Cluster>,
}

impl ClusterReport {
    /// Cluster containing eigenvalue `index`.
    pub fn cluster_of(&self, index: usize) -> Option<&Cluster> {
        self.groups.iter().find(|c| index >= c.start && index < c.start + c.size)
    }

    pub fn is_simple(&self, index: usize) -> bool {
        self.cluster_of(index).is_some_and(|c| c.size == 1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|c| c.size).collect()
    }
}

/// Greedy clustering of sorted eigenvalues: neighbors closer than
/// `gap_tol · (1 + λ)` share a cluster.
pub fn detect_clusters(lambdas: &[f64], gap_tol: f64) -> ClusterReport {
    let mut groups: Vec<Cluster> = Vec::new();
    let mut start = 0;
    for i in 1..=lambdas.len() {
        let split = i == lambdas.len() || lambdas[i] - lambdas[i - 1] >= gap_tol * (1.0 + lambdas[i - 1].abs());
        if split {
            let members = &lambdas[start..i];
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            let spread = members[members.len() - 1] - members[0];
            let gap = lambdas.get(i).map(|next| next - members[members.len() - 1]);
            groups.push(Cluster { start, size: i - start, mean, spread, gap });
            start = i;
        }
    }
    ClusterReport { groups }
}

pub fn lambdas(eigs: &[EigenPair]) -> Vec<f64> {
    eigs.iter().map(|e| e.lambda).collect()
}

/// A pair of total eigenvalues from different weights that (nearly) agree.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    pub m1: i32,
    pub index1: usize,
    pub m2: i32,
    pub index2: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisjointnessReport {
    /// Smallest distance between total eigenvalues of distinct weights;
    /// `None` with fewer than two weights.
    pub min_distance: Option<f64>,
    pub collisions: Vec<Collision>,
}

/// Compares total eigenvalues `λ + m²` across weights.
pub fn cross_weight_disjointness(by_weight: &[(i32, Vec<f64>)], tol: f64) -> DisjointnessReport {
    let mut report = DisjointnessReport::default();
    for (a, (m1, l1)) in by_weight.iter().enumerate() {
        for (m2, l2) in &by_weight[a + 1..] {
            if m1 == m2 {
                continue;
            }
            for (i, x) in l1.iter().enumerate() {
                for (j, y) in l2.iter().enumerate() {
                    let dist = (total_eigenvalue(*x, *m1) - total_eigenvalue(*y, *m2)).abs();
                    report.min_distance = Some(report.min_distance.map_or(dist, |d: f64| d.min(dist)));
                    if dist < tol {
                        report.collisions.push(Collision { m1: *m1, index1: i, m2: *m2, index2: j, distance: dist });
                    }
                }
            }
        }
    }
    report
}

/// Largest `|⟨f_i, f_j⟩_M - δ_ij|` over the returned sections.
pub fn orthonormality_defect(eigs: &[EigenPair], mass: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in eigs.iter().enumerate() {
        for (j, b) in eigs.iter().enumerate() {
            let ip: Complex64 =
                a.section.values().iter().zip(b.section.values()).zip(mass).map(|((x, y), w)| x.conj() * y * w).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - want).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicField;
    use crate::geometry::{make_base_grid, make_connection, Flux};
    use crate::assembly::assemble_forms;

    #[test]
    fn clusters_group_close_values() {
        let r = detect_clusters(&[0.0, 1.0, 1.0, 3.0], 1e-6);
        assert_eq!(r.sizes(), vec![1, 2, 1]);
        assert_eq!(r.groups[1].gap, Some(2.0));
        assert_eq!(r.groups[2].gap, None);
        let r = detect_clusters(&[0.0, 1.0, 2.5, 4.0], 1e-3);
        assert_eq!(r.sizes(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn disjointness_flags_conjugate_weights() {
        let r = cross_weight_disjointness(&[(1, vec![2.0, 5.0]), (-1, vec![2.0, 5.5])], 1e-9);
        assert_eq!(r.collisions.len(), 1);
        assert_eq!(r.min_distance, Some(0.0));
        assert_eq!(cross_weight_disjointness(&[(1, vec![2.0])], 1e-9), DisjointnessReport::default());
    }

    #[test]
    fn dense_and_iterative_agree() {
        let g = make_base_grid(2, 24, &PeriodicField::random(2, 7, 2, 0.3)).unwrap();
        let c = make_connection(&g, Flux::plane(2, 0, 1, 1), None).unwrap();
        let op = assemble_forms(&g, &c, 2).unwrap();
        let dense = lowest_eigenpairs(&op, &SolverOptions { k: 6, dense_limit: 1000, ..Default::default() }).unwrap();
        let iter = lowest_eigenpairs(&op, &SolverOptions { k: 6, dense_limit: 0, ..Default::default() }).unwrap();
        for (a, b) in dense.iter().zip(&iter) {
            assert!((a.lambda - b.lambda).abs() < 1e-9 * (1.0 + a.lambda), "{} vs {}", a.lambda, b.lambda);
        }
        assert!(orthonormality_defect(&iter, op.mass()) < 1e-8);
    }

    #[test]
    fn rejects_bad_k() {
        let g = make_base_grid(2, 8, &PeriodicField::zero()).unwrap();
        let c = make_connection(&g, Flux::zero(2), None).unwrap();
        let op = assemble_forms(&g, &c, 0).unwrap();
        assert_eq!(lowest_eigenpairs(&op, &SolverOptions::with_k(17)), Err(Error::BadEigenCount { k: 17, dim: 64 }));
        assert_eq!(lowest_eigenpairs(&op, &SolverOptions::with_k(0)), Err(Error::BadEigenCount { k: 0, dim: 64 }));
    }
}
