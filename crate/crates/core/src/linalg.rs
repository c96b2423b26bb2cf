//! Small complex linear algebra kernels: a CSR matrix, a dense Hermitian
//! eigensolver, and Gram–Schmidt orthonormalization.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds the matrix from per-row `(column, value)` lists.
    pub fn from_rows(rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Entry `(i, j)`, summing duplicates.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.row(i).filter(|&(c, _)| c == j).map(|(_, v)| v).sum()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// `D A D` for a real diagonal `D`.
    pub fn scaled_symmetric(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] = self.vals[k] * (d[i] * d[self.cols[k]]);
            }
        }
        out
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Gershgorin upper bound on the spectrum of a Hermitian matrix.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .map(|(j, v)| if j == i { v.re } else { v.norm() })
                    .sum::<f64>()
            })
            .fold(f64::MIN, f64::max)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[i * self.n + j] += v;
            }
        }
        out
    }
}

/// Hermitian inner product `Σ conj(x) y`.
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v.norm_sqr()).sum())
}

/// Eigen-decomposition of a dense Hermitian matrix (row-major, `n × n`):
/// Householder reduction to a tridiagonal matrix, a diagonal phase change
/// that makes it real, then implicit QL iterations.
///
/// Returns eigenvalues in ascending order and the eigenvectors as columns of
/// a row-major `n × n` matrix.
pub fn hermitian_eigh(a: &[Complex64], n: usize) -> (Vec<f64>, Vec<Complex64>) {
    let mut a = a.to_vec();
    let mut q = vec![ZERO; n * n];
    for i in 0..n {
        q[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let mut sub = vec![ZERO; n];
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let xnorm = libm::sqrt((lo..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>());
        if xnorm == 0.0 {
            sub[k] = ZERO;
            continue;
        }
        let x0 = a[lo * n + k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        v[lo] -= alpha;
        let vnorm = libm::sqrt((lo..n).map(|i| v[i].norm_sqr()).sum::<f64>());
        if vnorm == 0.0 {
            sub[k] = x0;
            continue;
        }
        for x in &mut v[lo..n] {
            *x /= vnorm;
        }
        // p = A v on the trailing block, w = p - (vᴴp) v
        for i in lo..n {
            let mut acc = ZERO;
            for j in lo..n {
                acc += a[i * n + j] * v[j];
            }
            p[i] = acc;
        }
        let s: f64 = (lo..n).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in lo..n {
            p[i] -= v[i] * s;
        }
        for i in lo..n {
            let (vi, wi) = (v[i], p[i]);
            for j in lo..n {
                a[i * n + j] -= (vi * p[j].conj() + wi * v[j].conj()) * 2.0;
            }
        }
        for i in lo..n {
            a[i * n + k] = ZERO;
            a[k * n + i] = ZERO;
        }
        a[lo * n + k] = alpha;
        a[k * n + lo] = alpha.conj();
        sub[k] = alpha;
        // Q ← Q H
        for r in 0..n {
            let mut acc = ZERO;
            for j in lo..n {
                acc += q[r * n + j] * v[j];
            }
            for j in lo..n {
                q[r * n + j] -= acc * v[j].conj() * 2.0;
            }
        }
    }
    if n >= 2 {
        sub[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut e = vec![0.0; n];
    // phase change making the subdiagonal real and nonnegative
    let mut delta = Complex64::new(1.0, 0.0);
    for k in 0..n.saturating_sub(1) {
        let r = sub[k].norm();
        e[k] = r;
        if r > 0.0 {
            delta *= sub[k] / r;
        }
        for row in 0..n {
            q[row * n + k + 1] *= delta;
        }
    }
    tridiagonal_ql(&mut d, &mut e, &mut q, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![ZERO; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + new] = q[k * n + old];
        }
    }
    (vals, vecs)
}

/// Implicit QL with Wilkinson shifts on the real symmetric tridiagonal
/// matrix with diagonal `d` and off-diagonal `e[i]` coupling `i` and `i + 1`.
/// Rotations are accumulated into the columns of `z`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [Complex64], n: usize) {
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l || iter >= 200 {
                break;
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[k * n + i + 1];
                    z[k * n + i + 1] = z[k * n + i] * s + f * c;
                    z[k * n + i] = z[k * n + i] * c - f * s;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Orthonormalizes the columns `cols[0..]` (each of length `len`) in place
/// with two passes of classical Gram–Schmidt. Returns the indices of columns
/// that collapsed numerically; those are left zero.
pub fn orthonormalize(cols: &mut [Vec<Complex64>]) -> Vec<usize> {
    let mut collapsed = Vec::new();
    for j in 0..cols.len() {
        let before = norm(&cols[j]);
        for _pass in 0..2 {
            let (done, rest) = cols.split_at_mut(j);
            let col = &mut rest[0];
            let coeffs: Vec<Complex64> = done.iter().map(|q| dot(q, col)).collect();
            for (q, c) in done.iter().zip(coeffs) {
                for (x, y) in col.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let after = norm(&cols[j]);
        if !(after > 1e-10 * before) || after == 0.0 {
            cols[j].iter_mut().for_each(|x| *x = ZERO);
            collapsed.push(j);
        } else {
            cols[j].iter_mut().for_each(|x| *x /= after);
        }
    }
    collapsed
}
