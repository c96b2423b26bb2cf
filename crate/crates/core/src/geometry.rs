//! Discretized base tori, connections with integer flux, and weight-`m`
//! sections of the associated line bundles.
//!
//! Conventions used throughout the crate:
//!
//! - Grid points are stored row-major (last axis fastest); `x_a = j_a / n`.
//! - The Landau representative of the gauge potential is
//!   `η = 2π Σ_{a<b} c_ab x_a dx_b`, optionally plus a periodic 1-form `β`.
//! - The covariant derivative on weight-`m` sections is `df + i m f η`; an
//!   edge `i → j` carries the angle `θ_e ≈ ∫_e η` and the link
//!   `U_e = exp(-i m θ_e)`.
//! - Crossing the `x_a` period boundary, a section obeys
//!   `f(x + e_a) = exp(i m τ_a(x)) f(x)` with
//!   `τ_a(x) = -2π Σ_{b>a} c_ab x_b`; wrap edges fold `τ_a` into their angle.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{PeriodicField, PeriodicOneForm};

/// Largest admissible `|u|` for the conformal factor.
pub const CONFORMAL_BOUND: f64 = 2.0;

/// Reduces an angle to `(-π, π]`.
pub fn principal_angle(x: f64) -> f64 {
    let r = x - TAU * libm::round(x / TAU);
    if r <= -PI {
        r + TAU
    } else if r > PI {
        r - TAU
    } else {
        r
    }
}

#[inline]
pub(crate) fn unit(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// Uniform periodic grid on `T^d` with conformal metric `e^{2u} δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseGrid {
    dim: usize,
    n: usize,
    h: f64,
    u: Vec<f64>,
    volume: Vec<f64>,
}

/// Samples the conformal factor `u_spec` on a `n^d` grid.
pub fn make_base_grid(dim: usize, n: usize, u_spec: &PeriodicField) -> Result<BaseGrid> {
    check_shape(dim, n)?;
    let npts = n.pow(dim as u32);
    let u = (0..npts)
        .map(|i| {
            let x = point_of(dim, n, i);
            u_spec.eval(&x[..dim])
        })
        .collect();
    BaseGrid::from_samples(dim, n, u)
}

fn check_shape(dim: usize, n: usize) -> Result<()> {
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if n < 8 {
        return Err(Error::GridTooSmall(n));
    }
    Ok(())
}

fn coords_of(dim: usize, n: usize, mut idx: usize) -> [usize; 3] {
    let mut c = [0; 3];
    for a in (0..dim).rev() {
        c[a] = idx % n;
        idx /= n;
    }
    c
}

fn point_of(dim: usize, n: usize, idx: usize) -> [f64; 3] {
    let c = coords_of(dim, n, idx);
    let mut x = [0.0; 3];
    for a in 0..dim {
        x[a] = c[a] as f64 / n as f64;
    }
    x
}

impl BaseGrid {
    /// Builds a grid from already sampled conformal factors.
    pub fn from_samples(dim: usize, n: usize, u: Vec<f64>) -> Result<Self> {
        check_shape(dim, n)?;
        let npts = n.pow(dim as u32);
        if u.len() != npts {
            return Err(Error::GridMismatch("conformal samples do not match n^d"));
        }
        let worst = u.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if !(worst <= CONFORMAL_BOUND) {
            return Err(Error::ConformalBound { value: worst, bound: CONFORMAL_BOUND });
        }
        let h = 1.0 / n as f64;
        let cell = libm::pow(h, dim as f64);
        let volume = u.iter().map(|&v| libm::exp(dim as f64 * v) * cell).collect();
        Ok(Self { dim, n, h, u, volume })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// `e^{d u} h^d` per point.
    pub fn volume_weights(&self) -> &[f64] {
        &self.volume
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        coords_of(self.dim, self.n, idx)
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords[..self.dim].iter().fold(0, |acc, &c| acc * self.n + c % self.n)
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        point_of(self.dim, self.n, idx)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Neighbor along `axis`; the flag reports whether the period boundary
    /// was crossed.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> (usize, bool) {
        let stride = self.stride(axis);
        let c = (idx / stride) % self.n;
        if forward {
            if c + 1 == self.n {
                (idx + stride - self.n * stride, true)
            } else {
                (idx + stride, false)
            }
        } else if c == 0 {
            (idx + (self.n - 1) * stride, true)
        } else {
            (idx - stride, false)
        }
    }

    /// `e^{(d-2)u} h^{d-2}`: the pointwise coefficient of `|df|²` in the
    /// discrete quadratic form.
    pub fn stiffness_factor(&self, idx: usize) -> f64 {
        let d = self.dim as f64;
        libm::exp((d - 2.0) * self.u[idx]) * libm::pow(self.h, d - 2.0)
    }

    /// Edge coefficient: endpoint average of [`Self::stiffness_factor`].
    pub fn edge_weight(&self, idx: usize, axis: usize) -> f64 {
        let (j, _) = self.neighbor(idx, axis, true);
        0.5 * (self.stiffness_factor(idx) + self.stiffness_factor(j))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

/// Antisymmetric integer flux matrix `c_ab` (Chern data per coordinate plane).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Flux {
    dim: usize,
    c: [[i64; 3]; 3],
}

impl Flux {
    pub fn zero(dim: usize) -> Self {
        Self { dim, c: [[0; 3]; 3] }
    }

    /// Flux `c` through the `(a, b)` plane only.
    pub fn plane(dim: usize, a: usize, b: usize, c: i64) -> Self {
        let mut f = Self::zero(dim);
        f.c[a][b] = c;
        f.c[b][a] = -c;
        f
    }

    pub fn new(dim: usize, rows: &[Vec<i64>]) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::FluxShape { dim });
        }
        let mut c = [[0; 3]; 3];
        for a in 0..dim {
            for b in 0..dim {
                if rows[a][b] != -rows[b][a] {
                    return Err(Error::FluxNotAntisymmetric { row: a, col: b });
                }
                c[a][b] = rows[a][b];
            }
        }
        Ok(Self { dim, c })
    }

    /// Accepts a real matrix, rejecting non-integer entries.
    pub fn from_real(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut ints = Vec::with_capacity(rows.len());
        for (a, row) in rows.iter().enumerate() {
            let mut r = Vec::with_capacity(row.len());
            for (b, &v) in row.iter().enumerate() {
                if !v.is_finite() || libm::round(v) != v {
                    return Err(Error::FluxNotInteger { row: a, col: b, value: v });
                }
                r.push(v as i64);
            }
            ints.push(r);
        }
        Self::new(dim, &ints)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> i64 {
        self.c[a][b]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.dim).map(|a| self.c[a][..self.dim].to_vec()).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.c.iter().flatten().all(|&v| v == 0)
    }

    /// `τ_a(x) = -2π Σ_{b>a} c_ab x_b`.
    pub fn twist_angle(&self, axis: usize, x: &[f64]) -> f64 {
        let s: f64 = ((axis + 1)..self.dim).map(|b| self.c[axis][b] as f64 * x[b]).sum();
        -TAU * s
    }

    /// Twist in units of the integer lattice: `-Σ_{b>a} c_ab j_b`, so that
    /// `τ_a = 2π · twist_units / n`.
    pub fn twist_units(&self, axis: usize, coords: &[usize]) -> i64 {
        -((axis + 1)..self.dim).map(|b| self.c[axis][b] * coords[b] as i64).sum::<i64>()
    }
}

/// Gauge potential on the base grid, realized as edge angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    dim: usize,
    n: usize,
    flux: Flux,
    beta: Option<PeriodicOneForm>,
    /// Weight-1 angle per edge `(idx, axis)`, wrap twist included.
    edge_angle: Vec<f64>,
    /// `η_a` sampled at grid points.
    eta: Vec<f64>,
}

/// Landau-gauge connection with the given flux, plus the optional periodic
/// 1-form `beta`.
pub fn make_connection(grid: &BaseGrid, flux: Flux, beta: Option<&PeriodicOneForm>) -> Result<Connection> {
    let dim = grid.dim();
    if flux.dim() != dim {
        return Err(Error::FluxShape { dim });
    }
    if let Some(b) = beta {
        if b.dim() != dim {
            return Err(Error::GridMismatch("beta has the wrong number of components"));
        }
    }
    let npts = grid.len();
    let h = grid.h();
    let mut edge_angle = vec![0.0; npts * dim];
    let mut eta = vec![0.0; npts * dim];
    for idx in 0..npts {
        let x = grid.point(idx);
        for b in 0..dim {
            // Landau part: η_b = 2π Σ_{a<b} c_ab x_a, constant along a b-edge.
            let landau: f64 = (0..b).map(|a| flux.get(a, b) as f64 * x[a]).sum::<f64>() * TAU;
            let beta_pt = beta.map_or(0.0, |f| f.component(b, &x[..dim]));
            eta[idx * dim + b] = landau + beta_pt;
            let mut angle = landau * h + beta.map_or(0.0, |f| f.edge_integral(&x[..dim], b, h));
            let (_, wrapped) = grid.neighbor(idx, b, true);
            if wrapped {
                angle += flux.twist_angle(b, &x);
            }
            edge_angle[idx * dim + b] = angle;
        }
    }
    Ok(Connection { dim, n: grid.n(), flux, beta: beta.cloned(), edge_angle, eta })
}

impl Connection {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flux(&self) -> &Flux {
        &self.flux
    }

    pub fn beta(&self) -> Option<&PeriodicOneForm> {
        self.beta.as_ref()
    }

    pub fn check_grid(&self, grid: &BaseGrid) -> Result<()> {
        if grid.dim() != self.dim || grid.n() != self.n {
            return Err(Error::GridMismatch("connection was built on a different grid"));
        }
        Ok(())
    }

    #[inline]
    pub fn edge_angle(&self, idx: usize, axis: usize) -> f64 {
        self.edge_angle[idx * self.dim + axis]
    }

    pub fn edge_angles(&self) -> &[f64] {
        &self.edge_angle
    }

    /// Link `exp(-i m θ_e)` for weight `m`.
    #[inline]
    pub fn link(&self, idx: usize, axis: usize, m: i32) -> Complex64 {
        unit(-f64::from(m) * self.edge_angle(idx, axis))
    }

    /// `η` at a grid point.
    pub fn eta(&self, idx: usize) -> &[f64] {
        &self.eta[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Twist phase `exp(i m τ_a)` picked up by a weight-`m` section crossing
    /// the `axis` boundary at grid point `idx`.
    pub fn twist_phase(&self, grid: &BaseGrid, axis: usize, idx: usize, m: i32) -> Complex64 {
        let x = grid.point(idx);
        unit(f64::from(m) * self.flux.twist_angle(axis, &x))
    }

    /// Fiber-index shift for a lifted field with `n_theta` fiber samples when
    /// crossing the `axis` boundary forward at `coords`, if it is an integer.
    pub fn fiber_shift(&self, axis: usize, coords: &[usize], n_theta: usize) -> Option<i64> {
        let num = self.flux.twist_units(axis, coords) * n_theta as i64;
        (num % self.n as i64 == 0).then(|| num / self.n as i64)
    }

    /// Plaquette angle in the `(a, b)` plane at corner `idx`, reduced to
    /// `(-π, π]`.
    pub fn plaquette_angle(&self, grid: &BaseGrid, idx: usize, a: usize, b: usize) -> f64 {
        let (ia, _) = grid.neighbor(idx, a, true);
        let (ib, _) = grid.neighbor(idx, b, true);
        let circulation =
            self.edge_angle(idx, a) + self.edge_angle(ia, b) - self.edge_angle(ib, a) - self.edge_angle(idx, b);
        principal_angle(circulation)
    }

    /// Total plaquette flux through every coordinate 2-torus slice of the
    /// `(a, b)` plane; one entry per slice.
    pub fn plane_flux(&self, grid: &BaseGrid, a: usize, b: usize) -> Vec<f64> {
        let slices = grid.len() / (self.n * self.n);
        let mut totals = vec![0.0; slices];
        for idx in 0..grid.len() {
            let c = grid.coords(idx);
            let slice = (0..self.dim).filter(|&k| k != a && k != b).fold(0, |acc, k| acc * self.n + c[k]);
            totals[slice] += self.plaquette_angle(grid, idx, a, b);
        }
        totals
    }

    /// Largest deviation of the twist cocycle condition
    /// `g_a(x + e_b) g_b(x) = g_b(x + e_a) g_a(x)` over all lattice points and
    /// axis pairs, for weight `m`.
    pub fn cocycle_defect(&self, grid: &BaseGrid, m: i32) -> f64 {
        let mf = f64::from(m);
        let mut worst = 0.0_f64;
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            for a in 0..self.dim {
                for b in (a + 1)..self.dim {
                    let mut xb = x;
                    xb[b] += 1.0;
                    let mut xa = x;
                    xa[a] += 1.0;
                    let lhs = self.flux.twist_angle(a, &xb) + self.flux.twist_angle(b, &x);
                    let rhs = self.flux.twist_angle(b, &xa) + self.flux.twist_angle(a, &x);
                    let defect = (unit(mf * lhs) - unit(mf * rhs)).norm();
                    worst = worst.max(defect);
                }
            }
        }
        worst
    }

    /// Copy with edge angles `θ_e + t · edge_rates_e` and point values
    /// `η + t · point_rates`.
    pub fn shifted(&self, edge_rates: &[f64], point_rates: &[f64], t: f64) -> Result<Self> {
        if edge_rates.len() != self.edge_angle.len() || point_rates.len() != self.eta.len() {
            return Err(Error::GridMismatch("variation does not match the connection"));
        }
        let mut out = self.clone();
        for (e, r) in out.edge_angle.iter_mut().zip(edge_rates) {
            *e += t * r;
        }
        for (e, r) in out.eta.iter_mut().zip(point_rates) {
            *e += t * r;
        }
        Ok(out)
    }
}

/// Sampled complex section of `L^m` in the unitary frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    m: i32,
    dim: usize,
    n: usize,
    flux: Flux,
    values: Vec<Complex64>,
}

impl Section {
    pub fn new(conn: &Connection, m: i32, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != conn.n.pow(conn.dim as u32) {
            return Err(Error::GridMismatch("section length does not match n^d"));
        }
        Ok(Self { m, dim: conn.dim, n: conn.n, flux: conn.flux, values })
    }

    pub(crate) fn from_parts(m: i32, dim: usize, n: usize, flux: Flux, values: Vec<Complex64>) -> Self {
        Self { m, dim, n, flux, values }
    }

    pub fn zeros(conn: &Connection, m: i32) -> Self {
        let len = conn.n.pow(conn.dim as u32);
        Self { m, dim: conn.dim, n: conn.n, flux: conn.flux, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_fn(grid: &BaseGrid, conn: &Connection, m: i32, f: impl Fn([f64; 3]) -> Complex64) -> Result<Self> {
        conn.check_grid(grid)?;
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(conn, m, values)
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flux(&self) -> &Flux {
        &self.flux
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::WeightMismatch { left: self.m, right: other.m });
        }
        if self.dim != other.dim || self.n != other.n || self.flux != other.flux {
            return Err(Error::GridMismatch("sections live on different grids or bundles"));
        }
        Ok(())
    }

    pub fn check_grid(&self, grid: &BaseGrid) -> Result<()> {
        if grid.dim() != self.dim || grid.n() != self.n {
            return Err(Error::GridMismatch("section was sampled on a different grid"));
        }
        Ok(())
    }

    /// `Σ |f|² · volume_weight`.
    pub fn norm_sq(&self, grid: &BaseGrid) -> f64 {
        self.values.iter().zip(grid.volume_weights()).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    pub fn norm(&self, grid: &BaseGrid) -> f64 {
        libm::sqrt(self.norm_sq(grid))
    }

    pub fn normalize(&mut self, grid: &BaseGrid) -> Result<()> {
        self.check_grid(grid)?;
        let nrm = self.norm(grid);
        if !(nrm > 0.0) {
            return Err(Error::ZeroSection);
        }
        for v in &mut self.values {
            *v /= nrm;
        }
        Ok(())
    }

    /// Weighted inner product `Σ conj(self) · other · volume_weight`.
    pub fn inner(&self, grid: &BaseGrid, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(grid.volume_weights())
            .map(|((a, b), w)| a.conj() * b * w)
            .sum())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
    }
}

/// Changes the unitary frame by `exp(i m χ)`.
///
/// The section becomes `e^{i m χ} f` and every edge angle becomes
/// `θ_e - (χ_j - χ_i)`, so the discrete form and its spectrum are unchanged
/// exactly. Point values of `η` shift by the centered gradient of `χ`.
pub fn gauge_transform(conn: &Connection, s: &Section, grid: &BaseGrid, chi: &[f64]) -> Result<(Connection, Section)> {
    conn.check_grid(grid)?;
    s.check_grid(grid)?;
    if chi.len() != grid.len() {
        return Err(Error::GridMismatch("gauge field length does not match the grid"));
    }
    if s.flux != conn.flux {
        return Err(Error::GridMismatch("section and connection carry different flux"));
    }
    let dim = conn.dim;
    let h = grid.h();
    let mut out = conn.clone();
    for idx in 0..grid.len() {
        for a in 0..dim {
            let (j, _) = grid.neighbor(idx, a, true);
            let (p, _) = grid.neighbor(idx, a, false);
            out.edge_angle[idx * dim + a] -= chi[j] - chi[idx];
            out.eta[idx * dim + a] -= (chi[j] - chi[p]) / (2.0 * h);
        }
    }
    let mf = f64::from(s.m);
    let mut s2 = s.clone();
    for (v, &c) in s2.values.iter_mut().zip(chi) {
        *v *= unit(mf * c);
    }
    Ok((out, s2))
}
