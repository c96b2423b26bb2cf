//! First-order eigenvalue variations of the discrete pencil under conformal
//! metric and connection perturbations, finite-difference validation, and
//! degeneracy-splitting runs.
//!
//! With `f` normalized (`Σ M_i |f_i|² = 1`), the derivative of a simple
//! eigenvalue along a one-parameter family `(K(t), M(t))` is
//! `λ̇ = f* K̇ f - λ f* Ṁ f`. For the conformal family `u + t u̇`:
//!
//! - `ẇ_e = ½ (d-2) (u̇_i s_i + u̇_j s_j)` with `s = e^{(d-2)u} h^{d-2}`,
//! - `Ṁ_i = d u̇_i M_i`.
//!
//! For the connection family `θ_e + t B_e` the link derivative is
//! `U̇_e = -i m B_e U_e`, so each edge contributes
//! `w_e · 2 Re[conj(f_j - U_e f_i) · i m B_e U_e f_i]`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::assembly::{assemble_forms, quadratic_form};
use crate::error::{Error, Result};
use crate::field::{PeriodicField, PeriodicOneForm};
use crate::geometry::{BaseGrid, Connection};
use crate::spectral::{detect_clusters, lambdas, lowest_eigenpairs, EigenPair, SolverOptions};

/// Conformal direction: `g(t) = e^{2 t u̇} g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVariation {
    pub u_dot: PeriodicField,
}

impl MetricVariation {
    /// `u̇` sampled at grid points.
    pub fn rates(&self, grid: &BaseGrid) -> Vec<f64> {
        (0..grid.len()).map(|i| self.u_dot.eval(&grid.point(i)[..grid.dim()])).collect()
    }
}

/// Flux-preserving direction for the gauge potential.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionVariation {
    /// A periodic 1-form `β̇`.
    Form(PeriodicOneForm),
    /// The exact form `dχ`, discretized as `χ_j - χ_i` on every edge so that
    /// it is a discrete gauge direction.
    Gauge(PeriodicField),
}

impl ConnectionVariation {
    /// Rate of change of every weight-1 edge angle, indexed `idx * dim + axis`.
    pub fn edge_rates(&self, grid: &BaseGrid) -> Vec<f64> {
        let dim = grid.dim();
        let h = grid.h();
        let mut out = vec![0.0; grid.len() * dim];
        for i in 0..grid.len() {
            let x = grid.point(i);
            for a in 0..dim {
                out[i * dim + a] = match self {
                    Self::Form(b) => b.edge_integral(&x[..dim], a, h),
                    Self::Gauge(chi) => {
                        let mut y = x;
                        y[a] += h;
                        chi.eval(&y[..dim]) - chi.eval(&x[..dim])
                    }
                };
            }
        }
        out
    }

    /// Rate of change of the sampled potential `η`.
    pub fn point_rates(&self, grid: &BaseGrid) -> Vec<f64> {
        let dim = grid.dim();
        let mut out = vec![0.0; grid.len() * dim];
        for i in 0..grid.len() {
            let x = grid.point(i);
            for a in 0..dim {
                out[i * dim + a] = match self {
                    Self::Form(b) => b.component(a, &x[..dim]),
                    Self::Gauge(chi) => chi.derivative(&x[..dim], a),
                };
            }
        }
        out
    }
}

/// Derivative of the discrete eigenvalue and a continuum-style reference
/// evaluated by quadrature with centered covariant differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftReport {
    pub discrete: f64,
    pub continuum: f64,
}

/// Fails unless eigenvalue `index` forms a cluster of size one.
pub fn check_simple(eigs: &[EigenPair], index: usize, gap_tol: f64) -> Result<()> {
    if index >= eigs.len() {
        return Err(Error::IndexOutOfRange { index, len: eigs.len() });
    }
    let report = detect_clusters(&lambdas(eigs), gap_tol);
    match report.cluster_of(index) {
        Some(c) if c.size > 1 => Err(Error::DegenerateEigenvalue { index, size: c.size, spread: c.spread }),
        _ => Ok(()),
    }
}

/// `f* K̇ f - λ f* Ṁ f` for the conformal direction with point rates `u_dot`.
pub fn metric_rate(grid: &BaseGrid, conn: &Connection, m: i32, f: &[Complex64], lambda: f64, u_dot: &[f64]) -> f64 {
    let d = grid.dim() as f64;
    let mut k_dot = 0.0;
    if grid.dim() != 2 {
        for i in 0..grid.len() {
            for a in 0..grid.dim() {
                let (j, _) = grid.neighbor(i, a, true);
                let w_dot = 0.5 * (d - 2.0) * (u_dot[i] * grid.stiffness_factor(i) + u_dot[j] * grid.stiffness_factor(j));
                k_dot += w_dot * (f[j] - conn.link(i, a, m) * f[i]).norm_sqr();
            }
        }
    }
    let m_dot: f64 = f
        .iter()
        .zip(grid.volume_weights())
        .zip(u_dot)
        .map(|((v, w), r)| d * r * w * v.norm_sqr())
        .sum();
    k_dot - lambda * m_dot
}

/// `f* K̇ f` for edge-angle rates `rates` (indexed `idx * dim + axis`).
pub fn connection_rate(grid: &BaseGrid, conn: &Connection, m: i32, f: &[Complex64], rates: &[f64]) -> f64 {
    let dim = grid.dim();
    let mf = f64::from(m);
    let mut acc = 0.0;
    for i in 0..grid.len() {
        for a in 0..dim {
            let (j, _) = grid.neighbor(i, a, true);
            let u = conn.link(i, a, m);
            let diff = f[j] - u * f[i];
            let du = Complex64::new(0.0, mf * rates[i * dim + a]) * u * f[i];
            acc += grid.edge_weight(i, a) * 2.0 * (diff.conj() * du).re;
        }
    }
    acc
}

/// Centered covariant difference `D_a f` at grid point `i`.
fn covariant_difference(grid: &BaseGrid, conn: &Connection, m: i32, f: &[Complex64], i: usize, a: usize) -> Complex64 {
    let (j, _) = grid.neighbor(i, a, true);
    let (p, _) = grid.neighbor(i, a, false);
    (conn.link(i, a, m).conj() * f[j] - conn.link(p, a, m) * f[p]) / (2.0 * grid.h())
}

/// Quadrature of `∫ (d-2) u̇ |Df|²_g dV - λ ∫ d u̇ |f|² dV`.
pub fn metric_continuum(grid: &BaseGrid, conn: &Connection, m: i32, f: &[Complex64], lambda: f64, u_dot: &[f64]) -> f64 {
    let d = grid.dim() as f64;
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let vol = grid.volume_weights()[i];
        let inv_g = libm::exp(-2.0 * grid.u()[i]);
        let df2: f64 = (0..grid.dim()).map(|a| covariant_difference(grid, conn, m, f, i, a).norm_sqr()).sum();
        acc += u_dot[i] * vol * ((d - 2.0) * inv_g * df2 - lambda * d * f[i].norm_sqr());
    }
    acc
}

/// Quadrature of `Re ∫ conj(f) (-2 i m g*(Df, β̇) + i m f d*β̇) dV`, the
/// operator-variation pairing written in the same normalization as the
/// quadratic form. `point_rates` holds `β̇` at grid points.
pub fn connection_continuum(grid: &BaseGrid, conn: &Connection, m: i32, f: &[Complex64], point_rates: &[f64]) -> f64 {
    let dim = grid.dim();
    let d = dim as f64;
    let h = grid.h();
    let mf = f64::from(m);
    let u = grid.u();
    // flux of e^{(d-2)u} β̇ for the codifferential
    let flux = |i: usize, a: usize| libm::exp((d - 2.0) * u[i]) * point_rates[i * dim + a];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..grid.len() {
        let vol = grid.volume_weights()[i];
        let inv_g = libm::exp(-2.0 * u[i]);
        let mut pairing = Complex64::new(0.0, 0.0);
        let mut div = 0.0;
        for a in 0..dim {
            pairing += covariant_difference(grid, conn, m, f, i, a) * point_rates[i * dim + a];
            let (j, _) = grid.neighbor(i, a, true);
            let (p, _) = grid.neighbor(i, a, false);
            div += (flux(j, a) - flux(p, a)) / (2.0 * h);
        }
        let codiff = -libm::exp(-d * u[i]) * div;
        let term = Complex64::new(0.0, -2.0 * mf) * pairing * inv_g + Complex64::new(0.0, mf * codiff) * f[i];
        acc += f[i].conj() * term * vol;
    }
    acc.re
}

pub fn metric_first_order_shift(
    grid: &BaseGrid,
    conn: &Connection,
    eigs: &[EigenPair],
    index: usize,
    var: &MetricVariation,
    gap_tol: f64,
) -> Result<ShiftReport> {
    check_simple(eigs, index, gap_tol)?;
    let e = &eigs[index];
    e.section.check_grid(grid)?;
    let rates = var.rates(grid);
    let f = e.section.values();
    Ok(ShiftReport {
        discrete: metric_rate(grid, conn, e.m, f, e.lambda, &rates),
        continuum: metric_continuum(grid, conn, e.m, f, e.lambda, &rates),
    })
}

pub fn connection_first_order_shift(
    grid: &BaseGrid,
    conn: &Connection,
    eigs: &[EigenPair],
    index: usize,
    var: &ConnectionVariation,
    gap_tol: f64,
) -> Result<ShiftReport> {
    check_simple(eigs, index, gap_tol)?;
    let e = &eigs[index];
    e.section.check_grid(grid)?;
    let f = e.section.values();
    Ok(ShiftReport {
        discrete: connection_rate(grid, conn, e.m, f, &var.edge_rates(grid)),
        continuum: connection_continuum(grid, conn, e.m, f, &var.point_rates(grid)),
    })
}

/// Perturbation direction applied as `t ↦ (u + t u̇, θ + t B)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Direction {
    pub metric: Option<MetricVariation>,
    pub connection: Option<ConnectionVariation>,
}

impl Direction {
    /// Grid and connection at parameter `t`.
    pub fn apply(&self, grid: &BaseGrid, conn: &Connection, t: f64) -> Result<(BaseGrid, Connection)> {
        let g = match &self.metric {
            Some(mv) => {
                let u = grid.u().iter().zip(mv.rates(grid)).map(|(u, r)| u + t * r).collect();
                BaseGrid::from_samples(grid.dim(), grid.n(), u)?
            }
            None => grid.clone(),
        };
        let c = match &self.connection {
            Some(cv) => conn.shifted(&cv.edge_rates(grid), &cv.point_rates(grid), t)?,
            None => conn.clone(),
        };
        Ok((g, c))
    }

    /// First-order rate of `λ` for an eigenpair of the unperturbed problem.
    pub fn rate(&self, grid: &BaseGrid, conn: &Connection, e: &EigenPair) -> f64 {
        let f = e.section.values();
        let mut r = 0.0;
        if let Some(mv) = &self.metric {
            r += metric_rate(grid, conn, e.m, f, e.lambda, &mv.rates(grid));
        }
        if let Some(cv) = &self.connection {
            r += connection_rate(grid, conn, e.m, f, &cv.edge_rates(grid));
        }
        r
    }
}

/// Rayleigh quotient evaluated edge by edge. Every term of the form is
/// nonnegative, so this is accurate to working precision relative to `λ`
/// rather than to the matrix norm.
pub fn refined_eigenvalue(grid: &BaseGrid, conn: &Connection, e: &EigenPair) -> f64 {
    let f = e.section.values();
    quadratic_form(grid, conn, e.m, f) / e.section.norm_sq(grid)
}

fn eigenvalues_at(grid: &BaseGrid, conn: &Connection, m: i32, dir: &Direction, t: f64, opts: &SolverOptions) -> Result<Vec<f64>> {
    let (g, c) = dir.apply(grid, conn, t)?;
    let op = assemble_forms(&g, &c, m)?;
    let eigs = lowest_eigenpairs(&op, opts)?;
    Ok(eigs.iter().map(|e| refined_eigenvalue(&g, &c, e)).collect())
}

/// Central finite differences against an analytic rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCheck {
    pub analytic: f64,
    pub eps: f64,
    pub fd: f64,
    /// `|fd - analytic| / max(|analytic|, 1e-300)`.
    pub rel_error: f64,
    /// Step of the Richardson pair (`richardson_eps` and half of it).
    pub richardson_eps: f64,
    pub fd_coarse: f64,
    pub fd_fine: f64,
    /// `|fd_coarse - analytic| / |fd_fine - analytic|`; about 4 when
    /// truncation error dominates roundoff.
    pub richardson_ratio: f64,
}

/// Checks the rate of eigenvalue `index` along `dir` by central differences
/// at `eps`, and measures the error ratio between steps `richardson_eps` and
/// `richardson_eps / 2`. The sum over `indices` is differentiated, so passing
/// a whole degenerate cluster checks the trace sum rule.
pub fn fd_check(
    grid: &BaseGrid,
    conn: &Connection,
    m: i32,
    indices: &[usize],
    dir: &Direction,
    eps: f64,
    richardson_eps: f64,
    opts: &SolverOptions,
) -> Result<FdCheck> {
    let op = assemble_forms(grid, conn, m)?;
    let eigs = lowest_eigenpairs(&op, opts)?;
    for &i in indices {
        if i >= eigs.len() {
            return Err(Error::IndexOutOfRange { index: i, len: eigs.len() });
        }
    }
    let analytic: f64 = indices.iter().map(|&i| dir.rate(grid, conn, &eigs[i])).sum();
    let sum_at = |t: f64| -> Result<f64> {
        let l = eigenvalues_at(grid, conn, m, dir, t, opts)?;
        Ok(indices.iter().map(|&i| l[i]).sum())
    };
    let central = |h: f64| -> Result<f64> { Ok((sum_at(h)? - sum_at(-h)?) / (2.0 * h)) };
    let fd = central(eps)?;
    let fd_coarse = central(richardson_eps)?;
    let fd_fine = central(0.5 * richardson_eps)?;
    let scale = analytic.abs().max(1e-300);
    Ok(FdCheck {
        analytic,
        eps,
        fd,
        rel_error: (fd - analytic).abs() / scale,
        richardson_eps,
        fd_coarse,
        fd_fine,
        richardson_ratio: (fd_coarse - analytic).abs() / (fd_fine - analytic).abs(),
    })
}

/// Kind of random direction used by [`splitting_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    Metric,
    Connection,
    Both,
    PureGauge,
}

impl DirectionKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Metric => "metric",
            Self::Connection => "connection",
            Self::Both => "both",
            Self::PureGauge => "pure_gauge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Metric, Self::Connection, Self::Both, Self::PureGauge].into_iter().find(|k| k.name() == s)
    }
}

/// Seeded random direction of unit sup-size.
pub fn random_direction(kind: DirectionKind, dim: usize, seed: u64) -> Direction {
    let metric = || MetricVariation { u_dot: PeriodicField::random(dim, seed, 2, 1.0) };
    let form = || ConnectionVariation::Form(PeriodicOneForm::random(dim, seed ^ 0x5bd1_e995, 2, 1.0));
    match kind {
        DirectionKind::Metric => Direction { metric: Some(metric()), connection: None },
        DirectionKind::Connection => Direction { metric: None, connection: Some(form()) },
        DirectionKind::Both => Direction { metric: Some(metric()), connection: Some(form()) },
        DirectionKind::PureGauge => Direction {
            metric: None,
            connection: Some(ConnectionVariation::Gauge(PeriodicField::random(dim, seed ^ 0x27d4_eb2f, 2, 1.0))),
        },
    }
}

/// Perturbed spectrum of the target cluster at one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRun {
    pub epsilon: f64,
    pub lambdas: Vec<f64>,
    /// Smallest gap between consecutive members of the original cluster.
    pub min_gap: f64,
    pub gap_over_epsilon: f64,
    /// Cluster sizes of the perturbed spectrum.
    pub sizes: Vec<usize>,
    pub split: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub kind: DirectionKind,
    pub seed: u64,
    pub before: Vec<f64>,
    pub before_sizes: Vec<usize>,
    pub cluster_size: usize,
    pub runs: Vec<SplitRun>,
    /// Analytic first-order rate of the cluster trace.
    pub trace_rate: f64,
    /// Central difference of the cluster trace.
    pub trace_fd: f64,
    pub trace_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOptions {
    pub epsilons: Vec<f64>,
    pub gap_tol: f64,
    pub fd_eps: f64,
    pub solver: SolverOptions,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { epsilons: vec![1e-2, 1e-3], gap_tol: 1e-6, fd_eps: 1e-4, solver: SolverOptions::default() }
    }
}

/// Perturbs a configuration whose lowest eigenvalue is degenerate and records
/// how the lowest cluster splits.
pub fn splitting_experiment(
    grid: &BaseGrid,
    conn: &Connection,
    m: i32,
    kind: DirectionKind,
    seed: u64,
    opts: &SplitOptions,
) -> Result<SplitReport> {
    let op = assemble_forms(grid, conn, m)?;
    let eigs = lowest_eigenpairs(&op, &opts.solver)?;
    let before = lambdas(&eigs);
    let clusters = detect_clusters(&before, opts.gap_tol);
    let size = clusters.groups[0].size;
    let dir = random_direction(kind, grid.dim(), seed);
    let mut runs = Vec::new();
    for &eps in &opts.epsilons {
        let l = eigenvalues_at(grid, conn, m, &dir, eps, &opts.solver)?;
        let min_gap = l[..size].windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let min_gap = if size > 1 { min_gap } else { 0.0 };
        let after = detect_clusters(&l, opts.gap_tol);
        let split = size > 1 && (0..size).all(|i| after.is_simple(i));
        runs.push(SplitRun {
            epsilon: eps,
            gap_over_epsilon: if eps != 0.0 { min_gap / eps } else { 0.0 },
            lambdas: l,
            min_gap,
            sizes: after.sizes(),
            split,
        });
    }
    let trace_rate: f64 = eigs[..size].iter().map(|e| dir.rate(grid, conn, e)).sum();
    let trace_at = |t: f64| -> Result<f64> { Ok(eigenvalues_at(grid, conn, m, &dir, t, &opts.solver)?[..size].iter().sum()) };
    let trace_fd = (trace_at(opts.fd_eps)? - trace_at(-opts.fd_eps)?) / (2.0 * opts.fd_eps);
    let trace_scale: f64 = before[..size].iter().sum::<f64>().abs().max(1.0);
    Ok(SplitReport {
        kind,
        seed,
        before_sizes: clusters.sizes(),
        before,
        cluster_size: size,
        runs,
        trace_rate,
        trace_fd,
        trace_rel_error: (trace_fd - trace_rate).abs() / trace_scale,
    })
}
