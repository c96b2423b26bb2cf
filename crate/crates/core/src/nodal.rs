//! Lifting eigensections to the total space and measuring the topology of
//! the nodal set of the real part.
//!
//! The lifted field is `F(x, θ) = Re(f(x) e^{i m θ}) = a cos mθ - b sin mθ`
//! with `a = Re f`, `b = Im f`, sampled at `θ_t = 2π t / n_theta`. Crossing the
//! `x_a` period boundary forward moves the fiber index by
//! `n_theta · (-Σ_{b>a} c_ab j_b) / n`, which is why `n_theta` must make that
//! quotient integral.
//!
//! In this trivialization the connection form is `α = dθ - η`, so the
//! horizontal lift of `∂_a` is `∂_a + η_a ∂_θ` and
//! `|dF|²_G = Σ_a e^{-2u} (∂_a F + η_a ∂_θ F)² + (∂_θ F)²`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{BaseGrid, Connection, Section};
use crate::unionfind::UnionFind;

/// Lattice values with `|v|` below this join no nodal domain.
pub const ZERO_THRESHOLD: f64 = 1e-13;

/// `Re φ` sampled on the `n^d × n_theta` total-space lattice.
#[derive(Debug, Clone)]
pub struct LiftedField {
    m: i32,
    dim: usize,
    n: usize,
    n_theta: usize,
    h: f64,
    /// Fiber-index shift for a forward wrap along `axis` at base point `i`,
    /// stored at `i * dim + axis`.
    wrap_shift: Vec<i64>,
    /// `e^{-u}` per base point.
    inv_conformal: Vec<f64>,
    eta: Vec<f64>,
    section: Vec<Complex64>,
    values: Vec<f64>,
}

/// Smallest multiple of `n` that is at least `8 · max(|m|, 1)`.
pub fn auto_n_theta(n: usize, m: i32) -> usize {
    let want = 8 * (m.unsigned_abs() as usize).max(1);
    want.div_ceil(n) * n
}

/// Lifts `s` to the total space with `n_theta` fiber samples (or the
/// automatic choice).
pub fn lift(grid: &BaseGrid, conn: &Connection, s: &Section, n_theta: Option<usize>) -> Result<LiftedField> {
    conn.check_grid(grid)?;
    s.check_grid(grid)?;
    if s.flux() != conn.flux() {
        return Err(Error::GridMismatch("section and connection carry different flux"));
    }
    let dim = grid.dim();
    let n = grid.n();
    let n_theta = n_theta.unwrap_or_else(|| auto_n_theta(n, s.m()));
    if n_theta < 4 {
        return Err(Error::FiberResolution { n_theta, n });
    }
    let npts = grid.len();
    let mut wrap_shift = vec![0; npts * dim];
    for i in 0..npts {
        let c = grid.coords(i);
        for a in 0..dim {
            wrap_shift[i * dim + a] = conn.fiber_shift(a, &c, n_theta).ok_or(Error::FiberResolution { n_theta, n })?;
        }
    }
    let mf = f64::from(s.m());
    let mut values = Vec::with_capacity(npts * n_theta);
    for f in s.values() {
        for t in 0..n_theta {
            let th = TAU * t as f64 / n_theta as f64;
            values.push(f.re * libm::cos(mf * th) - f.im * libm::sin(mf * th));
        }
    }
    let mut eta = Vec::with_capacity(npts * dim);
    for i in 0..npts {
        eta.extend_from_slice(conn.eta(i));
    }
    Ok(LiftedField {
        m: s.m(),
        dim,
        n,
        n_theta,
        h: grid.h(),
        wrap_shift,
        inv_conformal: grid.u().iter().map(|u| libm::exp(-u)).collect(),
        eta,
        section: s.values().to_vec(),
        values,
    })
}

impl LiftedField {
    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn site(&self, base: usize, t: usize) -> usize {
        base * self.n_theta + t
    }

    pub fn value(&self, base: usize, t: usize) -> f64 {
        self.values[self.site(base, t)]
    }

    /// Fiber-index shift applied when crossing the `axis` boundary forward
    /// from base point `base`.
    pub fn wrap_shift(&self, base: usize, axis: usize) -> i64 {
        self.wrap_shift[base * self.dim + axis]
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Neighbor of a lattice site along `axis` (`0..dim` base axes, `dim` the
    /// fiber), following the twisted identification at period boundaries.
    pub fn step(&self, site: usize, axis: usize, forward: bool) -> usize {
        let nt = self.n_theta;
        let base = site / nt;
        let t = site % nt;
        if axis == self.dim {
            let t2 = if forward { (t + 1) % nt } else { (t + nt - 1) % nt };
            return base * nt + t2;
        }
        let stride = self.stride(axis);
        let c = (base / stride) % self.n;
        let nt_i = nt as i64;
        if forward {
            if c + 1 == self.n {
                let j = base + stride - self.n * stride;
                let t2 = (t as i64 + self.wrap_shift(base, axis)).rem_euclid(nt_i) as usize;
                j * nt + t2
            } else {
                (base + stride) * nt + t
            }
        } else if c == 0 {
            let p = base + (self.n - 1) * stride;
            let t2 = (t as i64 - self.wrap_shift(p, axis)).rem_euclid(nt_i) as usize;
            p * nt + t2
        } else {
            (base - stride) * nt + t
        }
    }

    /// Largest deviation of the lattice values from
    /// `a cos mθ - b sin mθ` recomputed from the stored section.
    pub fn fiber_identity_defect(&self) -> f64 {
        let mf = f64::from(self.m);
        let mut worst = 0.0_f64;
        for (i, f) in self.section.iter().enumerate() {
            for t in 0..self.n_theta {
                let th = TAU * t as f64 / self.n_theta as f64;
                let want = f.re * libm::cos(mf * th) - f.im * libm::sin(mf * th);
                worst = worst.max((self.value(i, t) - want).abs());
            }
        }
        worst
    }

    /// Largest jump between the two sides of every forward wrap, compared
    /// with the largest interior jump along the same axis. A correctly
    /// twisted lattice shows wrap jumps of interior size.
    pub fn wrap_continuity(&self) -> (f64, f64) {
        let mut wrap = 0.0_f64;
        let mut interior = 0.0_f64;
        for site in 0..self.values.len() {
            let base = site / self.n_theta;
            for a in 0..self.dim {
                let c = (base / self.stride(a)) % self.n;
                let jump = (self.values[self.step(site, a, true)] - self.values[site]).abs();
                if c + 1 == self.n {
                    wrap = wrap.max(jump);
                } else {
                    interior = interior.max(jump);
                }
            }
        }
        (wrap, interior)
    }

    fn check_nonzero(&self) -> Result<()> {
        if self.values.iter().all(|v| v.abs() < ZERO_THRESHOLD) {
            return Err(Error::DegenerateField);
        }
        Ok(())
    }

    /// Lattice sites of the cell whose lowest corner is `site`; corners are
    /// reached by forward steps taken in ascending axis order.
    fn cell_corners(&self, site: usize, out: &mut Vec<usize>) {
        out.clear();
        out.push(site);
        for axis in 0..=self.dim {
            let len = out.len();
            for k in 0..len {
                let next = self.step(out[k], axis, true);
                out.push(next);
            }
        }
    }

    fn nodal_cells(&self) -> Vec<bool> {
        let mut corners = Vec::with_capacity(1 << (self.dim + 1));
        (0..self.values.len())
            .map(|site| {
                self.cell_corners(site, &mut corners);
                let mut pos = false;
                let mut neg = false;
                for &c in &corners {
                    let v = self.values[c];
                    if v.abs() < ZERO_THRESHOLD {
                        return true;
                    }
                    pos |= v > 0.0;
                    neg |= v < 0.0;
                }
                pos && neg
            })
            .collect()
    }

    /// Gradient magnitude `|dF|_G` at a lattice site by centered differences.
    pub fn gradient_norm(&self, site: usize) -> f64 {
        let base = site / self.n_theta;
        let dtheta = TAU / self.n_theta as f64;
        let ft = (self.values[self.step(site, self.dim, true)] - self.values[self.step(site, self.dim, false)])
            / (2.0 * dtheta);
        let mut sq = ft * ft;
        for a in 0..self.dim {
            let fa = (self.values[self.step(site, a, true)] - self.values[self.step(site, a, false)]) / (2.0 * self.h);
            let horiz = self.inv_conformal[base] * (fa + self.eta[base * self.dim + a] * ft);
            sq += horiz * horiz;
        }
        libm::sqrt(sq)
    }
}

/// Number of connected components of `{F > 0}` plus those of `{F < 0}` under
/// face adjacency.
pub fn nodal_domains(field: &LiftedField) -> Result<usize> {
    field.check_nonzero()?;
    let v = &field.values;
    let sign = |x: f64| if x >= ZERO_THRESHOLD { 1 } else if x <= -ZERO_THRESHOLD { -1 } else { 0 };
    let mut uf = UnionFind::new(v.len());
    for site in 0..v.len() {
        let s = sign(v[site]);
        if s == 0 {
            continue;
        }
        for axis in 0..=field.dim {
            let nb = field.step(site, axis, true);
            if sign(v[nb]) == s {
                uf.union(site, nb);
            }
        }
    }
    Ok(uf.count_roots(|i| sign(v[i]) != 0))
}

/// Number of connected components of the union of nodal cells (cells with a
/// sign change or a zero corner), joined through shared faces.
pub fn nodal_set_components(field: &LiftedField) -> Result<usize> {
    field.check_nonzero()?;
    let cells = field.nodal_cells();
    let mut uf = UnionFind::new(cells.len());
    for site in 0..cells.len() {
        if !cells[site] {
            continue;
        }
        for axis in 0..=field.dim {
            let nb = field.step(site, axis, true);
            if cells[nb] {
                uf.union(site, nb);
            }
        }
    }
    Ok(uf.count_roots(|i| cells[i]))
}

/// Minimum over nodal cells of the mean corner gradient magnitude `|dF|_G`.
/// Returns `None` when there is no nodal cell.
pub fn regularity_margin(field: &LiftedField) -> Option<f64> {
    let cells = field.nodal_cells();
    let grads: Vec<f64> = (0..field.values.len()).map(|s| field.gradient_norm(s)).collect();
    let mut corners = Vec::with_capacity(1 << (field.dim + 1));
    let mut best: Option<f64> = None;
    for (site, &nodal) in cells.iter().enumerate() {
        if !nodal {
            continue;
        }
        field.cell_corners(site, &mut corners);
        let mean = corners.iter().map(|&c| grads[c]).sum::<f64>() / corners.len() as f64;
        best = Some(best.map_or(mean, |b: f64| b.min(mean)));
    }
    best
}

/// Zeros of `a cos mθ + b sin mθ` on `[0, 2π)`, ascending.
pub fn fiber_zeros(a: f64, b: f64, m: i32) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::ZeroWeight);
    }
    let k = f64::from(m.unsigned_abs());
    // a cos mθ + b sin mθ = a cos kθ + b' sin kθ with b' = sign(m) b
    let bp = if m < 0 { -b } else { b };
    let delta = libm::atan2(bp, a);
    let count = 2 * m.unsigned_abs() as usize;
    let mut roots: Vec<f64> = (0..count)
        .map(|j| {
            let th = (delta + FRAC_PI_2 + j as f64 * PI) / k;
            th.rem_euclid(TAU)
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(roots)
}

/// Number of zeros of `a cos mθ + b sin mθ` on `[0, 2π)`, or `None` when
/// `a² + b² ≤ tau²` (the fiber lies over a zero of the section).
pub fn fiber_zero_count(a: f64, b: f64, m: i32, tau: f64) -> Result<Option<usize>> {
    let roots = fiber_zeros(a, b, m)?;
    if a * a + b * b <= tau * tau {
        return Ok(None);
    }
    let mf = f64::from(m);
    let scale = libm::sqrt(a * a + b * b);
    let verified = roots
        .iter()
        .filter(|&&th| (a * libm::cos(mf * th) + b * libm::sin(mf * th)).abs() <= 1e-12 * scale)
        .count();
    Ok(Some(verified))
}

/// Histogram of fiber zero counts over sampled base points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoveringHistogram {
    pub samples: usize,
    pub counts: BTreeMap<usize, usize>,
    /// Samples whose fiber lies over (near) a section zero.
    pub undefined: usize,
}

impl CoveringHistogram {
    /// Fraction of defined samples with exactly `2|m|` zeros.
    pub fn exact_fraction(&self, m: i32) -> f64 {
        let defined = self.samples - self.undefined;
        if defined == 0 {
            return 0.0;
        }
        let good = self.counts.get(&(2 * m.unsigned_abs() as usize)).copied().unwrap_or(0);
        good as f64 / defined as f64
    }
}

/// Applies [`fiber_zero_count`] at `sample_count` seeded random lattice base
/// points. The lifted field is `a cos mθ - b sin mθ`, so the sine
/// coefficient passed on is `-Im f`.
pub fn covering_survey(s: &Section, sample_count: usize, tau: f64, seed: u64) -> Result<CoveringHistogram> {
    if s.m() == 0 {
        return Err(Error::ZeroWeight);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = CoveringHistogram { samples: sample_count, ..Default::default() };
    let len = s.values().len();
    for _ in 0..sample_count {
        let f = s.values()[rng.gen_range(0..len)];
        match fiber_zero_count(f.re, -f.im, s.m(), tau)? {
            Some(c) => *hist.counts.entry(c).or_insert(0) += 1,
            None => hist.undefined += 1,
        }
    }
    Ok(hist)
}

/// Zeros of a section located by plaquette winding numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingReport {
    /// Plaquettes with nonzero winding.
    pub count: usize,
    /// Sum of windings, counted clockwise so that it equals `m · c₁₂`.
    pub total: i64,
    /// `(plaquette corner index, winding)` for every nonzero plaquette.
    pub plaquettes: Vec<(usize, i64)>,
}

/// Gauge-covariant winding of `arg f` around every plaquette of a 2D grid.
///
/// Along an edge `i → j` the phase increment is
/// `arg(f_j · conj(U_e f_i))`, which telescopes to `m Φ_p` modulo `2π` around
/// a plaquette of flux `Φ_p`; the integer remainder is the vortex number.
pub fn section_zero_winding(grid: &BaseGrid, conn: &Connection, s: &Section) -> Result<WindingReport> {
    if grid.dim() != 2 {
        return Err(Error::WindingDimension(grid.dim()));
    }
    conn.check_grid(grid)?;
    s.check_grid(grid)?;
    let f = s.values();
    let floor = 1e-14 * s.max_modulus();
    if let Some((index, v)) = f.iter().enumerate().find(|(_, v)| v.norm() <= floor) {
        return Err(Error::SectionVanishes { index, modulus: v.norm() });
    }
    let m = s.m();
    let mf = f64::from(m);
    let incr = |i: usize, a: usize| -> f64 {
        let (j, _) = grid.neighbor(i, a, true);
        (f[j] * (conn.link(i, a, m) * f[i]).conj()).arg()
    };
    let mut plaquettes = Vec::new();
    let mut total = 0;
    for i in 0..grid.len() {
        let (i1, _) = grid.neighbor(i, 0, true);
        let (i2, _) = grid.neighbor(i, 1, true);
        let circ = incr(i, 0) + incr(i1, 1) - incr(i2, 0) - incr(i, 1);
        let flux = mf * conn.plaquette_angle(grid, i, 0, 1);
        let ccw = (circ - flux) / TAU;
        let k = -libm::round(ccw) as i64;
        if k != 0 {
            plaquettes.push((i, k));
            total += k;
        }
    }
    Ok(WindingReport { count: plaquettes.len(), total, plaquettes })
}

/// Sign domains of a real function on the (untwisted) base torus.
pub fn base_nodal_domains(grid: &BaseGrid, values: &[f64]) -> Result<usize> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch("base field length does not match the grid"));
    }
    if values.iter().all(|v| v.abs() < ZERO_THRESHOLD) {
        return Err(Error::DegenerateField);
    }
    let sign = |x: f64| if x >= ZERO_THRESHOLD { 1 } else if x <= -ZERO_THRESHOLD { -1 } else { 0 };
    let mut uf = UnionFind::new(values.len());
    for i in 0..values.len() {
        let s = sign(values[i]);
        if s == 0 {
            continue;
        }
        for a in 0..grid.dim() {
            let (j, _) = grid.neighbor(i, a, true);
            if sign(values[j]) == s {
                uf.union(i, j);
            }
        }
    }
    Ok(uf.count_roots(|i| sign(values[i]) != 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalOptions {
    pub n_theta: Option<usize>,
    pub tau: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl Default for NodalOptions {
    fn default() -> Self {
        Self { n_theta: None, tau: 1e-6, sample_count: 500, seed: 0 }
    }
}

/// Everything measured about one eigensection.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalReport {
    pub m: i32,
    pub n: usize,
    pub n_theta: usize,
    pub nodal_domain_count: usize,
    pub nodal_set_component_count: usize,
    /// `None` for `m = 0`.
    pub covering: Option<CoveringHistogram>,
    /// `None` outside dimension 2 or when the section vanishes on a corner.
    pub winding: Option<WindingReport>,
    pub regularity_margin: Option<f64>,
    pub fiber_identity_defect: f64,
}

/// Runs every nodal measurement on `s`. The survey threshold is
/// `tau · max|f|`.
pub fn nodal_report(grid: &BaseGrid, conn: &Connection, s: &Section, opts: &NodalOptions) -> Result<NodalReport> {
    let field = lift(grid, conn, s, opts.n_theta)?;
    let covering = if s.m() == 0 {
        None
    } else {
        Some(covering_survey(s, opts.sample_count, opts.tau * s.max_modulus(), opts.seed)?)
    };
    let winding = if grid.dim() == 2 { section_zero_winding(grid, conn, s).ok() } else { None };
    Ok(NodalReport {
        m: s.m(),
        n: grid.n(),
        n_theta: field.n_theta(),
        nodal_domain_count: nodal_domains(&field)?,
        nodal_set_component_count: nodal_set_components(&field)?,
        covering,
        winding,
        regularity_margin: regularity_margin(&field),
        fiber_identity_defect: field.fiber_identity_defect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicField;
    use crate::geometry::{make_base_grid, make_connection, Flux};

    fn product_case(m: i32, n_theta: usize) -> LiftedField {
        let g = make_base_grid(2, 8, &PeriodicField::zero()).unwrap();
        let c = make_connection(&g, Flux::zero(2), None).unwrap();
        let s = Section::from_fn(&g, &c, m, |_| Complex64::new(1.0, 0.0)).unwrap();
        lift(&g, &c, &s, Some(n_theta)).unwrap()
    }

    #[test]
    fn product_field_values() {
        let f = product_case(1, 8);
        for i in 0..64 {
            for t in 0..8 {
                assert!((f.value(i, t) - libm::cos(TAU * t as f64 / 8.0)).abs() < 1e-15);
            }
        }
        assert_eq!(nodal_domains(&f), Ok(2));
        assert_eq!(nodal_set_components(&f), Ok(2));
        let margin = regularity_margin(&f).unwrap();
        assert!((margin - 1.0).abs() < 0.25, "margin {margin}");
    }

    #[test]
    fn m_zero_is_fiber_constant() {
        let f = product_case(0, 8);
        assert!(f.values().iter().all(|&v| v == 1.0));
        assert_eq!(nodal_set_components(&f), Ok(0));
        assert_eq!(nodal_domains(&f), Ok(1));
    }

    #[test]
    fn auto_rule() {
        assert_eq!(auto_n_theta(16, 1), 16);
        assert_eq!(auto_n_theta(16, 3), 32);
        assert_eq!(auto_n_theta(8, 0), 8);
        assert_eq!(auto_n_theta(32, 5), 64);
    }

    #[test]
    fn rejects_fractional_shifts() {
        let g = make_base_grid(2, 16, &PeriodicField::zero()).unwrap();
        let c = make_connection(&g, Flux::plane(2, 0, 1, 1), None).unwrap();
        let s = Section::zeros(&c, 1);
        assert_eq!(lift(&g, &c, &s, Some(24)).err(), Some(Error::FiberResolution { n_theta: 24, n: 16 }));
        assert!(lift(&g, &c, &s, Some(32)).is_ok());
    }

    #[test]
    fn fiber_zero_examples() {
        assert_eq!(fiber_zero_count(1.0, 0.0, 2, 1e-9), Ok(Some(4)));
        let r = fiber_zeros(1.0, 1.0, 1).unwrap();
        assert!((r[0] - 3.0 * PI / 4.0).abs() < 1e-14 && (r[1] - 7.0 * PI / 4.0).abs() < 1e-14);
        assert_eq!(fiber_zero_count(0.0, 0.0, 3, 1e-9), Ok(None));
        assert_eq!(fiber_zero_count(1.0, 0.0, 0, 1e-9), Err(Error::ZeroWeight));
        assert_eq!(fiber_zero_count(0.3, -2.0, -3, 1e-9), Ok(Some(6)));
    }

    #[test]
    fn trivial_bundle_has_no_winding() {
        let g = make_base_grid(2, 8, &PeriodicField::zero()).unwrap();
        let c = make_connection(&g, Flux::zero(2), None).unwrap();
        let s = Section::from_fn(&g, &c, 1, |x| Complex64::new(2.0 + libm::cos(TAU * x[0]), 0.5)).unwrap();
        let w = section_zero_winding(&g, &c, &s).unwrap();
        assert_eq!((w.count, w.total), (0, 0));
    }

    #[test]
    fn vortex_in_the_trivial_bundle() {
        // z - z0 has a single ccw vortex; a compensating antivortex keeps the
        // field periodic, so only local windings are checked here.
        let g = make_base_grid(2, 16, &PeriodicField::zero()).unwrap();
        let c = make_connection(&g, Flux::zero(2), None).unwrap();
        let s = Section::from_fn(&g, &c, 1, |x| {
            Complex64::new(libm::sin(TAU * x[0]) - 0.01, libm::sin(TAU * x[1]) - 0.013)
        })
        .unwrap();
        let w = section_zero_winding(&g, &c, &s).unwrap();
        assert_eq!(w.total, 0);
        assert!(w.plaquettes.iter().any(|&(i, k)| i == 0 && k == -1), "{:?}", w.plaquettes);
    }
}
