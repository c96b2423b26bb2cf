//! Rotation-equivariant spherical harmonics on `S²`, where the circle action
//! fixes the two poles.
//!
//! The field is `Re Y_N^m = √(2N+1) P_N^m(cos φ) cos(mθ)` with `φ ∈ [0, π]`
//! the polar angle and `θ` the rotation angle. `P_N^m` carries the
//! Condon–Shortley phase `(-1)^m`.
//!
//! The grid has `n_phi` cell-centered latitude rows `φ_i = (i + ½) π / n_phi`,
//! `n_theta` offset meridians `θ_j = (j + ½) 2π / n_theta`, and one site per
//! pole. With `n_theta` a multiple of `4m` no grid meridian lies on a zero
//! of `cos mθ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::nodal::ZERO_THRESHOLD;
use crate::unionfind::UnionFind;

/// Associated Legendre function `P_N^m(x)` with the Condon–Shortley phase,
/// by upward recurrence in the degree starting from `P_m^m`.
pub fn legendre_p(degree: i64, order: i64, x: f64) -> Result<f64> {
    if order < 0 || order > degree || !(x.abs() <= 1.0) {
        return Err(Error::LegendreArgs { degree, order, x });
    }
    Ok(legendre_cs(degree as usize, order as usize, x, libm::sqrt((1.0 - x) * (1.0 + x))))
}

/// `P_N^m(cos φ)` from `cos φ` and `sin φ`; near the poles `sin φ` taken
/// directly avoids the cancellation in `√(1 - x²)`.
fn legendre_at_angle(degree: usize, order: usize, phi: f64) -> f64 {
    legendre_cs(degree, order, libm::cos(phi), libm::sin(phi))
}

fn legendre_cs(n: usize, m: usize, x: f64, s: f64) -> f64 {
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= -((2 * k + 1) as f64) * s;
    }
    if n == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    for l in (m + 2)..=n {
        let next = ((2 * l - 1) as f64 * x * cur - (l + m - 1) as f64 * prev) / (l - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Sampled `Re Y_N^m` on the latitude–longitude grid with pole sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereHarmonic {
    pub degree: usize,
    pub order: usize,
    pub n_phi: usize,
    pub n_theta: usize,
    /// `P_N^m(cos φ_i)` per row.
    pub legendre: Vec<f64>,
    /// Row-major `n_phi × n_theta` values, then north and south pole.
    pub values: Vec<f64>,
}

impl SphereHarmonic {
    pub fn new(degree: usize, order: usize, n_phi: usize, n_theta: usize) -> Result<Self> {
        if order == 0 || order > degree {
            return Err(Error::InvalidArgument("sphere harmonics need 1 <= m <= N"));
        }
        if n_phi < 16 * degree {
            return Err(Error::SphereGridTooCoarse("need n_phi >= 16 N"));
        }
        if n_theta == 0 || n_theta % (4 * order) != 0 {
            return Err(Error::SphereGridTooCoarse("n_theta must be a positive multiple of 4 m"));
        }
        let norm = libm::sqrt((2 * degree + 1) as f64);
        let legendre: Vec<f64> = (0..n_phi).map(|i| legendre_at_angle(degree, order, phi_row(i, n_phi))).collect();
        let changes = legendre.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
        if changes != degree - order {
            return Err(Error::SphereGridTooCoarse("latitude zeros of P_N^m are not resolved"));
        }
        let mut values = Vec::with_capacity(n_phi * n_theta + 2);
        for p in &legendre {
            for j in 0..n_theta {
                values.push(norm * p * libm::cos(order as f64 * theta_col(j, n_theta)));
            }
        }
        // P_N^m(±1) = 0 for m ≥ 1
        values.push(0.0);
        values.push(0.0);
        Ok(Self { degree, order, n_phi, n_theta, legendre, values })
    }

    /// Closed-form field value at `(φ, θ)`.
    pub fn eval(&self, phi: f64, theta: f64) -> f64 {
        let p = legendre_at_angle(self.degree, self.order, phi);
        libm::sqrt((2 * self.degree + 1) as f64) * p * libm::cos(self.order as f64 * theta)
    }

    pub fn north(&self) -> usize {
        self.n_phi * self.n_theta
    }

    pub fn south(&self) -> usize {
        self.north() + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j % self.n_theta
    }

    fn phi(&self, i: usize) -> f64 {
        phi_row(i, self.n_phi)
    }

    /// Gradient magnitude at every site by centered differences; poles use
    /// differences across the pole along two orthogonal great circles.
    pub fn gradient_norms(&self) -> Vec<f64> {
        let (np, nt) = (self.n_phi, self.n_theta);
        let v = &self.values;
        let dth = TAU / nt as f64;
        let mut out = vec![0.0; v.len()];
        for i in 0..np {
            let (up, phi_up) = if i == 0 { (self.north(), 0.0) } else { (self.idx(i - 1, 0), self.phi(i - 1)) };
            let (down, phi_down) = if i + 1 == np { (self.south(), PI) } else { (self.idx(i + 1, 0), self.phi(i + 1)) };
            let sin_phi = libm::sin(self.phi(i));
            for j in 0..nt {
                let at = |base: usize| if base >= self.north() { v[base] } else { v[base + j] };
                let d_phi = (at(down) - at(up)) / (phi_down - phi_up);
                let d_th = (v[self.idx(i, j + 1)] - v[self.idx(i, j + nt - 1)]) / (2.0 * dth * sin_phi);
                out[self.idx(i, j)] = libm::hypot(d_phi, d_th);
            }
        }
        for (pole, row) in [(self.north(), 0), (self.south(), np - 1)] {
            let r = if row == 0 { self.phi(0) } else { PI - self.phi(np - 1) };
            let across = |j: usize| (v[self.idx(row, j)] - v[self.idx(row, j + nt / 2)]) / (2.0 * r);
            out[pole] = libm::hypot(across(0), across(nt / 4));
        }
        out
    }
}

fn phi_row(i: usize, n_phi: usize) -> f64 {
    (i as f64 + 0.5) * PI / n_phi as f64
}

fn theta_col(j: usize, n_theta: usize) -> f64 {
    (j as f64 + 0.5) * TAU / n_theta as f64
}

/// Nodal counts on the sphere grid next to the closed-form product oracle
/// and the `N m` expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereNodalReport {
    pub degree: usize,
    pub order: usize,
    pub n_phi: usize,
    pub n_theta: usize,
    pub component_count: usize,
    pub domain_count: usize,
    /// Saddle cells plus the two poles.
    pub singular_point_count: usize,
    pub saddle_cells: usize,
    /// Number of nodal curves through each pole (half the sign changes
    /// around the first and last latitude rows).
    pub pole_branches: [usize; 2],
    /// Minimum mean corner gradient over cells touching a singular point.
    pub regularity_margin: f64,
    pub oracle_latitude_circles: usize,
    pub oracle_meridians: usize,
    pub oracle_domains: usize,
    pub oracle_singular_points: usize,
    /// `N · m`, reported beside the measured counts.
    pub nm_expression: usize,
    pub domains_match_nm: bool,
    pub singular_match_nm: bool,
}

/// Counts nodal-set components, nodal domains, and singular points of
/// `Re Y_N^m` on an `n_phi × n_theta` grid.
pub fn sphere_nodal_counts(degree: usize, order: usize, n_phi: usize, n_theta: usize) -> Result<SphereNodalReport> {
    let y = SphereHarmonic::new(degree, order, n_phi, n_theta)?;
    let v = &y.values;
    let (np, nt) = (n_phi, n_theta);
    let sign = |x: f64| if x >= ZERO_THRESHOLD { 1 } else if x <= -ZERO_THRESHOLD { -1 } else { 0 };

    // nodal domains over latitude sites; pole sites are zeros
    let mut uf = UnionFind::new(v.len());
    for i in 0..np {
        for j in 0..nt {
            let a = y.idx(i, j);
            let s = sign(v[a]);
            if s == 0 {
                continue;
            }
            let right = y.idx(i, j + 1);
            if sign(v[right]) == s {
                uf.union(a, right);
            }
            if i + 1 < np {
                let below = y.idx(i + 1, j);
                if sign(v[below]) == s {
                    uf.union(a, below);
                }
            }
        }
    }
    let domain_count = uf.count_roots(|k| sign(v[k]) != 0);

    // cells: quads (i, j) for i < np - 1, then north caps, then south caps
    let quads = (np - 1) * nt;
    let cap_n = quads;
    let cap_s = quads + nt;
    let ncells = quads + 2 * nt;
    let corners = |c: usize| -> Vec<usize> {
        if c < quads {
            let (i, j) = (c / nt, c % nt);
            vec![y.idx(i, j), y.idx(i, j + 1), y.idx(i + 1, j), y.idx(i + 1, j + 1)]
        } else if c < cap_s {
            let j = c - cap_n;
            vec![y.north(), y.idx(0, j), y.idx(0, j + 1)]
        } else {
            let j = c - cap_s;
            vec![y.south(), y.idx(np - 1, j), y.idx(np - 1, j + 1)]
        }
    };
    let nodal: Vec<bool> = (0..ncells)
        .map(|c| {
            let s: Vec<i32> = corners(c).iter().map(|&k| sign(v[k])).collect();
            s.contains(&0) || (s.contains(&1) && s.contains(&-1))
        })
        .collect();
    let mut cuf = UnionFind::new(ncells);
    let join = |a: usize, b: usize, cuf: &mut UnionFind| {
        if nodal[a] && nodal[b] {
            cuf.union(a, b);
        }
    };
    for c in 0..quads {
        let (i, j) = (c / nt, c % nt);
        join(c, i * nt + (j + 1) % nt, &mut cuf);
        if i + 2 < np {
            join(c, c + nt, &mut cuf);
        }
    }
    for j in 0..nt {
        join(cap_n + j, cap_n + (j + 1) % nt, &mut cuf);
        join(cap_s + j, cap_s + (j + 1) % nt, &mut cuf);
        if np >= 2 {
            join(cap_n + j, j, &mut cuf);
            join(cap_s + j, (np - 2) * nt + j, &mut cuf);
        }
    }
    let component_count = cuf.count_roots(|c| nodal[c]);

    // saddle cells: diagonal corners agree, adjacent corners disagree
    let mut saddle = vec![false; ncells];
    for c in 0..quads {
        let k = corners(c);
        let s: Vec<i32> = k.iter().map(|&x| sign(v[x])).collect();
        saddle[c] = s[0] != 0 && s[0] == s[3] && s[1] == s[2] && s[1] == -s[0];
    }
    let saddle_cells = saddle.iter().filter(|&&b| b).count();
    let branches = |row: usize| {
        (0..nt).filter(|&j| sign(v[y.idx(row, j)]) != sign(v[y.idx(row, j + 1)])).count() / 2
    };

    let grads = y.gradient_norms();
    let mut margin = f64::INFINITY;
    for c in 0..ncells {
        if saddle[c] || c >= quads {
            let k = corners(c);
            let mean = k.iter().map(|&x| grads[x]).sum::<f64>() / k.len() as f64;
            margin = margin.min(mean);
        }
    }

    let oracle_domains = 2 * order * (degree - order + 1);
    let oracle_singular_points = 2 * order * (degree - order) + 2;
    let nm = degree * order;
    Ok(SphereNodalReport {
        degree,
        order,
        n_phi,
        n_theta,
        component_count,
        domain_count,
        singular_point_count: saddle_cells + 2,
        saddle_cells,
        pole_branches: [branches(0), branches(np - 1)],
        regularity_margin: margin,
        oracle_latitude_circles: degree - order,
        oracle_meridians: 2 * order,
        oracle_domains,
        oracle_singular_points,
        nm_expression: nm,
        domains_match_nm: domain_count == nm,
        singular_match_nm: saddle_cells + 2 == nm,
    })
}

/// Default grid for degree `N`, order `m`, refined `level` times.
pub fn default_grid(degree: usize, order: usize, level: u32) -> (usize, usize) {
    let n_phi = 16 * degree.max(1) * (1 << level);
    let step = 4 * order.max(1);
    let n_theta = (2 * n_phi).div_ceil(step) * step;
    (n_phi, n_theta)
}

/// Value and gradient of `Re Y_N^m` at the two fixed points of the rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub degree: usize,
    pub order: usize,
    pub values: [f64; 2],
    pub gradients: [f64; 2],
    /// Step used for the across-pole differences.
    pub step: f64,
    /// Whether each pole is a zero with vanishing gradient (`≤ 1e-6`).
    pub critical: [bool; 2],
}

/// Evaluates `Re Y_N^m` at the poles and estimates the gradient there by
/// central differences across the pole along the meridians `θ = 0` and
/// `θ = π/2`.
pub fn fixed_point_vanishing_check(degree: usize, order: usize) -> Result<FixedPointReport> {
    if order == 0 || order > degree {
        return Err(Error::InvalidArgument("fixed-point check needs 1 <= m <= N"));
    }
    let step = 1e-6;
    let norm = libm::sqrt((2 * degree + 1) as f64);
    let f = |phi: f64, theta: f64| norm * legendre_at_angle(degree, order, phi) * libm::cos(order as f64 * theta);
    let mut values = [0.0; 2];
    let mut gradients = [0.0; 2];
    for k in 0..2 {
        values[k] = norm * legendre_cs(degree, order, if k == 0 { 1.0 } else { -1.0 }, 0.0);
        let near = if k == 0 { step } else { PI - step };
        let across = |theta: f64| (f(near, theta) - f(near, theta + PI)) / (2.0 * step);
        gradients[k] = libm::hypot(across(0.0), across(PI / 2.0));
    }
    let critical = [0, 1].map(|k| values[k].abs() <= 1e-12 && gradients[k] <= 1e-6);
    Ok(FixedPointReport { degree, order, values, gradients, step, critical })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_closed_forms() {
        for n in 0..8 {
            assert!((legendre_p(n, 0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((legendre_p(2, 0, 0.5).unwrap() + 0.125).abs() < 1e-15);
        // P_1^1(x) = -(1 - x²)^{1/2}
        assert!((legendre_p(1, 1, 0.6).unwrap() + 0.8).abs() < 1e-15);
        assert!(legendre_p(2, 3, 0.5).is_err());
        assert!(legendre_p(2, 1, 1.5).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(SphereHarmonic::new(2, 1, 16, 8), Err(Error::SphereGridTooCoarse(_))));
        assert!(matches!(SphereHarmonic::new(2, 1, 32, 6), Err(Error::SphereGridTooCoarse(_))));
        assert!(SphereHarmonic::new(2, 3, 32, 12).is_err());
        assert!(SphereHarmonic::new(2, 1, 32, 64).is_ok());
    }

    #[test]
    fn poles_vanish() {
        let y = SphereHarmonic::new(3, 2, 48, 96).unwrap();
        assert_eq!(y.values[y.north()], 0.0);
        assert_eq!(y.values[y.south()], 0.0);
        assert!(y.eval(0.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_grid_rules() {
        assert_eq!(default_grid(2, 1, 0), (32, 64));
        assert_eq!(default_grid(3, 3, 1), (96, 192));
        let (_, nt) = default_grid(5, 3, 0);
        assert_eq!(nt % 12, 0);
    }
}
