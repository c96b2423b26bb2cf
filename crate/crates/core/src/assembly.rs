//! Discrete quadratic form `Q_m(f) = Σ_e w_e |f_j - U_e f_i|²` and the
//! Hermitian pencil `(K, M)` it defines.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{BaseGrid, Connection, Flux, Section};
use crate::linalg::CsrMatrix;

/// Stiffness matrix `K` (Hermitian, positive semidefinite) and diagonal mass
/// `M` for weight `m`.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    m: i32,
    dim: usize,
    n: usize,
    flux: Flux,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
}

/// Assembles `K` and `M` for weight `m` on `grid` with connection `conn`.
pub fn assemble_forms(grid: &BaseGrid, conn: &Connection, m: i32) -> Result<OperatorPair> {
    conn.check_grid(grid)?;
    let dim = grid.dim();
    let npts = grid.len();
    let mut rows: Vec<Vec<(usize, Complex64)>> = (0..npts)
        .map(|i| {
            let mut r = Vec::with_capacity(2 * dim + 1);
            r.push((i, Complex64::new(0.0, 0.0)));
            r
        })
        .collect();
    for i in 0..npts {
        for a in 0..dim {
            let (j, _) = grid.neighbor(i, a, true);
            let w = grid.edge_weight(i, a);
            let u = conn.link(i, a, m);
            rows[i][0].1 += w;
            rows[j][0].1 += w;
            rows[i].push((j, -u.conj() * w));
            rows[j].push((i, -u * w));
        }
    }
    Ok(OperatorPair {
        m,
        dim,
        n: grid.n(),
        flux: *conn.flux(),
        stiffness: CsrMatrix::from_rows(rows),
        mass: grid.volume_weights().to_vec(),
    })
}

/// Eigenvalue of the full bundle Laplacian on the lifted function:
/// operator eigenvalue plus the vertical contribution `m²`.
pub fn total_eigenvalue(op_eig: f64, m: i32) -> f64 {
    op_eig + f64::from(m) * f64::from(m)
}

/// `Σ_e w_e |f_j - U_e f_i|²` evaluated edge by edge.
pub fn quadratic_form(grid: &BaseGrid, conn: &Connection, m: i32, values: &[Complex64]) -> f64 {
    let mut q = 0.0;
    for i in 0..grid.len() {
        for a in 0..grid.dim() {
            let (j, _) = grid.neighbor(i, a, true);
            q += grid.edge_weight(i, a) * (values[j] - conn.link(i, a, m) * values[i]).norm_sqr();
        }
    }
    q
}

impl OperatorPair {
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

    /// Number of unknowns (`n^d`).
    pub fn size(&self) -> usize {
        self.mass.len()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `M^{-1/2} K M^{-1/2}`.
    pub fn reduced(&self) -> CsrMatrix {
        let d: Vec<f64> = self.mass.iter().map(|w| 1.0 / libm::sqrt(*w)).collect();
        self.stiffness.scaled_symmetric(&d)
    }

    fn check_section(&self, s: &Section) -> Result<()> {
        if s.m() != self.m {
            return Err(Error::WeightMismatch { left: self.m, right: s.m() });
        }
        if s.dim() != self.dim || s.n() != self.n || *s.flux() != self.flux {
            return Err(Error::GridMismatch("section does not belong to this operator"));
        }
        Ok(())
    }

    /// `K s`.
    pub fn apply(&self, s: &Section) -> Result<Section> {
        self.check_section(s)?;
        let mut out = s.clone();
        self.stiffness.mul_vec(s.values(), out.values_mut());
        Ok(out)
    }

    /// `(s* K s) / (s* M s)`.
    pub fn rayleigh_quotient(&self, s: &Section) -> Result<f64> {
        self.check_section(s)?;
        let ks = self.apply(s)?;
        let num: f64 = s.values().iter().zip(ks.values()).map(|(a, b)| (a.conj() * b).re).sum();
        let den: f64 = s.values().iter().zip(&self.mass).map(|(a, w)| a.norm_sqr() * w).sum();
        if !(den > 0.0) {
            return Err(Error::ZeroSection);
        }
        Ok(num / den)
    }

    /// `‖K f - λ M f‖_{M^{-1}} / ‖f‖_M`, the residual in the reduced
    /// (symmetrically scaled) problem.
    pub fn residual(&self, values: &[Complex64], lambda: f64) -> f64 {
        let mut kf = alloc::vec![Complex64::new(0.0, 0.0); values.len()];
        self.stiffness.mul_vec(values, &mut kf);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((k, f), w) in kf.iter().zip(values).zip(&self.mass) {
            num += (k - f * (lambda * w)).norm_sqr() / w;
            den += f.norm_sqr() * w;
        }
        libm::sqrt(num / den)
    }
}
