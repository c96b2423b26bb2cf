//! Numerical laboratory for equivariant eigenfunctions of Kaluza–Klein
//! (bundle) metrics on principal circle bundles over flat tori.
//!
//! The base is a discretized torus `T^d` (`d ∈ {2, 3}`) carrying a conformal
//! metric `g = e^{2u} δ`. A connection with integer flux matrix `c` selects a
//! nontrivial circle bundle `X → T^d`; weight-`m` equivariant functions on `X`
//! are sections of `L^m`, represented as grid functions that pick up a phase
//! when they cross the period boundary.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: smooth periodic scalar fields and 1-forms (Fourier sums).
//! - [`geometry`]: [`BaseGrid`], [`Connection`] and [`Section`], gauge transforms.
//! - [`assembly`]: the Hermitian pencil `(K, M)` discretizing the quadratic
//!   form `∫ |df + i m f η|²_g dV_g`.
//! - [`spectral`]: lowest eigenpairs with residual certificates and clusters.
//! - [`nodal`]: lifting to the total space, nodal domains, nodal-set
//!   components, covering degree, winding numbers, regularity margins.
//! - [`perturb`]: first-order eigenvalue variations under conformal and
//!   connection perturbations, finite-difference checks, splitting runs.
//! - [`sphere`]: rotation-equivariant spherical harmonics on `S²`, where the
//!   circle action has fixed points.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod error;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod nodal;
pub mod perturb;
pub mod spectral;
pub mod sphere;
pub mod unionfind;

pub use assembly::{assemble_forms, total_eigenvalue, OperatorPair};
pub use error::{Error, Result};
pub use field::{Basis, FourierTerm, PeriodicField, PeriodicOneForm};
pub use geometry::{gauge_transform, make_base_grid, make_connection, BaseGrid, Connection, Flux, Section};
pub use spectral::{lowest_eigenpairs, ClusterReport, EigenPair, SolverOptions};

pub use num_complex::Complex64;

/// Convenience bundle of a base grid and a connection over it.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: BaseGrid,
    pub conn: Connection,
}

impl Model {
    pub fn new(grid: BaseGrid, conn: Connection) -> Result<Self> {
        conn.check_grid(&grid)?;
        Ok(Self { grid, conn })
    }

    pub fn operator(&self, m: i32) -> Result<OperatorPair> {
        assemble_forms(&self.grid, &self.conn, m)
    }

    /// Assembles `L_m` and returns its `k` lowest eigenpairs.
    pub fn eigenpairs(&self, m: i32, opts: &SolverOptions) -> Result<alloc::vec::Vec<EigenPair>> {
        let op = self.operator(m)?;
        lowest_eigenpairs(&op, opts)
    }
}
