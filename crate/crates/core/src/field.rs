//! Smooth 1-periodic fields on `T^d` given as finite Fourier sums.
//!
//! Integer wave vectors make every expression exactly periodic, so a field
//! can be sampled on any grid and evaluated at edge midpoints.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Cos,
    Sin,
}

/// `amplitude · cos(2π k·x)` or `amplitude · sin(2π k·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub amplitude: f64,
    pub wavevector: [i32; 3],
    pub basis: Basis,
}

impl FourierTerm {
    fn phase(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, xa) in x.iter().enumerate().take(3) {
            s += f64::from(self.wavevector[a]) * xa;
        }
        TAU * s
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.basis {
            Basis::Cos => self.amplitude * libm::cos(self.phase(x)),
            Basis::Sin => self.amplitude * libm::sin(self.phase(x)),
        }
    }

    /// Partial derivative along axis `a`.
    pub fn derivative(&self, x: &[f64], a: usize) -> f64 {
        let k = TAU * f64::from(self.wavevector[a]);
        match self.basis {
            Basis::Cos => -self.amplitude * k * libm::sin(self.phase(x)),
            Basis::Sin => self.amplitude * k * libm::cos(self.phase(x)),
        }
    }
}

/// Scalar periodic field `constant + Σ terms`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeriodicField {
    pub constant: f64,
    pub terms: Vec<FourierTerm>,
}

impl PeriodicField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self { constant: value, terms: Vec::new() }
    }

    pub fn cos(amplitude: f64, wavevector: [i32; 3]) -> Self {
        Self::zero().with_term(amplitude, wavevector, Basis::Cos)
    }

    pub fn sin(amplitude: f64, wavevector: [i32; 3]) -> Self {
        Self::zero().with_term(amplitude, wavevector, Basis::Sin)
    }

    pub fn with_term(mut self, amplitude: f64, wavevector: [i32; 3], basis: Basis) -> Self {
        self.terms.push(FourierTerm { amplitude, wavevector, basis });
        self
    }

    /// Seeded random Fourier sum over wave vectors with entries in
    /// `[-max_mode, max_mode]`, coefficients decaying like `1/|k|²` and
    /// rescaled so that `sup |field| ≤ amplitude`.
    pub fn random(dim: usize, seed: u64, max_mode: u32, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kmax = max_mode as i32;
        let mut terms = Vec::new();
        for k in half_space_wavevectors(dim, kmax) {
            let k2: i32 = k.iter().map(|v| v * v).sum();
            let decay = 1.0 / f64::from(k2);
            for basis in [Basis::Cos, Basis::Sin] {
                let c: f64 = rng.gen_range(-1.0..1.0);
                terms.push(FourierTerm { amplitude: c * decay, wavevector: k, basis });
            }
        }
        let total: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
        if total > 0.0 {
            for t in &mut terms {
                t.amplitude *= amplitude / total;
            }
        }
        Self { constant: 0.0, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.eval(x)).sum::<f64>()
    }

    pub fn derivative(&self, x: &[f64], a: usize) -> f64 {
        self.terms.iter().map(|t| t.derivative(x, a)).sum()
    }

    /// Upper bound on `sup |field|`.
    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|t| t.amplitude.abs()).sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.constant *= factor;
        for t in &mut out.terms {
            t.amplitude *= factor;
        }
        out
    }
}

/// Real periodic 1-form `Σ_a β_a dx_a`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeriodicOneForm {
    pub components: Vec<PeriodicField>,
}

impl PeriodicOneForm {
    pub fn zero(dim: usize) -> Self {
        Self { components: (0..dim).map(|_| PeriodicField::zero()).collect() }
    }

    pub fn from_components(components: Vec<PeriodicField>) -> Self {
        Self { components }
    }

    /// Seeded random 1-form; each component is an independent
    /// [`PeriodicField::random`] without constant part, so the form carries no
    /// net holonomy.
    pub fn random(dim: usize, seed: u64, max_mode: u32, amplitude: f64) -> Self {
        let components = (0..dim)
            .map(|a| PeriodicField::random(dim, seed.wrapping_mul(0x9e37_79b9).wrapping_add(a as u64 + 1), max_mode, amplitude))
            .collect();
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, a: usize, x: &[f64]) -> f64 {
        self.components.get(a).map_or(0.0, |c| c.eval(x))
    }

    /// Midpoint-rule line integral along the edge from `x` to `x + h e_a`.
    pub fn edge_integral(&self, x: &[f64], a: usize, h: f64) -> f64 {
        let mut mid = [0.0; 3];
        mid[..x.len()].copy_from_slice(x);
        mid[a] += 0.5 * h;
        h * self.component(a, &mid[..x.len()])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.scaled(factor)).collect() }
    }
}

/// Nonzero integer wave vectors with entries in `[-kmax, kmax]`, one from each
/// `±k` pair (first nonzero entry positive).
fn half_space_wavevectors(dim: usize, kmax: i32) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    let range = |active: bool| if active { -kmax..=kmax } else { 0..=0 };
    for k0 in range(dim > 0) {
        for k1 in range(dim > 1) {
            for k2 in range(dim > 2) {
                let k = [k0, k1, k2];
                let first = k.iter().copied().find(|&v| v != 0);
                if matches!(first, Some(v) if v > 0) {
                    out.push(k);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_in_every_axis() {
        let f = PeriodicField::random(3, 11, 2, 0.7);
        let x = [0.13, 0.71, 0.42];
        for a in 0..3 {
            let mut y = x;
            y[a] += 1.0;
            assert!((f.eval(&x) - f.eval(&y)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_field_respects_amplitude() {
        let f = PeriodicField::random(2, 5, 3, 0.4);
        assert!((f.sup_bound() - 0.4).abs() < 1e-12);
        assert_eq!(f, PeriodicField::random(2, 5, 3, 0.4));
        assert_ne!(f, PeriodicField::random(2, 6, 3, 0.4));
    }

    #[test]
    fn derivative_matches_difference() {
        let f = PeriodicField::random(2, 3, 2, 1.0);
        let x = [0.3, 0.6];
        let eps = 1e-6;
        for a in 0..2 {
            let mut p = x;
            let mut q = x;
            p[a] += eps;
            q[a] -= eps;
            let fd = (f.eval(&p) - f.eval(&q)) / (2.0 * eps);
            assert!((fd - f.derivative(&x, a)).abs() < 1e-6);
        }
    }

    #[test]
    fn half_space_counts() {
        assert_eq!(half_space_wavevectors(2, 1).len(), 4);
        assert_eq!(half_space_wavevectors(3, 1).len(), 13);
    }
}
