use std::f64::consts::{PI, TAU};

use nodalkk_core::assembly::quadratic_form;
use nodalkk_core::spectral::{detect_clusters, lambdas, orthonormality_defect};
use nodalkk_core::{
    assemble_forms, gauge_transform, lowest_eigenpairs, make_base_grid, make_connection, BaseGrid, Complex64,
    Connection, Flux, PeriodicField, PeriodicOneForm, Section, SolverOptions,
};
use proptest::prelude::*;

fn perturbed(dim: usize, n: usize, flux: Flux, seed: u64) -> (BaseGrid, Connection) {
    let g = make_base_grid(dim, n, &PeriodicField::random(dim, seed, 2, 0.3)).unwrap();
    let beta = PeriodicOneForm::random(dim, seed + 1, 2, 0.5);
    let c = make_connection(&g, flux, Some(&beta)).unwrap();
    (g, c)
}

/// Spectrum of the flat 5-point operator twisted by a constant potential,
/// enumerated from plane waves.
fn plane_wave_oracle(n: usize, m: f64, beta: [f64; 2], k: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut all = Vec::with_capacity(n * n);
    for k1 in 0..n {
        for k2 in 0..n {
            let mut lam = 0.0;
            for (ka, b) in [k1, k2].into_iter().zip(beta) {
                lam += 2.0 * nf * nf * (1.0 - (TAU * ka as f64 / nf + m * b / nf).cos());
            }
            all.push(lam);
        }
    }
    all.sort_by(f64::total_cmp);
    all.truncate(k);
    all
}

#[test]
fn flat_trivial_bundle_matches_dispersion() {
    let g = make_base_grid(2, 16, &PeriodicField::zero()).unwrap();
    let c = make_connection(&g, Flux::zero(2), None).unwrap();
    let eigs = lowest_eigenpairs(&assemble_forms(&g, &c, 0).unwrap(), &SolverOptions::with_k(9)).unwrap();
    let want = plane_wave_oracle(16, 0.0, [0.0, 0.0], 9);
    assert!(eigs[0].lambda.abs() < 1e-10);
    assert!((want[1] - 38.9736).abs() < 1e-4);
    for (e, w) in eigs.iter().zip(&want) {
        assert!((e.lambda - w).abs() < 1e-9 * (1.0 + w), "{} vs {}", e.lambda, w);
    }
}

#[test]
fn constant_potential_shifts_plane_waves() {
    let beta = [0.7, -1.3];
    let g = make_base_grid(2, 12, &PeriodicField::zero()).unwrap();
    let form = PeriodicOneForm::from_components(vec![PeriodicField::constant(beta[0]), PeriodicField::constant(beta[1])]);
    let c = make_connection(&g, Flux::zero(2), Some(&form)).unwrap();
    for m in [1, 2, -1] {
        let eigs = lowest_eigenpairs(&assemble_forms(&g, &c, m).unwrap(), &SolverOptions::with_k(6)).unwrap();
        let want = plane_wave_oracle(12, f64::from(m), beta, 6);
        for (e, w) in eigs.iter().zip(&want) {
            assert!((e.lambda - w).abs() < 1e-9 * (1.0 + w), "m={m}: {} vs {}", e.lambda, w);
        }
    }
}

#[test]
fn landau_levels_converge_to_two_pi_mc() {
    let mut prev = f64::INFINITY;
    for n in [16, 32] {
        let g = make_base_grid(2, n, &PeriodicField::zero()).unwrap();
        let c = make_connection(&g, Flux::plane(2, 0, 1, 1), None).unwrap();
        let eigs = lowest_eigenpairs(&assemble_forms(&g, &c, 2).unwrap(), &SolverOptions::with_k(6)).unwrap();
        let clusters = detect_clusters(&lambdas(&eigs), 1e-6);
        let first = &clusters.groups[0];
        assert_eq!(first.size, 2);
        let err = (first.mean - 4.0 * PI).abs() / (4.0 * PI);
        assert!(err < 0.05 && err < prev, "n={n}: error {err}");
        prev = err;
    }
}

#[test]
fn residuals_and_orthonormality_are_certified() {
    let (g, c) = perturbed(2, 20, Flux::plane(2, 0, 1, 1), 3);
    let op = assemble_forms(&g, &c, 1).unwrap();
    let opts = SolverOptions::with_k(6);
    let eigs = lowest_eigenpairs(&op, &opts).unwrap();
    for e in &eigs {
        assert!(e.residual <= opts.tol * (e.lambda + 1.0));
        assert!((e.section.norm(&g) - 1.0).abs() < 1e-10);
        assert!((e.total() - e.lambda - 1.0).abs() < 1e-12);
    }
    assert!(orthonormality_defect(&eigs, op.mass()) < 1e-8);
    assert!(eigs.windows(2).all(|w| w[0].lambda <= w[1].lambda));
}

#[test]
fn three_dimensional_iterative_solve() {
    let flux = Flux::new(3, &[vec![0, 1, 0], vec![-1, 0, 2], vec![0, -2, 0]]).unwrap();
    let (g, c) = perturbed(3, 10, flux, 5);
    let op = assemble_forms(&g, &c, 1).unwrap();
    assert_eq!(op.stiffness().hermitian_defect(), 0.0);
    let opts = SolverOptions { k: 4, dense_limit: 0, ..Default::default() };
    let eigs = lowest_eigenpairs(&op, &opts).unwrap();
    for e in &eigs {
        assert!(e.residual <= opts.tol * (e.lambda + 1.0));
        let rq = op.rayleigh_quotient(&e.section).unwrap();
        assert!((rq - e.lambda).abs() < 1e-8 * (1.0 + e.lambda));
    }
}

#[test]
fn plane_fluxes_and_cocycle() {
    let flux = Flux::new(3, &[vec![0, 2, -1], vec![-2, 0, 3], vec![1, -3, 0]]).unwrap();
    let (g, c) = perturbed(3, 8, flux.clone(), 9);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for total in c.plane_flux(&g, a, b) {
            assert!((total - TAU * flux.get(a, b) as f64).abs() < 1e-9, "({a},{b}): {total}");
        }
    }
    for m in [-2, 1, 3] {
        assert!(c.cocycle_defect(&g, m) < 1e-12);
    }
}

fn random_section(g: &BaseGrid, c: &Connection, m: i32, seed: u64) -> Section {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let values = (0..g.len()).map(|_| Complex64::new(next(), next())).collect();
    Section::new(c, m, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_hermitian_and_nonnegative(seed in 0u64..1000, m in -3i32..=3, c12 in -2i64..=2, s1 in 0u64..1000, s2 in 0u64..1000) {
        let (g, c) = perturbed(2, 8, Flux::plane(2, 0, 1, c12), seed);
        let op = assemble_forms(&g, &c, m).unwrap();
        prop_assert_eq!(op.stiffness().hermitian_defect(), 0.0);
        let x = random_section(&g, &c, m, s1);
        let y = random_section(&g, &c, m, s2);
        let q = quadratic_form(&g, &c, m, x.values());
        prop_assert!(q >= 0.0);
        let mut kx = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut ky = kx.clone();
        op.stiffness().mul_vec(x.values(), &mut kx);
        op.stiffness().mul_vec(y.values(), &mut ky);
        let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(p, q)| p.conj() * q).sum::<Complex64>();
        let lhs = dot(&kx, y.values());
        let rhs = dot(x.values(), &ky);
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
        prop_assert!((dot(x.values(), &kx).re - q).abs() < 1e-9 * (1.0 + q));
    }

    #[test]
    fn gauge_transform_preserves_spectrum(seed in 0u64..1000, m in 1i32..=3, c12 in 0i64..=2, chi_seed in 0u64..1000) {
        let (g, c) = perturbed(2, 10, Flux::plane(2, 0, 1, c12), seed);
        let chi_field = PeriodicField::random(2, chi_seed, 3, 2.0);
        let chi: Vec<f64> = (0..g.len()).map(|i| chi_field.eval(&g.point(i)[..2])).collect();
        let opts = SolverOptions::with_k(5);
        let eigs = lowest_eigenpairs(&assemble_forms(&g, &c, m).unwrap(), &opts).unwrap();
        let (c2, s2) = gauge_transform(&c, &eigs[0].section, &g, &chi).unwrap();
        let op2 = assemble_forms(&g, &c2, m).unwrap();
        let eigs2 = lowest_eigenpairs(&op2, &opts).unwrap();
        for (a, b) in eigs.iter().zip(&eigs2) {
            prop_assert!((a.lambda - b.lambda).abs() <= 1e-10 * a.lambda.abs().max(1.0));
        }
        let rq = op2.rayleigh_quotient(&s2).unwrap();
        prop_assert!((rq - eigs[0].lambda).abs() <= 1e-10 * eigs[0].lambda.max(1.0));
    }

    #[test]
    fn opposite_weights_share_the_spectrum(seed in 0u64..1000, m in 1i32..=3, c12 in -2i64..=2) {
        let (g, c) = perturbed(2, 8, Flux::plane(2, 0, 1, c12), seed);
        let opts = SolverOptions::with_k(6);
        let plus = lowest_eigenpairs(&assemble_forms(&g, &c, m).unwrap(), &opts).unwrap();
        let minus = lowest_eigenpairs(&assemble_forms(&g, &c, -m).unwrap(), &opts).unwrap();
        for (a, b) in plus.iter().zip(&minus) {
            prop_assert!((a.lambda - b.lambda).abs() <= 1e-10 * a.lambda.max(1.0));
        }
    }
}
