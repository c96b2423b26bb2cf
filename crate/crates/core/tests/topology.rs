use std::f64::consts::TAU;

use nodalkk_core::nodal::{
    base_nodal_domains, fiber_zero_count, fiber_zeros, lift, nodal_domains, nodal_report, nodal_set_components,
    section_zero_winding, NodalOptions,
};
use nodalkk_core::{
    lowest_eigenpairs, make_base_grid, make_connection, BaseGrid, Complex64, Connection, Flux, Model, PeriodicField,
    PeriodicOneForm, Section, SolverOptions,
};
use proptest::prelude::*;

fn perturbed(n: usize, c12: i64) -> (BaseGrid, Connection) {
    let g = make_base_grid(2, n, &PeriodicField::random(2, 11, 2, 0.3)).unwrap();
    let beta = PeriodicOneForm::random(2, 12, 2, 0.5);
    let c = make_connection(&g, Flux::plane(2, 0, 1, c12), Some(&beta)).unwrap();
    (g, c)
}

#[test]
fn generic_eigensections_have_two_domains() {
    let (g, c) = perturbed(24, 1);
    let model = Model::new(g.clone(), c.clone()).unwrap();
    for m in 1..=2 {
        let eigs = model.eigenpairs(m, &SolverOptions::with_k(4)).unwrap();
        for e in &eigs {
            let r = nodal_report(&g, &c, &e.section, &NodalOptions::default()).unwrap();
            assert_eq!((r.nodal_domain_count, r.nodal_set_component_count), (2, 1), "m={m} λ={}", e.lambda);
            assert_eq!(r.winding.as_ref().unwrap().total, i64::from(m));
            assert_eq!(r.covering.as_ref().unwrap().exact_fraction(m), 1.0);
            assert!(r.fiber_identity_defect < 1e-12);
            assert!(r.regularity_margin.unwrap() > 0.0);
        }
    }
}

#[test]
fn winding_tracks_the_chern_number() {
    for c12 in [2, -1] {
        let (g, c) = perturbed(16, c12);
        let eigs = lowest_eigenpairs(&nodalkk_core::assemble_forms(&g, &c, 1).unwrap(), &SolverOptions::with_k(3)).unwrap();
        for e in &eigs {
            assert_eq!(section_zero_winding(&g, &c, &e.section).unwrap().total, c12);
        }
    }
}

#[test]
fn twisted_wraps_are_as_smooth_as_the_interior() {
    let (g, c) = perturbed(24, 1);
    let eigs = lowest_eigenpairs(&nodalkk_core::assemble_forms(&g, &c, 2).unwrap(), &SolverOptions::with_k(2)).unwrap();
    let f = lift(&g, &c, &eigs[0].section, None).unwrap();
    let (wrap, interior) = f.wrap_continuity();
    assert!(wrap <= 1.5 * interior, "wrap {wrap} interior {interior}");
    // dropping the twist leaves a visible seam
    let flat = make_connection(&g, Flux::zero(2), None).unwrap();
    let untwisted = Section::new(&flat, 2, eigs[0].section.values().to_vec()).unwrap();
    let f0 = lift(&g, &flat, &untwisted, None).unwrap();
    let (seam, inner) = f0.wrap_continuity();
    assert!(seam > 3.0 * inner, "seam {seam} interior {inner}");
}

#[test]
fn trivial_bundle_product_field_is_disconnected() {
    let g = make_base_grid(2, 16, &PeriodicField::zero()).unwrap();
    let c = make_connection(&g, Flux::zero(2), None).unwrap();
    let eigs = lowest_eigenpairs(&nodalkk_core::assemble_forms(&g, &c, 1).unwrap(), &SolverOptions::with_k(2)).unwrap();
    assert!(eigs[0].lambda.abs() < 1e-10);
    let f = lift(&g, &c, &eigs[0].section, None).unwrap();
    assert_eq!(nodal_set_components(&f).unwrap(), 2);
    assert_eq!(nodal_domains(&f).unwrap(), 2);
}

#[test]
fn weight_zero_lifts_base_domains() {
    let (g, c) = perturbed(20, 1);
    let eigs = lowest_eigenpairs(&nodalkk_core::assemble_forms(&g, &c, 0).unwrap(), &SolverOptions::with_k(5)).unwrap();
    for e in &eigs[1..] {
        let base: Vec<f64> = e.section.values().iter().map(|z| z.re).collect();
        let f = lift(&g, &c, &e.section, None).unwrap();
        assert_eq!(nodal_domains(&f).unwrap(), base_nodal_domains(&g, &base).unwrap());
    }
}

#[test]
fn section_zero_is_refused_by_winding() {
    let g = make_base_grid(2, 8, &PeriodicField::zero()).unwrap();
    let c = make_connection(&g, Flux::plane(2, 0, 1, 1), None).unwrap();
    let mut values = vec![Complex64::new(1.0, 0.0); 64];
    values[9] = Complex64::new(0.0, 0.0);
    let s = Section::new(&c, 1, values).unwrap();
    assert!(section_zero_winding(&g, &c, &s).is_err());
}

proptest! {
    #[test]
    fn fibers_carry_two_m_zeros(a in -5.0f64..5.0, b in -5.0f64..5.0, m in prop_oneof![-4i32..=-1, 1i32..=4]) {
        prop_assume!(a.hypot(b) > 1e-3);
        let zeros = fiber_zeros(a, b, m).unwrap();
        prop_assert_eq!(zeros.len(), 2 * m.unsigned_abs() as usize);
        let mf = f64::from(m);
        for w in zeros.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        for &t in &zeros {
            prop_assert!((0.0..TAU).contains(&t));
            prop_assert!((a * (mf * t).cos() + b * (mf * t).sin()).abs() < 1e-9 * (1.0 + a.hypot(b)));
        }
        prop_assert_eq!(fiber_zero_count(a, b, m, 1e-6).unwrap(), Some(zeros.len()));
    }

    #[test]
    fn lift_reproduces_the_fiber_formula(seed in 0u64..500, m in -3i32..=3) {
        let g = make_base_grid(2, 8, &PeriodicField::random(2, seed, 2, 0.3)).unwrap();
        let c = make_connection(&g, Flux::plane(2, 0, 1, 1), None).unwrap();
        let s = Section::from_fn(&g, &c, m, |x| Complex64::new((TAU * x[0]).sin() + 0.3, (TAU * x[1]).cos())).unwrap();
        let f = lift(&g, &c, &s, None).unwrap();
        prop_assert!(f.fiber_identity_defect() < 1e-12);
        prop_assert_eq!(f.n_theta() % 8, 0);
    }
}
