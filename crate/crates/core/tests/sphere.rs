use nodalkk_core::sphere::{default_grid, fixed_point_vanishing_check, legendre_p, sphere_nodal_counts, SphereHarmonic};
use proptest::prelude::*;

/// `P_N^m(x) = (-1)^m (1 - x²)^{m/2} dᵐ/dxᵐ P_N(x)` with `P_N` expanded as
/// `2^{-N} Σ_k (-1)^k C(N,k) C(2N-2k,N) x^{N-2k}`.
fn legendre_series(n: u32, m: u32, x: f64) -> f64 {
    let binom = |a: u32, b: u32| -> f64 { (0..b).fold(1.0, |acc, i| acc * f64::from(a - i) / f64::from(i + 1)) };
    let mut sum = 0.0;
    for k in 0..=n / 2 {
        let power = n - 2 * k;
        if power < m {
            continue;
        }
        let falling: f64 = (0..m).map(|i| f64::from(power - i)).product();
        let coeff = if k % 2 == 0 { 1.0 } else { -1.0 } * binom(n, k) * binom(2 * n - 2 * k, n);
        sum += coeff * falling * x.powi((power - m) as i32);
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign * (1.0 - x * x).powf(f64::from(m) / 2.0) * sum / 2f64.powi(n as i32)
}

#[test]
fn legendre_matches_series_at_half() {
    let v = legendre_p(2, 1, 0.5).unwrap();
    assert!((v - legendre_series(2, 1, 0.5)).abs() < 1e-12);
    assert!((v + 1.299038105676658).abs() < 1e-12);
}

proptest! {
    #[test]
    fn legendre_recurrence_matches_series(n in 0u32..=8, m_frac in 0.0f64..1.0, x in -1.0f64..=1.0) {
        let m = ((f64::from(n) + 1.0) * m_frac) as u32;
        let m = m.min(n);
        let rec = legendre_p(i64::from(n), i64::from(m), x).unwrap();
        let series = legendre_series(n, m, x);
        prop_assert!(rec.is_finite());
        prop_assert!((rec - series).abs() <= 1e-10 * series.abs().max(1.0), "{} vs {}", rec, series);
    }
}

#[test]
fn nodal_counts_follow_the_product_structure() {
    for (n, m, domains, singular) in [(2, 1, 4, 4), (4, 2, 12, 10), (3, 3, 6, 2), (5, 2, 16, 14)] {
        let (np, nt) = default_grid(n, m, 0);
        let r = sphere_nodal_counts(n, m, np, nt).unwrap();
        assert_eq!(r.component_count, 1, "({n},{m})");
        assert_eq!((r.domain_count, r.oracle_domains), (domains, domains), "({n},{m})");
        assert_eq!((r.singular_point_count, r.oracle_singular_points), (singular, singular), "({n},{m})");
        assert_eq!(r.pole_branches, [m, m]);
        assert_eq!(r.nm_expression, n * m);
    }
}

#[test]
fn singular_counts_are_stable_under_refinement() {
    for level in 0..3 {
        let (np, nt) = default_grid(4, 3, level);
        let r = sphere_nodal_counts(4, 3, np, nt).unwrap();
        assert_eq!((r.singular_point_count, r.domain_count), (8, 12));
    }
}

#[test]
fn margin_shrinks_at_crossings() {
    let margins: Vec<f64> = (0..3)
        .map(|level| {
            let (np, nt) = default_grid(3, 2, level);
            sphere_nodal_counts(3, 2, np, nt).unwrap().regularity_margin
        })
        .collect();
    assert!(margins[1] <= 0.6 * margins[0] && margins[2] <= 0.6 * margins[1], "{margins:?}");
}

#[test]
fn fixed_points_are_critical_for_m_at_least_two() {
    let r = fixed_point_vanishing_check(3, 2).unwrap();
    assert_eq!(r.values, [0.0, 0.0]);
    assert!(r.gradients[0] < 1e-12 && r.gradients[1] < 1e-12);
    assert_eq!(r.critical, [true, true]);
    // Re Y_1^1 ∝ sin φ cos θ is the coordinate x: zero at the poles but with
    // unit-size gradient there
    let r = fixed_point_vanishing_check(1, 1).unwrap();
    assert_eq!(r.values, [0.0, 0.0]);
    assert!((r.gradients[0] - 3f64.sqrt()).abs() < 1e-6);
    assert_eq!(r.critical, [false, false]);
    assert!(fixed_point_vanishing_check(2, 0).is_err());
}

#[test]
fn harmonic_matches_closed_form_on_grid() {
    let y = SphereHarmonic::new(2, 1, 32, 64).unwrap();
    let (phi, theta) = (0.5 * std::f64::consts::PI / 32.0, std::f64::consts::PI / 64.0);
    assert!((y.values[0] - y.eval(phi, theta)).abs() < 1e-14);
    let exact = -(5f64).sqrt() * 3.0 * phi.cos() * phi.sin() * theta.cos();
    assert!((y.values[0] - exact).abs() < 1e-13);
}
