use nodalkk_core::perturb::{
    fd_check, random_direction, splitting_experiment, ConnectionVariation, Direction, DirectionKind, MetricVariation,
    SplitOptions,
};
use nodalkk_core::{
    assemble_forms, lowest_eigenpairs, make_base_grid, make_connection, BaseGrid, Connection, Flux, PeriodicField,
    PeriodicOneForm, SolverOptions,
};

fn perturbed(dim: usize, n: usize, seed: u64) -> (BaseGrid, Connection) {
    let g = make_base_grid(dim, n, &PeriodicField::random(dim, seed, 2, 0.3)).unwrap();
    let beta = PeriodicOneForm::random(dim, seed + 1, 2, 0.5);
    let c = make_connection(&g, Flux::plane(dim, 0, 1, 1), Some(&beta)).unwrap();
    (g, c)
}

fn assert_fd(label: &str, r: &nodalkk_core::perturb::FdCheck) {
    assert!(r.rel_error < 1e-4, "{label}: {r:?}");
    assert!((3.5..=4.5).contains(&r.richardson_ratio), "{label}: {r:?}");
}

#[test]
fn metric_and_connection_rates_match_differences_2d() {
    let (g, c) = perturbed(2, 16, 21);
    let opts = SolverOptions::with_k(4);
    for kind in [DirectionKind::Metric, DirectionKind::Connection, DirectionKind::Both] {
        let dir = random_direction(kind, 2, 5);
        let r = fd_check(&g, &c, 1, &[0], &dir, 1e-4, 1e-2, &opts).unwrap();
        assert_fd(kind.name(), &r);
    }
}

#[test]
fn rates_match_differences_3d() {
    let (g, c) = perturbed(3, 8, 31);
    let dir = random_direction(DirectionKind::Both, 3, 6);
    let r = fd_check(&g, &c, 1, &[0], &dir, 1e-4, 1e-2, &SolverOptions::with_k(2)).unwrap();
    assert_fd("both 3d", &r);
}

#[test]
fn conformal_identity_in_two_dimensions() {
    let (g, c) = perturbed(2, 16, 41);
    let u_dot = PeriodicField::random(2, 9, 2, 1.0);
    let eigs = lowest_eigenpairs(&assemble_forms(&g, &c, 2).unwrap(), &SolverOptions::with_k(3)).unwrap();
    let e = &eigs[0];
    let integral: f64 = (0..g.len())
        .map(|i| u_dot.eval(&g.point(i)[..2]) * g.volume_weights()[i] * e.section.values()[i].norm_sqr())
        .sum();
    let identity = -2.0 * e.lambda * integral;
    let dir = Direction { metric: Some(MetricVariation { u_dot }), connection: None };
    let r = fd_check(&g, &c, 2, &[0], &dir, 1e-3, 1e-3, &SolverOptions::with_k(3)).unwrap();
    let extrapolated = (4.0 * r.fd_fine - r.fd_coarse) / 3.0;
    assert!((identity - r.analytic).abs() <= 1e-10 * identity.abs());
    assert!((identity - extrapolated).abs() <= 1e-8 * identity.abs(), "{identity} vs {extrapolated}");
}

#[test]
fn pure_gauge_directions_do_not_move_eigenvalues() {
    let (g, c) = perturbed(2, 12, 51);
    let dir = Direction {
        metric: None,
        connection: Some(ConnectionVariation::Gauge(PeriodicField::random(2, 3, 2, 1.0))),
    };
    let r = fd_check(&g, &c, 3, &[0, 1], &dir, 1e-4, 1e-2, &SolverOptions::with_k(3)).unwrap();
    assert!(r.analytic.abs() <= 1e-10);
    assert!(r.fd.abs() <= 1e-6);
}

#[test]
fn degenerate_multiplet_splits_except_under_gauge() {
    let g = make_base_grid(2, 16, &PeriodicField::zero()).unwrap();
    let c = make_connection(&g, Flux::plane(2, 0, 1, 2), None).unwrap();
    let opts = SplitOptions { solver: SolverOptions::with_k(4), ..Default::default() };
    let generic = splitting_experiment(&g, &c, 1, DirectionKind::Both, 7, &opts).unwrap();
    assert_eq!(generic.cluster_size, 2);
    assert!(generic.runs.iter().all(|r| r.split && r.min_gap > 0.0), "{generic:?}");
    assert!(generic.trace_rel_error < 1e-6);
    let gauge = splitting_experiment(&g, &c, 1, DirectionKind::PureGauge, 7, &opts).unwrap();
    assert!(gauge.runs.iter().all(|r| !r.split));
}
