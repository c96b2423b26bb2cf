use nodalkk::gate::run_criterion;
use nodalkk::pipeline::{load_or_solve, run_nodal, run_spectrum, violates_two_domain_law};
use nodalkk::report::Status;
use nodalkk::{LabError, RunConfig};

fn small(text: &str) -> RunConfig {
    let base = "[geometry]\ndim = 2\nn = 16\nflux = [[0, 1], [-1, 0]]\nu_spec = { kind = \"random\", seed = 11, max_mode = 2, amplitude = 0.3 }\nbeta_spec = { kind = \"random\", seed = 12, max_mode = 2, amplitude = 0.5 }\n[solver]\nk = 6\ntol = 1e-8\nseed = 4\nweights = [1, 2]\n";
    RunConfig::from_toml_with_overrides(base, &text.lines().map(String::from).collect::<Vec<_>>()).unwrap()
}

#[test]
fn spectrum_is_deterministic_across_thread_counts() {
    let cfg = small("");
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_spectrum(&cfg, None).unwrap())
    };
    let (a, ca) = run(1);
    let (b, cb) = run(3);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for (x, y) in ca.iter().zip(&cb) {
        assert_eq!(x.to_bytes(), y.to_bytes());
    }
    assert_eq!(a.header.config_hash, cfg.hash());
    assert_eq!(a.header.seed, 4);
    assert_eq!((a.header.resolution.dim, a.header.resolution.n), (2, 16));
}

#[test]
fn caches_written_twice_are_byte_identical() {
    let cfg = small("");
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_spectrum(&cfg, Some(d1.path())).unwrap();
    run_spectrum(&cfg, Some(d2.path())).unwrap();
    for m in [1, 2] {
        let name = format!("spectrum_m{m}.nbl");
        assert_eq!(std::fs::read(d1.path().join(&name)).unwrap(), std::fs::read(d2.path().join(&name)).unwrap());
    }
    assert!(d1.path().join("spectrum.json").exists());
}

#[test]
fn flat_trivial_weight_zero_starts_at_zero() {
    let cfg = small("geometry.flux=[[0,0],[0,0]]\ngeometry.u_spec={kind=\"flat\"}\ngeometry.beta_spec={kind=\"zero\"}\nsolver.weights=[0]");
    let (r, _) = run_spectrum(&cfg, None).unwrap();
    assert!(r.weights[0].eigenvalues[0].abs() < 1e-10);
    assert_eq!(r.weights[0].total_eigenvalues[0], r.weights[0].eigenvalues[0]);
}

#[test]
fn landau_summary_at_n48() {
    let cfg = small("geometry.n=48\ngeometry.u_spec={kind=\"flat\"}\ngeometry.beta_spec={kind=\"zero\"}\nsolver.weights=[1]");
    let (r, _) = run_spectrum(&cfg, None).unwrap();
    let lowest = r.weights[0].eigenvalues[0];
    assert!((lowest - std::f64::consts::TAU).abs() < 0.05 * std::f64::consts::TAU);
    assert!((r.weights[0].total_eigenvalues[0] - lowest - 1.0).abs() < 1e-12);
}

#[test]
fn nodal_runs_and_controls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("");
    let cache = load_or_solve(&cfg, dir.path(), 2).unwrap();
    let r = run_nodal(&cfg, &cache, 0, false, Some(dir.path()), true).unwrap();
    assert!(r.qualifies && !violates_two_domain_law(&r));
    assert_eq!((r.nodal_domain_count, r.nodal_set_component_count), (2, 1));
    assert_eq!(r.winding_total, Some(2));
    assert_eq!(r.svg_files.len(), 2);
    assert!(dir.path().join("nodal_m2_i0.json").exists());
    assert!(matches!(run_nodal(&cfg, &cache, 99, false, None, false), Err(LabError::Core(_))));

    let trivial = small("geometry.flux=[[0,0],[0,0]]\ngeometry.beta_spec={kind=\"zero\"}");
    let dir = tempfile::tempdir().unwrap();
    let cache = load_or_solve(&trivial, dir.path(), 1).unwrap();
    let r = run_nodal(&trivial, &cache, 0, false, None, false).unwrap();
    assert!(!r.qualifies);
    assert_eq!((r.nodal_domain_count, r.nodal_set_component_count), (2, 2));
}

#[test]
fn degenerate_eigenvalues_need_force() {
    let cfg = small("geometry.flux=[[0,2],[-2,0]]\ngeometry.u_spec={kind=\"flat\"}\ngeometry.beta_spec={kind=\"zero\"}\nsolver.weights=[1]");
    let dir = tempfile::tempdir().unwrap();
    let cache = load_or_solve(&cfg, dir.path(), 1).unwrap();
    assert!(matches!(run_nodal(&cfg, &cache, 0, false, None, false), Err(LabError::Degenerate { index: 0, size: 2 })));
    let forced = run_nodal(&cfg, &cache, 0, true, None, false).unwrap();
    assert!(forced.forced && !forced.qualifies);
}

#[test]
fn changed_config_refuses_old_cache() {
    let dir = tempfile::tempdir().unwrap();
    load_or_solve(&small(""), dir.path(), 1).unwrap();
    let other = small("solver.seed=5");
    assert!(matches!(load_or_solve(&other, dir.path(), 1), Err(LabError::HashMismatch { .. })));
}

#[test]
fn two_domain_criterion_is_inapplicable_without_flux() {
    let cfg = small("geometry.flux=[[0,0],[0,0]]");
    let mut battery = None;
    for id in 1..=3 {
        let c = run_criterion(&cfg, id, &mut battery);
        assert_eq!(c.status, Status::Inapplicable, "{c:?}");
    }
}
