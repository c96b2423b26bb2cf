//! Spectrum → nodal → perturb → sphere stages.

use std::path::{Path, PathBuf};

use nodalkk_core::nodal::{lift, nodal_report, NodalOptions};
use nodalkk_core::perturb::{fd_check, random_direction, splitting_experiment, DirectionKind, SplitOptions};
use nodalkk_core::spectral::{detect_clusters, lambdas};
use nodalkk_core::sphere::{default_grid, fixed_point_vanishing_check, sphere_nodal_counts, SphereHarmonic};
use nodalkk_core::{assemble_forms, lowest_eigenpairs, BaseGrid, Connection, EigenPair, Error as CoreError, SolverOptions};
use rayon::prelude::*;

use crate::cache::CacheFile;
use crate::config::RunConfig;
use crate::error::{Context, LabError, Result};
use crate::io::{write_atomic, write_json};
use crate::report::*;
use crate::svg;

pub fn cache_path(dir: &Path, m: i32) -> PathBuf {
    dir.join(format!("spectrum_m{m}.nbl"))
}

pub fn solve(grid: &BaseGrid, conn: &Connection, m: i32, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    let op = assemble_forms(grid, conn, m)?;
    lowest_eigenpairs(&op, opts).context(|| format!("solving weight m={m} at n={}", grid.n()))
}

/// Index of the first simple eigenvalue in `eigs`.
pub fn first_simple(eigs: &[EigenPair], gap_tol: f64) -> Option<usize> {
    let c = detect_clusters(&lambdas(eigs), gap_tol);
    // the last cluster may continue past the computed window
    (0..eigs.len().saturating_sub(1)).find(|&i| c.is_simple(i))
}

/// Solves every configured weight; writes one cache per weight into `out`.
pub fn run_spectrum(cfg: &RunConfig, out: Option<&Path>) -> Result<(SpectrumReport, Vec<CacheFile>)> {
    let (grid, conn) = cfg.model()?;
    let opts = cfg.solver_options();
    let solved: Vec<Result<Vec<EigenPair>>> = cfg.solver.weights.par_iter().map(|&m| solve(&grid, &conn, m, &opts)).collect();
    let mut weights = Vec::new();
    let mut caches = Vec::new();
    for (&m, eigs) in cfg.solver.weights.iter().zip(solved) {
        let eigs = eigs?;
        let cache = CacheFile::from_eigenpairs(&eigs, conn.flux(), cfg.solver.seed, cfg.hash_bytes())?;
        let cache_file = match out {
            Some(dir) => {
                let p = cache_path(dir, m);
                cache.write(&p)?;
                Some(p.display().to_string())
            }
            None => None,
        };
        let l = lambdas(&eigs);
        weights.push(WeightSpectrum {
            m,
            total_eigenvalues: eigs.iter().map(EigenPair::total).collect(),
            residuals: eigs.iter().map(|e| e.residual).collect(),
            clusters: clusters_json(&detect_clusters(&l, cfg.perturb.gap_tol)),
            eigenvalues: l,
            cache_file,
        });
        caches.push(cache);
    }
    let report = SpectrumReport { header: Header::new("spectrum", cfg), weights };
    if let Some(dir) = out {
        write_json(&dir.join("spectrum.json"), &report)?;
    }
    Ok((report, caches))
}

/// Loads the cache for weight `m` from `dir`, solving and writing it first
/// when it does not exist.
pub fn load_or_solve(cfg: &RunConfig, dir: &Path, m: i32) -> Result<CacheFile> {
    let p = cache_path(dir, m);
    if p.exists() {
        return CacheFile::read(&p, &cfg.hash_bytes());
    }
    let (grid, conn) = cfg.model()?;
    let eigs = solve(&grid, &conn, m, &cfg.solver_options())?;
    let cache = CacheFile::from_eigenpairs(&eigs, conn.flux(), cfg.solver.seed, cfg.hash_bytes())?;
    cache.write(&p)?;
    Ok(cache)
}

pub fn nodal_options(cfg: &RunConfig) -> NodalOptions {
    NodalOptions {
        n_theta: cfg.nodal.n_theta,
        tau: cfg.nodal.tau,
        sample_count: cfg.nodal.sample_count,
        seed: cfg.solver.seed,
    }
}

/// Nodal report of eigenpair `index` in `cache`. Degenerate eigenvalues are
/// refused unless `force` is set.
pub fn run_nodal(cfg: &RunConfig, cache: &CacheFile, index: usize, force: bool, out: Option<&Path>, with_svg: bool) -> Result<NodalJson> {
    let (grid, conn) = cfg.model()?;
    let eigs = cache.eigenpairs(&grid, &conn)?;
    if index >= eigs.len() {
        return Err(CoreError::IndexOutOfRange { index, len: eigs.len() }.into());
    }
    let clusters = detect_clusters(&lambdas(&eigs), cfg.perturb.gap_tol);
    let size = clusters.cluster_of(index).map_or(1, |c| c.size);
    let simple = size == 1;
    if !simple && !force {
        return Err(LabError::Degenerate { index, size });
    }
    let e = &eigs[index];
    let r = nodal_report(&grid, &conn, &e.section, &nodal_options(cfg))?;
    let qualifies = simple && e.m != 0 && !conn.flux().is_trivial();
    let mut json = NodalJson::from_report(Header::new("nodal", cfg), index, e.lambda, qualifies, force, &r);
    if let Some(dir) = out {
        if with_svg {
            let field = lift(&grid, &conn, &e.section, cfg.nodal.n_theta)?;
            for (name, body) in [("theta", svg::theta_slice(&field, 0, 0)), ("fiber", svg::fiber_slice(&field, 0))] {
                let p = dir.join(format!("nodal_m{}_i{index}_{name}.svg", e.m));
                write_atomic(&p, body.as_bytes())?;
                json.svg_files.push(p.display().to_string());
            }
        }
        write_json(&dir.join(format!("nodal_m{}_i{index}.json", e.m)), &json)?;
    }
    Ok(json)
}

/// Whether a nodal result violates the two-domain law for an eigenfunction
/// that should obey it.
pub fn violates_two_domain_law(r: &NodalJson) -> bool {
    r.qualifies && (r.nodal_domain_count != 2 || r.nodal_set_component_count != 1)
}

/// Finite-difference checks of the first-order formulas on the lowest
/// simple eigenpair of the first configured weight, followed by the seeded
/// splitting battery on the lowest cluster.
pub fn run_perturb(cfg: &RunConfig, out: Option<&Path>) -> Result<PerturbReport> {
    let (grid, conn) = cfg.model()?;
    let opts = cfg.solver_options();
    let m = cfg.solver.weights[0];
    let eigs = solve(&grid, &conn, m, &opts)?;
    let index = first_simple(&eigs, cfg.perturb.gap_tol).ok_or(LabError::Degenerate { index: 0, size: eigs.len() })?;
    let kinds: Vec<DirectionKind> = cfg.perturb.directions.iter().filter_map(|d| DirectionKind::parse(d)).collect();
    let seed = cfg.solver.seed;
    let fd_checks = kinds
        .par_iter()
        .map(|&kind| {
            let dir = random_direction(kind, grid.dim(), seed);
            let r = fd_check(&grid, &conn, m, &[index], &dir, cfg.perturb.fd_eps, cfg.perturb.richardson_eps, &opts)
                .context(|| format!("finite differences along {}", kind.name()))?;
            Ok(FdJson::new(kind.name(), seed, m, index, eigs[index].lambda, &r))
        })
        .collect::<Result<Vec<_>>>()?;
    let split_opts = SplitOptions {
        epsilons: cfg.perturb.epsilons.clone(),
        gap_tol: cfg.perturb.gap_tol,
        fd_eps: cfg.perturb.fd_eps,
        solver: opts.clone(),
    };
    let jobs: Vec<(DirectionKind, u64)> = kinds.iter().flat_map(|&k| (0..cfg.perturb.seeds).map(move |s| (k, s))).collect();
    let splitting = jobs
        .par_iter()
        .map(|&(kind, s)| {
            let r = splitting_experiment(&grid, &conn, m, kind, s, &split_opts)
                .context(|| format!("splitting along {} with seed {s}", kind.name()))?;
            Ok(SplitJson::new(m, &r))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = PerturbReport { header: Header::new("perturb", cfg), fd_checks, splitting };
    if let Some(dir) = out {
        write_json(&dir.join("perturb.json"), &report)?;
    }
    Ok(report)
}

/// Sphere counts for one `(N, m)` pair over `levels` grid doublings.
pub fn sphere_entry(degree: usize, order: usize, levels: u32) -> Result<SphereJson> {
    let reports = (0..levels.max(1))
        .map(|level| {
            let (np, nt) = default_grid(degree, order, level);
            sphere_nodal_counts(degree, order, np, nt)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let fp = fixed_point_vanishing_check(degree, order)?;
    Ok(SphereJson::new(&reports, &fp))
}

pub fn run_sphere(cfg: &RunConfig, out: Option<&Path>, with_svg: bool) -> Result<SphereReport> {
    let entries = cfg
        .sphere
        .pairs
        .par_iter()
        .map(|&[n, m]| sphere_entry(n, m, cfg.sphere.levels))
        .collect::<Result<Vec<_>>>()?;
    let report = SphereReport { header: Header::new("sphere", cfg), entries };
    if let Some(dir) = out {
        if with_svg {
            for &[n, m] in &cfg.sphere.pairs {
                let (np, nt) = default_grid(n, m, 0);
                let y = SphereHarmonic::new(n, m, np, nt)?;
                write_atomic(&dir.join(format!("sphere_N{n}_m{m}.svg")), svg::sphere_plot(&y).as_bytes())?;
            }
        }
        write_json(&dir.join("sphere.json"), &report)?;
    }
    Ok(report)
}
