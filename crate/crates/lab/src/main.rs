use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nodalkk::gate::{format_line, run_gate};
use nodalkk::pipeline::{load_or_solve, run_nodal, run_perturb, run_sphere, run_spectrum, violates_two_domain_law};
use nodalkk::{LabError, RunConfig};

#[derive(Parser)]
#[command(name = "nodalkk", version, about = "Equivariant eigenfunctions of circle-bundle metrics over flat tori")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for caches, reports and figures.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override any config key, e.g. `--set geometry.n=48`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(flatten)]
    keys: KeyFlags,
    #[command(subcommand)]
    verb: Verb,
}

/// Shortcuts for the most used config keys.
#[derive(Args)]
struct KeyFlags {
    /// geometry.dim
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// geometry.n
    #[arg(long, global = true)]
    n: Option<usize>,
    /// geometry.flux as TOML, e.g. `[[0,2],[-2,0]]`
    #[arg(long, global = true)]
    flux: Option<String>,
    /// solver.k
    #[arg(long, global = true)]
    k: Option<usize>,
    /// solver.tol
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// solver.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// solver.weights as TOML, e.g. `[1,2]`
    #[arg(long, global = true)]
    weights: Option<String>,
    /// nodal.n_theta
    #[arg(long, global = true)]
    n_theta: Option<usize>,
    /// nodal.tau
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// nodal.sample_count
    #[arg(long, global = true)]
    sample_count: Option<usize>,
}

impl KeyFlags {
    fn overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(format!("{key}={v}"));
            }
        };
        push("geometry.dim", self.dim.map(|v| v.to_string()));
        push("geometry.n", self.n.map(|v| v.to_string()));
        push("geometry.flux", self.flux.clone());
        push("solver.k", self.k.map(|v| v.to_string()));
        push("solver.tol", self.tol.map(|v| format!("{v:e}")));
        push("solver.seed", self.seed.map(|v| v.to_string()));
        push("solver.weights", self.weights.clone());
        push("nodal.n_theta", self.n_theta.map(|v| v.to_string()));
        push("nodal.tau", self.tau.map(|v| format!("{v:e}")));
        push("nodal.sample_count", self.sample_count.map(|v| v.to_string()));
        out
    }
}

#[derive(Subcommand)]
enum Verb {
    /// Lowest eigenpairs for every configured weight; writes caches and spectrum.json.
    Spectrum,
    /// Nodal report of one cached eigenpair.
    Nodal {
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Accept an eigenvalue inside a degenerate cluster.
        #[arg(long)]
        force: bool,
        /// Write theta and fiber slice figures.
        #[arg(long)]
        svg: bool,
    },
    /// Finite-difference checks and the splitting battery.
    Perturb,
    /// Spherical-harmonic counts for the configured (N, m) pairs.
    Sphere {
        #[arg(long)]
        svg: bool,
    },
    /// Runs every acceptance criterion; nonzero exit on any failure.
    Gate,
    /// Prints the effective configuration as TOML.
    Config,
}

fn load_config(cli: &Cli) -> Result<RunConfig, LabError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| LabError::io(p, e))?,
        None => RunConfig::default().to_toml_string(),
    };
    let mut overrides = cli.keys.overrides();
    overrides.extend(cli.overrides.iter().cloned());
    RunConfig::from_toml_with_overrides(&text, &overrides)
}

fn run(cli: Cli) -> Result<ExitCode, LabError> {
    let cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    match cli.verb {
        Verb::Spectrum => {
            let (report, _) = run_spectrum(&cfg, Some(out))?;
            for w in &report.weights {
                let sizes: Vec<usize> = w.clusters.iter().map(|c| c.size).collect();
                println!("m={:>3}  λ = {:?}  clusters {:?}", w.m, w.eigenvalues, sizes);
            }
        }
        Verb::Nodal { m, index, force, svg } => {
            let cache = load_or_solve(&cfg, out, m)?;
            let r = run_nodal(&cfg, &cache, index, force, Some(out), svg)?;
            println!(
                "m={} j={} λ={:.6}: domains {}, nodal-set components {}, winding {:?}, margin {:?}",
                r.m, r.index, r.eigenvalue, r.nodal_domain_count, r.nodal_set_component_count, r.winding_total, r.regularity_margin
            );
            if violates_two_domain_law(&r) {
                eprintln!("two-domain law fails for a qualifying eigenfunction");
                return Ok(ExitCode::FAILURE);
            }
        }
        Verb::Perturb => {
            let r = run_perturb(&cfg, Some(out))?;
            for f in &r.fd_checks {
                println!(
                    "{:<10} analytic {:+.6e}  fd {:+.6e}  rel {:.1e}  ratio {:.2}",
                    f.direction, f.analytic, f.fd, f.rel_error, f.richardson_ratio
                );
            }
            let split = r.splitting.iter().filter(|s| s.runs.iter().all(|x| x.split)).count();
            println!("splitting: {split}/{} runs split the lowest cluster", r.splitting.len());
        }
        Verb::Sphere { svg } => {
            let r = run_sphere(&cfg, Some(out), svg)?;
            for e in &r.entries {
                println!(
                    "N={} m={}: components {}, domains {} (oracle {}), singular {} (oracle {}), N·m {}, margin ratios {:?}",
                    e.degree,
                    e.order,
                    e.component_count,
                    e.domain_count,
                    e.oracle_domains,
                    e.singular_point_count,
                    e.oracle_singular_points,
                    e.nm_expression,
                    e.margin_ratios
                );
            }
        }
        Verb::Gate => {
            let r = run_gate(&cfg, Some(out), |c| println!("{}", format_line(c)))?;
            println!("gate {} in {:.1}s", if r.passed { "passed" } else { "FAILED" }, r.wall_seconds);
            if !r.passed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Verb::Config => print!("{}", cfg.to_toml_string()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
