//! JSON report schema. Every report starts with a [`Header`].

use std::collections::BTreeMap;

use nodalkk_core::nodal::NodalReport;
use nodalkk_core::perturb::{FdCheck, SplitReport};
use nodalkk_core::spectral::ClusterReport;
use nodalkk_core::sphere::{FixedPointReport, SphereNodalReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const TOOL: &str = "nodalkk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    /// `spectrum`, `nodal`, `perturb`, `sphere` or `gate`.
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub dim: usize,
    pub n: usize,
}

impl Header {
    pub fn new(kind: &str, cfg: &RunConfig) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            kind: kind.into(),
            config_hash: cfg.hash(),
            seed: cfg.solver.seed,
            resolution: Resolution { dim: cfg.geometry.dim, n: cfg.geometry.n },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub header: Header,
    pub weights: Vec<WeightSpectrum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpectrum {
    pub m: i32,
    pub eigenvalues: Vec<f64>,
    /// `λ + m²`, eigenvalues of the total-space Laplacian.
    pub total_eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub clusters: Vec<ClusterJson>,
    pub cache_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterJson {
    pub start: usize,
    pub size: usize,
    pub mean: f64,
    pub spread: f64,
    pub gap: Option<f64>,
}

pub fn clusters_json(c: &ClusterReport) -> Vec<ClusterJson> {
    c.groups
        .iter()
        .map(|g| ClusterJson { start: g.start, size: g.size, mean: g.mean, spread: g.spread, gap: g.gap })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalJson {
    pub header: Header,
    pub m: i32,
    pub index: usize,
    pub eigenvalue: f64,
    /// Whether the eigenvalue is simple and the bundle nontrivial, i.e. the
    /// two-domain law applies.
    pub qualifies: bool,
    pub forced: bool,
    pub n_theta: usize,
    pub nodal_domain_count: usize,
    pub nodal_set_component_count: usize,
    pub covering: Option<CoveringJson>,
    pub winding_total: Option<i64>,
    pub winding_plaquettes: Option<usize>,
    pub regularity_margin: Option<f64>,
    pub fiber_identity_defect: f64,
    pub svg_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringJson {
    pub samples: usize,
    /// Fiber-zero count → number of sampled fibers.
    pub counts: BTreeMap<String, usize>,
    /// Fibers skipped because the section is below `tau · max|f|` there.
    pub undefined: usize,
    pub exact_fraction: f64,
}

impl NodalJson {
    pub fn from_report(header: Header, index: usize, eigenvalue: f64, qualifies: bool, forced: bool, r: &NodalReport) -> Self {
        Self {
            header,
            m: r.m,
            index,
            eigenvalue,
            qualifies,
            forced,
            n_theta: r.n_theta,
            nodal_domain_count: r.nodal_domain_count,
            nodal_set_component_count: r.nodal_set_component_count,
            covering: r.covering.as_ref().map(|c| CoveringJson {
                samples: c.samples,
                counts: c.counts.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                undefined: c.undefined,
                exact_fraction: c.exact_fraction(r.m),
            }),
            winding_total: r.winding.as_ref().map(|w| w.total),
            winding_plaquettes: r.winding.as_ref().map(|w| w.count),
            regularity_margin: r.regularity_margin,
            fiber_identity_defect: r.fiber_identity_defect,
            svg_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub header: Header,
    pub fd_checks: Vec<FdJson>,
    pub splitting: Vec<SplitJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdJson {
    pub direction: String,
    pub seed: u64,
    pub m: i32,
    pub index: usize,
    pub eigenvalue: f64,
    pub analytic: f64,
    pub eps: f64,
    pub fd: f64,
    pub rel_error: f64,
    pub richardson_eps: f64,
    pub fd_coarse: f64,
    pub fd_fine: f64,
    pub richardson_ratio: f64,
}

impl FdJson {
    pub fn new(direction: &str, seed: u64, m: i32, index: usize, eigenvalue: f64, r: &FdCheck) -> Self {
        Self {
            direction: direction.into(),
            seed,
            m,
            index,
            eigenvalue,
            analytic: r.analytic,
            eps: r.eps,
            fd: r.fd,
            rel_error: r.rel_error,
            richardson_eps: r.richardson_eps,
            fd_coarse: r.fd_coarse,
            fd_fine: r.fd_fine,
            richardson_ratio: r.richardson_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitJson {
    pub direction: String,
    pub seed: u64,
    pub m: i32,
    pub cluster_size: usize,
    pub before: Vec<f64>,
    pub before_sizes: Vec<usize>,
    pub runs: Vec<SplitRunJson>,
    pub trace_rate: f64,
    pub trace_fd: f64,
    pub trace_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRunJson {
    pub epsilon: f64,
    pub lambdas: Vec<f64>,
    pub min_gap: f64,
    pub gap_over_epsilon: f64,
    pub sizes: Vec<usize>,
    pub split: bool,
}

impl SplitJson {
    pub fn new(m: i32, r: &SplitReport) -> Self {
        Self {
            direction: r.kind.name().into(),
            seed: r.seed,
            m,
            cluster_size: r.cluster_size,
            before: r.before.clone(),
            before_sizes: r.before_sizes.clone(),
            runs: r
                .runs
                .iter()
                .map(|x| SplitRunJson {
                    epsilon: x.epsilon,
                    lambdas: x.lambdas.clone(),
                    min_gap: x.min_gap,
                    gap_over_epsilon: x.gap_over_epsilon,
                    sizes: x.sizes.clone(),
                    split: x.split,
                })
                .collect(),
            trace_rate: r.trace_rate,
            trace_fd: r.trace_fd,
            trace_rel_error: r.trace_rel_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereReport {
    pub header: Header,
    pub entries: Vec<SphereJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereJson {
    pub degree: usize,
    pub order: usize,
    pub n_phi: usize,
    pub n_theta: usize,
    pub component_count: usize,
    pub domain_count: usize,
    pub singular_point_count: usize,
    pub saddle_cells: usize,
    pub pole_branches: [usize; 2],
    pub oracle_latitude_circles: usize,
    pub oracle_meridians: usize,
    pub oracle_domains: usize,
    pub oracle_singular_points: usize,
    /// `N · m`, reported beside the measured counts.
    pub nm_expression: usize,
    pub domains_match_nm: bool,
    pub singular_match_nm: bool,
    /// Regularity margin on successively doubled grids.
    pub margins: Vec<MarginJson>,
    /// `margin[i+1] / margin[i]`.
    pub margin_ratios: Vec<f64>,
    pub pole_values: [f64; 2],
    pub pole_gradients: [f64; 2],
    pub poles_critical: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginJson {
    pub n_phi: usize,
    pub n_theta: usize,
    pub margin: f64,
}

impl SphereJson {
    pub fn new(levels: &[SphereNodalReport], fp: &FixedPointReport) -> Self {
        let r = &levels[0];
        let margins: Vec<MarginJson> = levels
            .iter()
            .map(|l| MarginJson { n_phi: l.n_phi, n_theta: l.n_theta, margin: l.regularity_margin })
            .collect();
        Self {
            degree: r.degree,
            order: r.order,
            n_phi: r.n_phi,
            n_theta: r.n_theta,
            component_count: r.component_count,
            domain_count: r.domain_count,
            singular_point_count: r.singular_point_count,
            saddle_cells: r.saddle_cells,
            pole_branches: r.pole_branches,
            oracle_latitude_circles: r.oracle_latitude_circles,
            oracle_meridians: r.oracle_meridians,
            oracle_domains: r.oracle_domains,
            oracle_singular_points: r.oracle_singular_points,
            nm_expression: r.nm_expression,
            domains_match_nm: r.domains_match_nm,
            singular_match_nm: r.singular_match_nm,
            margin_ratios: margins.windows(2).map(|w| w[1].margin / w[0].margin).collect(),
            margins,
            pole_values: fp.values,
            pole_gradients: fp.gradients,
            poles_critical: fp.critical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub header: Header,
    pub passed: bool,
    pub wall_seconds: f64,
    pub criteria: Vec<CriterionJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The hypothesis of the criterion does not hold for this config.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionJson {
    pub id: u32,
    pub name: String,
    pub status: Status,
    pub detail: String,
    pub failures: Vec<String>,
    pub seconds: f64,
}
