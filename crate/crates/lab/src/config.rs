//! Run configuration (TOML), validation and content hashing.

use std::path::Path;

use nodalkk_core::perturb::DirectionKind;
use nodalkk_core::{Basis, BaseGrid, Connection, Flux, FourierTerm, PeriodicField, PeriodicOneForm, SolverOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub nodal: NodalConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub sphere: SphereConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dim: usize,
    pub n: usize,
    /// Antisymmetric integer matrix, one row per axis.
    pub flux: Vec<Vec<i64>>,
    pub u_spec: FieldSpec,
    #[serde(default)]
    pub beta_spec: Option<OneFormSpec>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n: 32,
            flux: vec![vec![0, 1], vec![-1, 0]],
            u_spec: FieldSpec::Random { seed: 11, max_mode: 2, amplitude: 0.3 },
            beta_spec: Some(OneFormSpec::Random { seed: 12, max_mode: 2, amplitude: 0.5 }),
        }
    }
}

/// Scalar periodic field on the base torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Flat,
    Random { seed: u64, max_mode: u32, amplitude: f64 },
    Fourier {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        terms: Vec<TermSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub amplitude: f64,
    pub wavevector: Vec<i32>,
    /// `"cos"` or `"sin"`.
    pub basis: String,
}

/// Periodic 1-form added to the flux potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneFormSpec {
    Zero,
    Random { seed: u64, max_mode: u32, amplitude: f64 },
    Components { components: Vec<FieldSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    /// Fiber weights `m` to solve for.
    pub weights: Vec<i32>,
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
}

fn default_dense_limit() -> usize {
    600
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { k: 8, tol: 1e-8, seed: 0, weights: vec![1, 2, 3], dense_limit: default_dense_limit() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodalConfig {
    #[serde(default)]
    pub n_theta: Option<usize>,
    pub tau: f64,
    pub sample_count: usize,
}

impl Default for NodalConfig {
    fn default() -> Self {
        Self { n_theta: None, tau: 1e-6, sample_count: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    /// Any of `metric`, `connection`, `both`, `pure_gauge`.
    pub directions: Vec<String>,
    pub epsilons: Vec<f64>,
    pub fd_eps: f64,
    pub richardson_eps: f64,
    pub gap_tol: f64,
    /// Number of seeds in the splitting battery.
    pub seeds: u64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            directions: ["metric", "connection", "both", "pure_gauge"].map(String::from).to_vec(),
            epsilons: vec![1e-2, 1e-3],
            fd_eps: 1e-4,
            richardson_eps: 1e-2,
            gap_tol: 1e-6,
            seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    /// `[N, m]` pairs.
    pub pairs: Vec<[usize; 2]>,
    /// Grid doublings used for the regularity margin sequence.
    pub levels: u32,
}

impl Default for SphereConfig {
    fn default() -> Self {
        let pairs = (1..=6).flat_map(|n| (1..=n).map(move |m| [n, m])).collect();
        Self { pairs, levels: 3 }
    }
}

impl FieldSpec {
    pub fn build(&self, dim: usize) -> Result<PeriodicField> {
        match self {
            Self::Flat => Ok(PeriodicField::zero()),
            Self::Random { seed, max_mode, amplitude } => Ok(PeriodicField::random(dim, *seed, *max_mode, *amplitude)),
            Self::Fourier { constant, terms } => {
                let mut f = PeriodicField::constant(*constant);
                for t in terms {
                    if t.wavevector.len() != dim {
                        return Err(LabError::Config(format!("wavevector {:?} does not have {dim} entries", t.wavevector)));
                    }
                    let basis = match t.basis.as_str() {
                        "cos" => Basis::Cos,
                        "sin" => Basis::Sin,
                        other => return Err(LabError::Config(format!("unknown basis {other:?}"))),
                    };
                    let mut k = [0; 3];
                    k[..dim].copy_from_slice(&t.wavevector);
                    f.terms.push(FourierTerm { amplitude: t.amplitude, wavevector: k, basis });
                }
                Ok(f)
            }
        }
    }
}

impl OneFormSpec {
    pub fn build(&self, dim: usize) -> Result<PeriodicOneForm> {
        match self {
            Self::Zero => Ok(PeriodicOneForm::zero(dim)),
            Self::Random { seed, max_mode, amplitude } => Ok(PeriodicOneForm::random(dim, *seed, *max_mode, *amplitude)),
            Self::Components { components } => {
                if components.len() != dim {
                    return Err(LabError::Config(format!("beta_spec needs {dim} components")));
                }
                let fields = components.iter().map(|c| c.build(dim)).collect::<Result<Vec<_>>>()?;
                Ok(PeriodicOneForm::from_components(fields))
            }
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Parses a TOML document, applies `key.path=value` overrides, then
    /// validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(2..=3).contains(&g.dim) {
            return Err(LabError::Config(format!("dim must be 2 or 3, got {}", g.dim)));
        }
        Flux::new(g.dim, &g.flux)?;
        if self.solver.weights.is_empty() {
            return Err(LabError::Config("solver.weights is empty".into()));
        }
        for d in &self.perturb.directions {
            if DirectionKind::parse(d).is_none() {
                return Err(LabError::Config(format!("unknown perturbation direction {d:?}")));
            }
        }
        for &[n, m] in &self.sphere.pairs {
            if m == 0 || m > n {
                return Err(LabError::Config(format!("sphere pair [{n}, {m}] needs 1 <= m <= N")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, in hex.
    pub fn hash(&self) -> String {
        hex::encode(self.hash_bytes())
    }

    pub fn hash_bytes(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).into()
    }

    pub fn flux(&self) -> Result<Flux> {
        Ok(Flux::new(self.geometry.dim, &self.geometry.flux)?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            k: self.solver.k,
            tol: self.solver.tol,
            seed: self.solver.seed,
            max_iterations: None,
            dense_limit: self.solver.dense_limit,
        }
    }

    /// Base grid and connection described by the geometry block, at the
    /// given dimension, resolution and flux.
    pub fn model_with(&self, dim: usize, n: usize, flux: Flux) -> Result<(BaseGrid, Connection)> {
        let u = self.geometry.u_spec.build(dim)?;
        let grid = nodalkk_core::make_base_grid(dim, n, &u)?;
        let beta = self.geometry.beta_spec.as_ref().map(|b| b.build(dim)).transpose()?;
        let conn = nodalkk_core::make_connection(&grid, flux, beta.as_ref())?;
        Ok((grid, conn))
    }

    pub fn model(&self) -> Result<(BaseGrid, Connection)> {
        self.model_with(self.geometry.dim, self.geometry.n, self.flux()?)
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| LabError::Config(format!("override {item:?} is not key=value")))?;
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| LabError::Config(format!("empty key in {item:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("{p:?} in {key:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
