use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported base dimension {0}; expected 2 or 3")]
    UnsupportedDimension(usize),
    #[error("grid needs at least 8 points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("conformal factor reaches |u| = {value}, above the bound {bound}")]
    ConformalBound { value: f64, bound: f64 },
    #[error("flux matrix must be {dim}x{dim}")]
    FluxShape { dim: usize },
    #[error("flux entry ({row}, {col}) = {value} is not an integer")]
    FluxNotInteger { row: usize, col: usize, value: f64 },
    #[error("flux matrix is not antisymmetric at ({row}, {col})")]
    FluxNotAntisymmetric { row: usize, col: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("weight mismatch: {left} vs {right}")]
    WeightMismatch { left: i32, right: i32 },
    #[error("section has zero norm")]
    ZeroSection,
    #[error("requested {k} eigenpairs for dimension {dim}; need 1 <= k <= dim/4")]
    BadEigenCount { k: usize, dim: usize },
    #[error("eigensolver did not converge: index {index} has residual {residual:e} after {iterations} iterations")]
    NotConverged { index: usize, residual: f64, iterations: usize },
    #[error("fiber resolution {n_theta} gives non-integer twist shifts on an n = {n} grid")]
    FiberResolution { n_theta: usize, n: usize },
    #[error("weight m = 0 is not allowed here")]
    ZeroWeight,
    #[error("lifted field vanishes at every lattice site")]
    DegenerateField,
    #[error("section vanishes at plaquette corner {index} (|f| = {modulus:e})")]
    SectionVanishes { index: usize, modulus: f64 },
    #[error("eigenvalue {index} is not simple: cluster of size {size} with spread {spread:e}")]
    DegenerateEigenvalue { index: usize, size: usize, spread: f64 },
    #[error("winding numbers need a 2-dimensional base, got dimension {0}")]
    WindingDimension(usize),
    #[error("invalid associated Legendre arguments: N = {degree}, m = {order}, x = {x}")]
    LegendreArgs { degree: i64, order: i64, x: f64 },
    #[error("sphere grid too coarse: {0}")]
    SphereGridTooCoarse(&'static str),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
