use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NonHermitianInput { asymmetry: f64, tolerance: f64 },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue gap {gap:.3e} below tolerance {tolerance:.3e}")]
    DegenerateSpectrum { gap: f64, tolerance: f64 },

    #[error("function undefined at eigenvalue {re} + {im}i")]
    FunctionUndefined { re: f64, im: f64 },

    #[error("projector is not a Hermitian idempotent (residual {residual:.3e})")]
    InvalidProjector { residual: f64 },

    #[error("eigen-solver did not converge")]
    NoConvergence,

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCp { min_eigenvalue: f64 },

    #[error("map is not trace preserving (residual {residual:.3e})")]
    NotTp { residual: f64 },

    #[error("map output is not a physical state: {0}")]
    NonPhysicalOutput(String),

    #[error("generator does not kill the trace (residual {residual:.3e})")]
    TraceNotKilled { residual: f64 },

    #[error("generator has no spectral gap: the stationary state is not unique")]
    ZeroGap,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("decay rate Gamma = {gamma} is below A/2 = {half_a}")]
    RateOrderViolated { gamma: f64, half_a: f64 },

    #[error("relaxation times violate tau1 <= 2 tau3 (tau1 = {tau1}, tau3 = {tau3})")]
    SemigroupConstraintViolated { tau1: f64, tau3: f64 },

    #[error("not a probability distribution: {0}")]
    NotDistribution(String),

    #[error("stationary vector needs positive rates: {0}")]
    NonPositiveRates(String),

    #[error("no real logarithm: {0}")]
    LogDoesNotExist(String),

    #[error("outside the domain of the inequality: {0}")]
    DomainError(String),

    #[error("stochastic block does not lie on a detailed-balance semigroup: {0}")]
    NotOnSemigroup(String),

    #[error("degenerate Bohr spectrum: {0}")]
    DegenerateBohrSpectrum(String),

    #[error("malformed input: {0}")]
    Parse(String),
}
