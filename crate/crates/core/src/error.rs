use thiserror::Error;

/// Errors raised by the library.
///
/// Points are reported in `f64` regardless of the scalar type used for the
/// computation so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown coordinate `{name}` for a field on R^{dim}")]
    UnknownCoordinate { name: String, dim: usize },

    #[error("invalid dimension {0} (supported: 1..=3)")]
    Dimension(usize),

    #[error("incompatible domains: {0}")]
    DomainMismatch(String),

    #[error("field evaluated to {value} at non-singular point {point:?}")]
    Domain { point: Vec<f64>, value: f64 },

    #[error("integrand not finite at node {point:?}")]
    NonFiniteNode { point: Vec<f64> },

    #[error("integrand not integrable near singular point {point:?}")]
    NonIntegrable { point: Vec<f64> },

    #[error("quadrature rule would need {nodes} nodes (limit {limit})")]
    TooManyNodes { nodes: usize, limit: usize },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("cube {corner:?}+{side} is not contained in the domain")]
    CubeOutsideDomain { corner: Vec<f64>, side: f64 },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("empty exponent class: {0}")]
    EmptyClass(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("not in L^p(.): {0}")]
    NotInSpace(String),

    #[error("bracket search exceeded {0} doublings")]
    BracketExhausted(u32),

    #[error("theta too large: resulting exponent {value} at {point:?} leaves (1, inf)")]
    ThetaTooLarge { point: Vec<f64>, value: f64 },

    #[error("sampling plan too small: {0}")]
    DegenerateSampler(String),

    #[error("identity residual {residual:e} exceeds tolerance {tolerance:e} ({what})")]
    Residual {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
