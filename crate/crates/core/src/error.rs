use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid multiplication table: {0}")]
    BadTable(String),

    #[error("element index {index} out of range for group of order {order}")]
    BadIndex { index: usize, order: usize },

    #[error("operands belong to different groups")]
    GroupMismatch,

    #[error("subgroup is not valid for this parent: {0}")]
    BadSubgroup(String),

    #[error(
        "subgroups do not generate the parent: closure has order {closure_order} < {parent_order}"
    )]
    GenerationFailure {
        closure_order: usize,
        parent_order: usize,
    },

    #[error("group order {order} exceeds the dense-matrix cap {cap}")]
    DenseCapExceeded { order: usize, cap: usize },

    #[error("quotient enumeration exceeded the vertex cap {cap}; use smaller (n, q, k)")]
    VertexCapExceeded { cap: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("projection data invalid: {0}")]
    BadProjection(String),

    #[error("norm exponent p = {0} outside [1, inf]")]
    BadNormExponent(f64),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("averaged iteration did not converge within {max_n} steps: {detail}")]
    NonConvergence { max_n: usize, detail: String },

    #[error("eigensolver did not converge after {0} iterations")]
    EigensolverFailure(usize),

    #[error("spectrum/oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Short machine-readable code for each error variant, used by the CLI
/// diagnostics contract.
impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotPrime(_) => "not_prime",
            Error::BadTable(_) => "bad_table",
            Error::BadIndex { .. } => "bad_index",
            Error::GroupMismatch => "group_mismatch",
            Error::BadSubgroup(_) => "bad_subgroup",
            Error::GenerationFailure { .. } => "generation_failure",
            Error::DenseCapExceeded { .. } => "dense_cap_exceeded",
            Error::VertexCapExceeded { .. } => "vertex_cap_exceeded",
            Error::Disconnected => "disconnected",
            Error::BadProjection(_) => "bad_projection",
            Error::BadNormExponent(_) => "bad_norm_exponent",
            Error::HypothesisViolation(_) => "hypothesis_violation",
            Error::NonConvergence { .. } => "non_convergence",
            Error::EigensolverFailure(_) => "eigensolver_failure",
            Error::OracleMismatch(_) => "oracle_mismatch",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
