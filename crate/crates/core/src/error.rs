use thiserror::Error;

/// Errors raised by set construction, identification, bounds and propagation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("coefficient vector leaves the unit box (max |xi| = {0})")]
    CoefficientOutOfBox(f64),

    #[error("empty coefficient set: the equality constraints admit no point of the unit box")]
    EmptyCoefficientSet,

    #[error("the denominator sigma_min - gamma^T |xi| reaches zero on the feasible set")]
    DenominatorNotPositive,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("SVD did not converge")]
    SvdNoConvergence,

    #[error("input is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("matrix is rank deficient (rank {rank}, required {required})")]
    RankDeficient { rank: usize, required: usize },

    #[error("generator {index} does not factor through the data pseudoinverse (residual {residual:e})")]
    StructureMismatch { index: usize, residual: f64 },

    #[error("inconsistent rank arguments: {0}")]
    InconsistentRanks(String),

    #[error("too many variables for vertex enumeration ({0} > 12)")]
    TooManyVariables(usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { op, expected, got })
    }
}
