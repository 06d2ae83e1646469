use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("not a directed cycle of the graph: {0}")]
    InvalidCycle(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("guard exceeded: d = {d} is above the limit {limit}")]
    GuardExceeded { d: usize, limit: usize },

    #[error("infeasible generator configuration: {0}")]
    Infeasible(String),

    #[error("I - B is singular (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("covariance is rank deficient (eigenvalue ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("need more samples than variables: n = {n}, d = {d}")]
    TooFewSamples { n: usize, d: usize },

    #[error("no admissible row permutation with all |diagonal| > {eta}")]
    NoAdmissiblePermutation { eta: f64 },

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),

    #[error("node set is not a union of strongly connected components")]
    NotUnionOfSccs,

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::EigenNonConvergence
                | Error::RankDeficient { .. }
                | Error::NoAdmissiblePermutation { .. }
                | Error::ZeroDiagonal(_)
                | Error::Infeasible(_)
        )
    }
}
