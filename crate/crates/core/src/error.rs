use thiserror::Error;

use crate::rates::Order;
use crate::solvers::SolverTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("matrix is not Hermitian (max |A - A^H| = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix is not positive definite")]
    NotPd,
    #[error("matrix is numerically singular")]
    Singular,
    #[error("both matrices are zero")]
    BothZero,
    #[error("sample-mean matrix E[A1^H] is numerically singular")]
    SingularMean,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver did not converge after {} iterations", .0.iterations())]
    NonConvergence(Box<SolverTrace>),
    #[error("solver failed at alpha = {alpha}, order {order}: {source}")]
    SolverDiverged {
        alpha: f64,
        order: Order,
        #[source]
        source: Box<Error>,
    },
}
