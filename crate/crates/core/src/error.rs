use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("requested tolerance {requested:e} unattainable; best achievable bound is {achievable:e}")]
    Unattainable { requested: f64, achievable: f64 },

    #[error("principal-value representation invalid: gamma2 = {gamma2:e} exceeds tolerance {tol:e}")]
    RepresentationInvalid { gamma2: f64, tol: f64 },

    #[error("partition enumeration limited to order {max}, got {requested}")]
    OrderTooLarge { requested: usize, max: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("truncation K = {k} is smaller than the stored support {support}")]
    TruncationTooSmall { k: usize, support: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("root bracketing failed on interval ({lo}, {hi})")]
    Bracketing { lo: f64, hi: f64 },

    #[error("MCMC chain accepted no proposals over a window of {window} sweeps; reduce the step size")]
    StepSize { window: usize },

    #[error("insufficient trials: need at least {min}, got {got}")]
    InsufficientTrials { min: usize, got: usize },

    #[error("bound violated at z = ({re}, {im}): |dE| = {lhs:e} > {rhs:e}")]
    BoundViolation { re: f64, im: f64, lhs: f64, rhs: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
