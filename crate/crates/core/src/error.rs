use thiserror::Error;

/// Failures raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum HenonError {
    #[error("invalid dimension N = {0}: need N >= 3")]
    InvalidDimension(usize),
    #[error("invalid weight exponent alpha = {0}: need alpha > 0")]
    InvalidWeight(f64),
    #[error("invalid exponent p = {p}: need 1 < p < {p_alpha}")]
    InvalidExponent { p: f64, p_alpha: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integrator step failure at r = {r:.6e} (step {h:.3e})")]
    StepFailure { r: f64, h: f64 },
    #[error("no zero of the normalized profile found before r = {0}")]
    NoZeroFound(f64),
    #[error("degenerate profile: -u' vanishes at r = {0}")]
    DegenerateProfile(f64),
    #[error("residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("discretization failure: {0}")]
    Discretization(String),
    #[error("singular matrix at pivot {0}")]
    SingularMatrix(usize),
    #[error("truncation uncertified: Lambda_1,{k} = {value} <= 1")]
    TruncationUncertified { k: usize, value: f64 },
    #[error("parity violation: found {0} Morse-index-changing points")]
    ParityViolation(usize),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("branch switching failed: {0}")]
    BranchSwitch(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HenonError>;
