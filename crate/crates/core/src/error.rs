use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("steady state is not unique: numerical null space has dimension {dim}")]
    NonUniqueSteadyState { dim: usize },

    #[error("steady-state solver breakdown: {0} (try a different row replacement or tighter refinement)")]
    SolverBreakdown(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("expansion point is unstable (max Re eigenvalue {max_re}); no stationary Gaussian state")]
    UnstableExpansion { max_re: f64 },

    #[error("inconsistent expansion point: residual linear term {0:e}")]
    InconsistentExpansion(f64),

    #[error("fluctuations diverge: drift is marginal or unstable (max Re eigenvalue {max_re})")]
    Diverged { max_re: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parameter file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
