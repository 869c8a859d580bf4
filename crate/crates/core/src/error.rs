use thiserror::Error;

/// Errors raised by the solver stack.
///
/// Scalars are reported as `f64` regardless of the working precision.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{stage} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no sign change found for scalar equation with right side {g:.6e}{}", node_suffix(*.node))]
    BracketFailure { g: f64, node: Option<usize> },

    #[error("time step h = {h:.6e} too large: contraction factor {kappa:.6e} (limit {limit:.6e})")]
    StepTooLarge { h: f64, kappa: f64, limit: f64 },

    #[error("step {n}: {source}")]
    Step {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time {t} outside [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("at least {required} levels needed, got {got}")]
    InsufficientLevels { required: usize, got: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn node_suffix(node: Option<usize>) -> String {
    match node {
        Some(i) => format!(" at node {i}"),
        None => String::new(),
    }
}

impl Error {
    /// True when the root cause is a solver that failed to converge.
    pub fn is_no_convergence(&self) -> bool {
        match self {
            Error::NoConvergence { .. } => true,
            Error::Step { source, .. } => source.is_no_convergence(),
            _ => false,
        }
    }

    /// Time index attached by the trajectory driver, if any.
    pub fn step_index(&self) -> Option<usize> {
        match self {
            Error::Step { n, .. } => Some(*n),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
