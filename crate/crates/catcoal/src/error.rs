use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature stopped refining before reaching the requested
    /// tolerance. Carries the tolerance that was actually achieved.
    #[error("quadrature did not converge: requested {requested:.3e}, achieved {achieved:.3e}")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },

    /// The coalescent has a single block left; no further merger exists.
    #[error("terminal state: fewer than two blocks remain")]
    TerminalState,

    /// A sampled event does not fit the current census. Indicates a sampler
    /// bug, not a user error.
    #[error("internal consistency error: {0}")]
    Inconsistency(String),

    /// A measure spec or experiment config could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
