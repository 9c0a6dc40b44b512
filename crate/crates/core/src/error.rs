use thiserror::Error;

pub type Result<T> = std::result::Result<T, AosError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AosError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("weight chain has no unique stationary distribution: {0}")]
    NoUniqueStationary(String),

    #[error("LP infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("LP unbounded")]
    Unbounded,

    #[error("simplex hit the iteration cap ({iterations}); primal residual {residual:.3e}")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("LP solution residual {residual:.3e} exceeds tolerance")]
    Inaccurate { residual: f64 },

    #[error("truncation ceiling S_max={s_max} reached with {mass:.3e} probability mass at the cap")]
    Truncation { s_max: usize, mass: f64 },

    #[error("multiplier search failed: {0}")]
    Bracket(String),

    #[error("oracle failed: {0}")]
    Oracle(String),
}

impl AosError {
    /// Configuration problems are the caller's fault; everything else is numerical.
    pub fn is_config(&self) -> bool {
        matches!(self, AosError::Config(_) | AosError::NoUniqueStationary(_))
    }
}
