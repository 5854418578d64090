use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("assumption check failed: {0}")]
    Assumptions(String),

    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),

    #[error("Kato transport drift: unitarity {unitarity:.3e}, intertwining {intertwining:.3e}")]
    TransportDrift { unitarity: f64, intertwining: f64 },

    #[error("operation requires zero temperature")]
    RequiresZeroTemperature,

    #[error("operation requires a finite inverse temperature")]
    RequiresFiniteTemperature,

    #[error("operation requires the photonic dispersion relation")]
    RequiresPhotonic,

    #[error("truncated frequency integral did not converge (tail {tail:.3e})")]
    NonConvergent { tail: f64 },

    #[error("correlation moment table covers |x| <= {max:.3e}, requested {requested:.3e}")]
    MomentTableRange { max: f64, requested: f64 },

    #[error("unresolved oscillation: phase increment {phase:.3} rad per panel at the refinement cap")]
    UnresolvedOscillation { phase: f64 },

    #[error("node budget exhausted: {needed} nodes requested, cap {cap}")]
    NodeBudget { needed: usize, cap: usize },

    #[error("norm drift {0:.3e} exceeds tolerance")]
    NormDrift(f64),

    #[error("Fock cutoff leakage {0:.3e} exceeds 5%")]
    Leakage(f64),

    #[error("Hilbert space dimension {0} exceeds memory budget")]
    DimensionBudget(usize),
}

pub type Result<T> = std::result::Result<T, LabError>;
