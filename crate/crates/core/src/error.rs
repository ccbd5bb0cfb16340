use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("g/kappa = {ratio} exceeds the fast-cavity threshold {threshold}; closed-form results do not apply")]
    RegimeViolation { ratio: f64, threshold: f64 },

    #[error("coherent kick truncated: norm deficit {deficit:.3e} exceeds tolerance {tolerance:.1e}; raise the photon cutoff")]
    TruncationOverflow { deficit: f64, tolerance: f64 },

    #[error("integrator step size underflow at t = {t} (h = {h:.3e}); the problem is too stiff for the requested tolerances")]
    Stiffness { t: f64, h: f64 },

    #[error("singular parameters: {0}")]
    SingularParams(String),

    #[error("concurrence undefined: single-excitation block trace {0:.3e} is below 1e-12")]
    UndefinedConcurrence(f64),

    #[error("matrix is not a valid density operator: {0}")]
    NotDensity(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
