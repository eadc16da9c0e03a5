use thiserror::Error;

/// Errors surfaced by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("no collision event ahead (state corrupted?)")]
    NoEvent,

    #[error("state is not at the contact surface (residual {residual:.3e})")]
    NotAtContact { residual: f64 },

    #[error("tangential collision, |n.v_rel| = {normal_speed:.3e}")]
    TangentialCollision { normal_speed: f64 },

    #[error("rejection sampling failed after {attempts} attempts")]
    SamplingFailure { attempts: usize },

    #[error("basis rectangle too small: {0}")]
    InsufficientLabels(String),

    #[error("angular index m = {m} not tabulated (max {max})")]
    KernelMiss { m: usize, max: usize },

    #[error("quadrature not converged: max element change {delta:.3e} > {tol:.3e}")]
    NonconvergedQuadrature { delta: f64, tol: f64 },

    #[error("every norm eigenvalue is below the cutoff")]
    EmptySubspace,

    #[error("level {level} at {energy:.6} lies below the free-particle floor {floor:.6} even at norm cutoff {cutoff:e}")]
    BelowVariationalFloor { level: usize, energy: f64, floor: f64, cutoff: f64 },

    #[error("eigensolver failed to converge")]
    EigenNonconvergence,

    #[error("level index {index} out of range ({len} levels)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unfolding fit is not monotone (degree {degree} too high?)")]
    DegenerateFit { degree: usize },

    #[error("need at least {needed} levels, got {got}")]
    InsufficientLevels { needed: usize, got: usize },

    #[error("T-parity requires an L_z = 0 block closed under T: {0}")]
    ParityUnavailable(String),

    #[error("coefficients missing for sigma = {sigma}")]
    MissingCoefficients { sigma: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cache entry corrupt: {0}")]
    CacheCorrupt(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
