use thiserror::Error;

/// Errors raised by model validation, sampling and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RcmError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid mark distribution: {0}")]
    InvalidMarks(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("intensity must be a finite nonnegative number, got {0}")]
    NegativeIntensity(f64),

    #[error("expected point count {expected:.3e} exceeds the cap {cap:.3e}")]
    PointCapExceeded { expected: f64, cap: f64 },

    #[error("candidate pair count {pairs} exceeds the cap {cap}")]
    PairCapExceeded { pairs: u64, cap: u64 },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("torus side {side} is shorter than twice the range bound {range}")]
    TorusTooSmall { side: f64, range: f64 },

    #[error("model has unbounded range and no radial envelope")]
    MissingEnvelope,

    #[error("shell width {width} is smaller than the range bound {range}")]
    ShellTooThin { width: f64, range: f64 },

    #[error("intensity {t} exceeds coupling intensity {t0}")]
    IntensityAboveCoupling { t: f64, t0: f64 },

    #[error("model is not of radially nonincreasing form: {0}")]
    NotRadialMonotone(String),

    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),

    #[error("quadrature did not converge: {0}")]
    QuadratureDiverged(String),

    #[error("divergent pair integral at marks ({p}, {q})")]
    DivergentIntegral { p: f64, q: f64 },

    #[error("invalid limits: {0}")]
    InvalidLimits(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RcmError {
    fn from(e: std::io::Error) -> Self {
        RcmError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RcmError>;
