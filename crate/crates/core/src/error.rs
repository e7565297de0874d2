//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Coil geometry yields a non-positive inner diameter (physically impossible).
    #[error("non-positive inner diameter: {0} mm")]
    NonPositiveInnerDiameter(f64),

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model assumption is violated (e.g. target coupling exceeds total inductance).
    #[error("model error: {0}")]
    Model(String),

    /// Rational denominator vanishes at or near the evaluation point.
    #[error("pole error: rational denominator ~0 at x = {0}")]
    Pole(f64),

    /// The damped normal equations stayed singular until damping was exhausted.
    #[error("singular normal equations: damping exhausted")]
    SingularNormalEquations,

    /// Residuals were non-finite at the solver's starting point.
    #[error("non-finite residual at initial parameters")]
    NonFiniteResidual,

    /// Data does not support the requested computation (constant, too short, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A wrench drives some coil gap to zero or below (mechanical overload).
    #[error("plate contact: gap {gap:.6} mm at site {site}")]
    PlateContact { site: usize, gap: f64 },

    /// Sampling/replay rate outside the supported range.
    #[error("rate error: {0} Hz outside 1..=4080 Hz")]
    Rate(f64),

    /// A calibration dataset leaves one axis (nearly) unexercised.
    #[error("insufficient excitation on axis {axis}: {fraction:.4} of range (need >= {required:.4})")]
    InsufficientExcitation {
        axis: usize,
        fraction: f64,
        required: f64,
    },

    /// Two series that must be aligned have different lengths.
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// A crosstalk evaluation is missing the excitation run for an axis.
    #[error("missing excitation run for axis {0}")]
    MissingRun(usize),

    /// A wire frame buffer has the wrong length.
    #[error("bad frame length: {0} bytes (expected 34)")]
    BadLength(usize),

    /// A wire frame failed CRC validation.
    #[error("bad crc: computed {computed:#06x}, stored {stored:#06x}")]
    BadCrc { computed: u16, stored: u16 },

    /// A channel value does not fit in 28 bits.
    #[error("channel overflow: {0} >= 2^28")]
    ChannelOverflow(u32),

    /// CSV header does not match the expected schema.
    #[error("schema error at line {line}: {message}")]
    Schema { line: u64, message: String },

    /// CSV cell failed to parse or is out of range.
    #[error("value error at line {line}: {message}")]
    Value { line: u64, message: String },

    /// Persisted file has an incompatible version or geometry hash.
    #[error("version mismatch: {0}")]
    VersionMismatch(String),

    /// Persisted file is corrupt or truncated.
    #[error("checksum error: {0}")]
    Checksum(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Serialization failure.
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))
            }
            _ => Error::Value {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            },
        }
    }
}
