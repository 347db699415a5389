use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GabbaError {
    /// A size that must be a power of two (or otherwise constrained) is not.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Two operands have incompatible lengths or shapes.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// A numeric parameter lies outside its admissible range.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    /// Every channel gain is zero, so no symbol can be recovered.
    #[error("degenerate channel: all gains are zero")]
    DegenerateChannel,
    /// A block that must vanish in the nested reduction does not.
    #[error("structural failure at reduction order {order} (size {size}): off-block residual {residual:.3e}")]
    StructuralFailure { order: usize, size: usize, residual: f64 },
    /// Even the highest working precision could not certify the estimates.
    #[error("decoder could not reach the accuracy target: residual {residual:.3e} at {bits} bits")]
    PrecisionExhausted { bits: usize, residual: f64 },
    /// A textual configuration value could not be parsed.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GabbaError>;
