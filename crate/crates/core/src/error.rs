use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("pattern index {beta} out of range for alphabet size {d}")]
    IndexOutOfRange { beta: u64, d: usize },
    #[error("symbol {index} out of range (alphabet size {size})")]
    SymbolOutOfRange { index: usize, size: usize },
    #[error("privacy budget must be finite and non-negative, got {0}")]
    NegativeBudget(f64),
    #[error("alphabet size {d} exceeds the configured cap {cap}")]
    DimensionCap { d: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("output symbol {z} is removable: column is zero for input {x_zero} but not for input {x_positive}")]
    RemovableOutput {
        z: usize,
        x_zero: usize,
        x_positive: usize,
    },
    #[error("channel violates {alpha}-LDP: ratio {ratio} at output {z} exceeds e^alpha")]
    LdpViolation { alpha: f64, z: usize, ratio: f64 },
    #[error("coordinate {index} = {value} lies outside the hyperrectangle [1, {upper}]")]
    OutsideHyperrectangle {
        index: usize,
        value: f64,
        upper: f64,
    },
    #[error("theorem hypothesis violated: score is zero at symbol {0}; use solve_lp")]
    ZeroScore(usize),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("quadrature failed to converge on [{a}, {b}] (error estimate {error})")]
    Quadrature { a: f64, b: f64, error: f64 },
    #[error("extremal measure not normalized: deviation {deviation} at x = {x}")]
    Normalization { x: f64, deviation: f64 },
    #[error("score has more than {cap} sign changes")]
    SignChanges { cap: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeBudget(alpha))
    }
}
