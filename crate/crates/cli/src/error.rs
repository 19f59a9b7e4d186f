use std::path::PathBuf;

use ldp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: a malformed file, a missing or out-of-range field, a
    /// channel that does not satisfy the stated budget.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    /// A numerical routine failed on valid input.
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self::Validation {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// 2 for validation errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } => 2,
            Self::Numeric(_) | Self::Io { .. } => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let field = match &e {
            CoreError::Quadrature { .. } | CoreError::Lp(_) | CoreError::SignChanges { .. } => {
                return Self::Numeric(e.to_string())
            }
            CoreError::InvalidParameter { name, .. } => (*name).to_string(),
            CoreError::NegativeBudget(_) => "alpha".into(),
            CoreError::InvalidChannel(_)
            | CoreError::RemovableOutput { .. }
            | CoreError::LdpViolation { .. }
            | CoreError::OutsideHyperrectangle { .. } => "channel".into(),
            CoreError::InvalidDistribution(_) => "p0".into(),
            CoreError::ZeroScore(_) | CoreError::InvalidModel(_) => "model".into(),
            CoreError::Normalization { .. } => "measure".into(),
            CoreError::DimensionCap { .. } => "max-dim".into(),
            CoreError::IndexOutOfRange { .. }
            | CoreError::SymbolOutOfRange { .. }
            | CoreError::DimensionMismatch { .. } => "dimensions".into(),
        };
        Self::Validation {
            field,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(
            CliError::from(CoreError::Lp("stalled".into())).exit_code(),
            1
        );
        assert_eq!(
            CliError::from(CoreError::Quadrature {
                a: 0.0,
                b: 1.0,
                error: 1.0
            })
            .exit_code(),
            1
        );
        let e = CliError::from(CoreError::InvalidParameter {
            name: "theta0",
            reason: "must be positive".into(),
        });
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().starts_with("invalid theta0"));
        assert_eq!(
            CliError::from(CoreError::NegativeBudget(-1.0)).exit_code(),
            2
        );
    }
}
