use std::fmt;

use derw_core::Error as CoreError;

/// Every failure maps onto one of the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration; exit 1.
    Config(String),
    /// The regime does not license the requested analysis; exit 2.
    NotApplicable(String),
    /// A numerical precondition failed at run time; exit 3.
    Numerical(String),
    /// Filesystem trouble; exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::NotApplicable(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::NotApplicable(m) => write!(f, "not applicable: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::RationalRotationUnsupported { .. }
            | CoreError::InvalidCheckpoints(_)
            | CoreError::TooFewSamples { .. }
            | CoreError::CapExceeded { .. }
            | CoreError::NormalizerTooShort { .. } => CliError::Config(msg),
            CoreError::NotSummable { .. } | CoreError::NotApplicable(_) => {
                CliError::NotApplicable(msg)
            }
            CoreError::DegenerateNormalizer { .. }
            | CoreError::BudgetExceeded { .. }
            | CoreError::ScaleDegenerate { .. }
            | CoreError::EnvelopeUndefined { .. }
            | CoreError::WindowEmpty { .. } => CliError::Numerical(msg),
        }
    }
}
