use std::fmt;

use conedeflate::Error;

pub const OK: u8 = 0;
pub const USAGE: u8 = 1;
pub const NUMERIC: u8 = 2;
pub const UNCERTIFIED: u8 = 3;
pub const INCONSISTENT: u8 = 4;
pub const INVALID_CHAIN: u8 = 5;

/// A command outcome other than plain success.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self::new(NUMERIC, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code_for(e: &Error) -> u8 {
    match e {
        Error::NotHermitian { .. }
        | Error::NotPsd { .. }
        | Error::ConvergenceFailure
        | Error::ZeroOperator { .. }
        | Error::NoCandidateSatisfiesC { .. } => NUMERIC,
        Error::NotExhausted { .. } => UNCERTIFIED,
        Error::InconsistentChain { .. } => INCONSISTENT,
        Error::InvalidChain { .. } => INVALID_CHAIN,
        Error::NotSquare { .. }
        | Error::DimensionMismatch { .. }
        | Error::NotUnitVector { .. }
        | Error::EmptyDirectionSource { .. }
        | Error::IndexOutOfRange { .. }
        | Error::InvalidConfig(_)
        | Error::InvalidKernelParams(_)
        | Error::EmptySchedule
        | Error::Format(_) => USAGE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(code_for(&e), e.to_string())
    }
}
