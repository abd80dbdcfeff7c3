//! Error taxonomy for memory actions.
//!
//! Errors are split in two families: faults a CHERI processor would raise
//! while checking a capability ([`CapErr`]), and faults that come from the
//! language level, such as temporal safety violations ([`LogicErr`]).

use std::fmt;

/// Capability exceptions raised by the hardware-style access checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CapErr {
    TagViolation,
    PermitLoadViolation,
    PermitStoreViolation,
    PermitStoreCapViolation,
    LengthViolation,
}

/// Language-level errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicErr {
    UseAfterFree,
    MissingResource,
    Unaligned,
    InvalidFree,
    WrongArgType,
}

/// The single error reported by a failing memory action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, thiserror::Error)]
pub enum MemError {
    #[error("CHERI error: {0}")]
    Cap(CapErr),
    #[error("logic error: {0}")]
    Logic(LogicErr),
}

impl MemError {
    pub fn is_cap(&self) -> bool {
        matches!(self, MemError::Cap(_))
    }

    /// The bare constructor name, e.g. `TagViolation`.
    pub fn name(&self) -> &'static str {
        match self {
            MemError::Cap(e) => e.name(),
            MemError::Logic(e) => e.name(),
        }
    }
}

impl CapErr {
    pub fn name(&self) -> &'static str {
        match self {
            CapErr::TagViolation => "TagViolation",
            CapErr::PermitLoadViolation => "PermitLoadViolation",
            CapErr::PermitStoreViolation => "PermitStoreViolation",
            CapErr::PermitStoreCapViolation => "PermitStoreCapViolation",
            CapErr::LengthViolation => "LengthViolation",
        }
    }
}

impl LogicErr {
    pub fn name(&self) -> &'static str {
        match self {
            LogicErr::UseAfterFree => "UseAfterFree",
            LogicErr::MissingResource => "MissingResource",
            LogicErr::Unaligned => "Unaligned",
            LogicErr::InvalidFree => "InvalidFree",
            LogicErr::WrongArgType => "WrongArgType",
        }
    }
}

impl fmt::Display for CapErr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for LogicErr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<CapErr> for MemError {
    fn from(e: CapErr) -> Self {
        MemError::Cap(e)
    }
}

impl From<LogicErr> for MemError {
    fn from(e: LogicErr) -> Self {
        MemError::Logic(e)
    }
}

/// Result of a memory action. A failure never carries an updated heap.
pub type MemResult<T> = Result<T, MemError>;
