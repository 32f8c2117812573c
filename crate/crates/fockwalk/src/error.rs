//! Error type shared by all engine modules.
//!
//! Two severities matter to callers: [`FockError::is_internal`] separates
//! "your input is bad" (validation) from "the engine violated one of its own
//! invariants" (scheduler bugs, store misuse). The CLI maps the former to
//! exit code 2 and the latter to exit code 3.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong while planning or running a walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FockError {
    /// Caller-supplied data is inconsistent (shape mismatch, bad cutoff, ...).
    Validation(String),
    /// A matrix inversion or determinant hit a numerically singular pivot.
    Singular(String),
    /// An iterative routine failed to converge within its budget.
    NoConvergence(String),
    /// The engine broke one of its own invariants; always a bug.
    SchedulerBug(String),
}

impl FockError {
    /// True when the error indicates an engine bug rather than bad input.
    #[must_use]
    pub fn is_internal(&self) -> bool {
        matches!(self, FockError::SchedulerBug(_))
    }
}

impl fmt::Display for FockError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FockError::Validation(msg) => write!(f, "validation error: {msg}"),
            FockError::Singular(msg) => write!(f, "singular matrix: {msg}"),
            FockError::NoConvergence(msg) => write!(f, "no convergence: {msg}"),
            FockError::SchedulerBug(msg) => write!(f, "internal scheduler invariant violated: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FockError {}

/// Convenience alias used across the crate.
pub type Result<T> = core::result::Result<T, FockError>;
