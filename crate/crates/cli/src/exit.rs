//! Exit-code contract: 0 success, 1 validation, 2 guard, 3 statistical failure.

use std::fmt;

use etc_core::Error;

pub const OK: i32 = 0;
pub const VALIDATION: i32 = 1;
pub const GUARD: i32 = 2;
pub const STATISTICAL: i32 = 3;

/// A check that ran to completion and did not hold.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn core_code(e: &Error) -> i32 {
    match e {
        _ if e.is_guard() => GUARD,
        Error::ConfidenceSetEmpty => STATISTICAL,
        Error::Iteration { source, .. } => core_code(source),
        _ => VALIDATION,
    }
}

pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return core_code(e);
        }
        if let Some(f) = cause.downcast_ref::<crate::commands::sweep::SweepFailed>() {
            return f.0;
        }
        if cause.downcast_ref::<CheckFailed>().is_some() {
            return STATISTICAL;
        }
    }
    VALIDATION
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping() {
        let guard = anyhow::Error::from(Error::EnumerationTooLarge { count: 5, cap: 1 });
        assert_eq!(code_for(&guard), GUARD);
        let empty = anyhow::Error::from(Error::Iteration {
            t: 3,
            source: Box::new(Error::ConfidenceSetEmpty),
        });
        assert_eq!(code_for(&empty), STATISTICAL);
        let invalid = anyhow::Error::from(Error::InvalidModel("x".into())).context("loading");
        assert_eq!(code_for(&invalid), VALIDATION);
        assert_eq!(code_for(&anyhow::Error::from(CheckFailed("no".into()))), STATISTICAL);
    }
}
