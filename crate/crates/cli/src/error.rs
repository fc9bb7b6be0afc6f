//! Failure classes and their process exit codes.

use std::fmt;

use ecgrisk_core::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Data,
    Degenerate,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Data => 3,
            ExitKind::Degenerate => 4,
        }
    }

    pub fn of_learn(e: &LearnError) -> ExitKind {
        match e {
            LearnError::InvalidHyperParams(_) | LearnError::BudgetTooSmall(_) | LearnError::InvalidConfig(_) => {
                ExitKind::Config
            }
            LearnError::InconsistentLabels(_) | LearnError::TooManySegments(_) => ExitKind::Data,
            _ => ExitKind::Degenerate,
        }
    }
}

impl fmt::Display for ExitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExitKind::Config => "configuration error",
            ExitKind::Data => "data error",
            ExitKind::Degenerate => "degenerate analysis",
        })
    }
}

/// Exit code for an error chain; unclassified errors count as data errors.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    err.downcast_ref::<ExitKind>().copied().unwrap_or(ExitKind::Data).code()
}

pub trait Classify<T> {
    fn kind(self, kind: ExitKind) -> anyhow::Result<T>;

    fn config(self) -> anyhow::Result<T>
    where
        Self: Sized,
    {
        self.kind(ExitKind::Config)
    }

    fn data(self) -> anyhow::Result<T>
    where
        Self: Sized,
    {
        self.kind(ExitKind::Data)
    }

    fn degenerate(self) -> anyhow::Result<T>
    where
        Self: Sized,
    {
        self.kind(ExitKind::Degenerate)
    }
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn kind(self, kind: ExitKind) -> anyhow::Result<T> {
        self.map_err(|e| {
            let e: anyhow::Error = e.into();
            if e.downcast_ref::<ExitKind>().is_some() {
                e
            } else {
                e.context(kind)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_kind() {
        let e: anyhow::Result<()> = Err(anyhow::anyhow!("boom"));
        assert_eq!(exit_code(&e.degenerate().unwrap_err()), 4);
        let e: anyhow::Result<()> = Err(anyhow::anyhow!("boom"));
        assert_eq!(exit_code(&e.config().data().unwrap_err()), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), 3);
    }
}
