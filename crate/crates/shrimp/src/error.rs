use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}:{line}: duplicate year {year}", path.display())]
    DuplicateYear { path: PathBuf, line: u64, year: i32 },
    #[error("{}:{line}: survey id {id} has no configured catchability", path.display())]
    UnknownSurveyId { path: PathBuf, line: u64, id: u32 },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] shrimp_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure comes from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        use shrimp_core::Error as E;
        matches!(
            self,
            Error::Model(
                E::NumericalFailure(_)
                    | E::NonFiniteInit(_)
                    | E::ZeroExpectedRecruits
                    | E::DegenerateGrowth { .. }
            )
        )
    }
}
