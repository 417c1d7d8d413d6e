use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] occkit::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    /// 2 for I/O, 4 for solver non-convergence, 3 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Core(e) if matches!(e.root(), occkit::Error::Convergence { .. }) => 4,
            _ => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let io = CliError::io(
            "x.csv",
            std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        );
        assert_eq!(io.exit_code(), 2);
        assert!(io.to_string().contains("x.csv"));
        assert_eq!(CliError::invalid("bad").exit_code(), 3);
        let stalled = occkit::Error::Convergence {
            iterations: 10,
            residual: 1.0,
        };
        assert_eq!(CliError::from(stalled.clone()).exit_code(), 4);
        assert_eq!(CliError::from(stalled.context("fold 2")).exit_code(), 4);
        assert_eq!(
            CliError::from(occkit::Error::Shape("m".into())).exit_code(),
            3
        );
    }
}
