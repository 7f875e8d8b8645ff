use std::path::PathBuf;

/// CLI failure, one exit code per class.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Solver(#[from] pointnls::Error),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        use pointnls::Error as E;
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } | CliError::Csv { .. } => 4,
            CliError::Solver(e) => match e {
                E::InvalidParameter { .. } => 3,
                E::Domain { .. } | E::OutOfRange { .. } | E::GridMismatch(_) | E::TailBound(_) => 5,
                E::Convergence { .. } | E::Resolution(_) | E::Stiffness { .. } => 6,
            },
            CliError::VerifyFailed(_) => 7,
        }
    }
}
