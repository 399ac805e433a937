use std::process::ExitCode;

/// A failed command, classified by exit status: bad invocation or input
/// data (2) versus a failure while doing the work (3).
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Self::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(2),
            Self::Runtime(_) => ExitCode::from(3),
        }
    }

    pub fn inner(&self) -> &anyhow::Error {
        match self {
            Self::Usage(e) | Self::Runtime(e) => e,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Classify<T> {
    fn usage(self) -> CliResult<T>;
    fn runtime(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(e.into()))
    }

    fn runtime(self) -> CliResult<T> {
        self.map_err(|e| CliError::Runtime(e.into()))
    }
}
