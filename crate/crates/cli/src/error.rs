use thiserror::Error;

/// Exit status for a run that finished without an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    ValidationFailed,
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::ValidationFailed => 1,
            Status::NotConverged => 2,
        }
    }

    /// The worse of two outcomes.
    pub fn and(self, other: Status) -> Status {
        if other.exit_code() > self.exit_code() {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("no nontrivial solution for eps = {eps}: it exceeds the nonexistence bound eps0 = {eps0} (sup over s of (1 - s) f(s) / s)")]
    Nonexistence { eps: f64, eps0: f64 },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("{path}: {source}")]
    Input { path: String, source: flameball::Error },

    #[error(transparent)]
    Core(#[from] flameball::Error),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use flameball::Error as E;
        match self {
            CliError::Config { .. } | CliError::Nonexistence { .. } | CliError::Input { .. } | CliError::Output { .. } => 3,
            CliError::NotConverged(_) => 2,
            CliError::Core(e) => match e {
                E::Domain { .. } | E::SingularParameter(_) | E::UndefinedBound(_) | E::Parse { .. } | E::Io(_) | E::Json(_) => 3,
                _ => 2,
            },
        }
    }
}

/// Core domain errors raised while building inputs name the offending field.
pub(crate) fn lift(e: flameball::Error) -> CliError {
    match e {
        flameball::Error::Domain { field, reason } => CliError::config(field, reason),
        other => CliError::Core(other),
    }
}
