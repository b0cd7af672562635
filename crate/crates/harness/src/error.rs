use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    /// `line` is 0 for keys given as command-line overrides.
    #[error("unknown key `{key}`{}", at_line(*line))]
    Unknown { key: String, line: usize },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error(transparent)]
    Core(#[from] manakov::Error),
}

fn at_line(line: usize) -> String {
    if line == 0 {
        " in override".to_string()
    } else {
        format!(" (line {line})")
    }
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Syntax { .. }
            | HarnessError::Missing(_)
            | HarnessError::Unknown { .. }
            | HarnessError::Invalid { .. } => 1,
            HarnessError::Io(_) | HarnessError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
