use thiserror::Error;

/// Harness failures, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown key `{key}`{}", suggestion_text(.suggestion))]
    UnknownKey { key: String, suggestion: Option<String> },

    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    Type { key: String, value: String, expected: String },

    #[error("missing required field `{key}`")]
    Missing { key: String },

    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] sciopt_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn suggestion_text(s: &Option<String>) -> String {
    match s {
        Some(k) => format!(" (did you mean `{k}`?)"),
        None => String::new(),
    }
}

impl HarnessError {
    /// 1 for configuration errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::UnknownKey { .. }
            | HarnessError::Type { .. }
            | HarnessError::Missing { .. }
            | HarnessError::Syntax { .. }
            | HarnessError::Config(_) => 1,
            HarnessError::Core(sciopt_core::Error::UnknownProblem { .. }) => 1,
            HarnessError::Core(_) | HarnessError::Io { .. } => 2,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
