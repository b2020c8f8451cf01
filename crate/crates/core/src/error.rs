use thiserror::Error;

/// Errors raised by the audit checks.
///
/// Degenerate metric values are not errors; they surface as `None` in the
/// reports instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Input { row: Option<usize>, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("task error: {0}")]
    Task(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("illegal transition: event `{event}` in state {state}")]
    Transition { state: String, event: String },

    #[error("date error: {0}")]
    Date(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(message: impl Into<String>) -> Self {
        Error::Input {
            row: None,
            message: message.into(),
        }
    }

    pub fn input_at(row: usize, message: impl Into<String>) -> Self {
        Error::Input {
            row: Some(row),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
