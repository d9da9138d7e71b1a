use thiserror::Error;

/// Errors raised by the harness.
#[derive(Debug, Error)]
pub enum CliError {
    /// Model specification text that does not follow the grammar.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    /// A CSV cell that could not be read. `row` counts data rows from 1.
    #[error("ingest error at row {row}, column `{column}`: {message}")]
    Ingest { row: usize, column: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] distpred::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        CliError::Parse { offset, message: message.into() }
    }

    pub(crate) fn ingest(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Ingest { row, column: column.into(), message: message.into() }
    }

    /// Renders a parse error with a caret under the offending byte.
    pub fn pointer(&self, source: &str) -> Option<String> {
        match self {
            CliError::Parse { offset, message } => {
                let col = source[..(*offset).min(source.len())].chars().count();
                Some(format!("{source}\n{}^ {message}", " ".repeat(col)))
            }
            _ => None,
        }
    }
}
