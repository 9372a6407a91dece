use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("template `{template}`: {message}")]
    Template { template: String, message: String },

    #[error("assignment rejected: {0}")]
    RejectedAssignment(String),

    #[error("infeasible template: {0}")]
    Infeasible(String),

    #[error("palette: {0}")]
    Palette(String),

    #[error("mask has no pixels")]
    EmptyMask,

    /// A results or dataset document violates its schema. `record` is the
    /// zero-based record index when the violation is inside a record.
    #[error("{}{field}: {message}", record.map(|r| format!("record {r}, ")).unwrap_or_default())]
    Schema {
        record: Option<usize>,
        field: String,
        message: String,
    },

    #[error("record {record}: unknown prompt_id `{prompt_id}`")]
    UnknownPrompt { record: usize, prompt_id: String },

    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("record for prompt `{record}` scored against prompt `{instance}`")]
    PromptMismatch { instance: String, record: String },

    #[error("prompt `{prompt_id}` seed {seed}: detection {detection} carries no pixel colors")]
    MissingPixels {
        prompt_id: String,
        seed: u64,
        detection: u32,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(record: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            record,
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end: 2 for I/O failures,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
