use std::path::PathBuf;

use crate::provider::ProviderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Stage,
    Provider,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,
    #[error("span mismatch: {0}")]
    SpanMismatch(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("decoder failed for {}: {diagnostic}", path.display())]
    Decoder { path: PathBuf, diagnostic: String },

    #[error("malformed manifest {}: {message} (line {line}, column {column})", path.display())]
    MalformedManifest {
        path: PathBuf,
        message: String,
        line: usize,
        column: usize,
    },
    #[error("unknown platform: {platform} (entry {entry})")]
    UnknownPlatform { platform: String, entry: String },
    #[error("invalid manifest entry {entry}: {message}")]
    InvalidEntry { entry: String, message: String },
    #[error("duplicate video_id: {0}")]
    DuplicateVideo(String),

    #[error("platform auth failed ({platform}, code {code}): {message}")]
    PlatformAuth {
        platform: String,
        code: u16,
        message: String,
    },
    #[error("platform request failed ({platform}, code {code}): {message}")]
    Platform {
        platform: String,
        code: u16,
        message: String,
    },

    #[error("empty dataset")]
    EmptyDataset,
    #[error("unbalanced dataset: {}", format_cells(.0))]
    Unbalanced(Vec<CellViolation>),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degenerate embedding")]
    DegenerateEmbedding,
    #[error("empty embedding index")]
    EmptyIndex,
    #[error("embedding index is partial ({failed} of {total} entries failed); rebuild before classifying")]
    PartialIndex { failed: usize, total: usize },

    #[error("empty comment pool")]
    EmptyPool,

    #[error("unknown instruction template: {0}")]
    UnknownTemplate(String),
    #[error("generation failed for prompt {fingerprint}: {source}")]
    Generation {
        fingerprint: String,
        #[source]
        source: ProviderError,
    },

    #[error("no reference corpus")]
    NoReferenceCorpus,
    #[error("unknown language: {0}")]
    UnknownLanguage(String),
    #[error("missing output of system {system} for video {video_id}")]
    MissingSystemOutput { system: String, video_id: String },

    #[error("provider {provider} failed: {source}")]
    Provider {
        provider: String,
        #[source]
        source: ProviderError,
    },

    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One (platform, category) cell whose count differs from the expected size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellViolation {
    pub platform: String,
    pub category: String,
    pub count: usize,
    pub expected: usize,
}

fn format_cells(cells: &[CellViolation]) -> String {
    cells
        .iter()
        .map(|c| format!("({}, {}, {} != {})", c.platform, c.category, c.count, c.expected))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &'static str, message: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            message: message.into(),
        }
    }

    pub fn provider(provider: impl Into<String>, source: ProviderError) -> Self {
        Error::Provider {
            provider: provider.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Provider { .. }
            | Error::Generation { .. }
            | Error::PlatformAuth { .. }
            | Error::Platform { .. } => ErrorKind::Provider,
            Error::Config(_) | Error::InvalidParams(_) => ErrorKind::Usage,
            _ => ErrorKind::Stage,
        }
    }
}
