use thiserror::Error;

use crate::frame::FrameId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed url {url:?}{}", frame.map(|f| format!(" in frame {f}")).unwrap_or_default())]
    MalformedUrl { url: String, frame: Option<FrameId> },

    #[error("unknown frame {0}")]
    UnknownFrame(FrameId),

    #[error("frame {0} has no resolved origin; resolve the tree first")]
    UnresolvedFrame(FrameId),

    #[error("invalid frame tree: {0}")]
    InvalidTree(String),

    #[error("unknown redirect resource {0:?}")]
    UnknownResource(String),

    #[error("unknown attribution policy {0:?}")]
    UnknownPolicy(String),

    #[error("malformed event log at record {record}: {reason}")]
    MalformedLog { record: usize, reason: String },

    #[error("{test}: frame {frame:?}, probe {probe:?}: {source}")]
    Cell {
        test: String,
        frame: String,
        probe: String,
        #[source]
        source: Box<Error>,
    },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by input content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
