use std::path::PathBuf;

use curio_core::abstention::ConfigViolation;
use curio_core::catalogue::CatalogueError;
use curio_core::dialogue::DialogueError;
use curio_core::evaluation::EvaluationError;

use crate::backend::BackendError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {detail}", path.display())]
    Parse { path: PathBuf, detail: String },
    #[error("catalogue: {0}")]
    Catalogue(#[from] CatalogueError),
    #[error("invalid config: {}", join(.0))]
    Config(Vec<ConfigViolation>),
    #[error("evaluation: {0}")]
    Evaluation(#[from] EvaluationError),
    #[error("dialogue: {0}")]
    Dialogue(#[from] DialogueError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("not found: {0}")]
    NotFound(String),
}

fn join(v: &[ConfigViolation]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, detail: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
