use std::path::{Path, PathBuf};

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Format { path: PathBuf, line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: cptlab_core::jpeg::DecodeError,
    },
    #[error("{}: {source}", path.display())]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: cptlab_core::net::CheckpointError,
    },
    #[error(transparent)]
    Encode(#[from] cptlab_core::jpeg::EncodeError),
    #[error(transparent)]
    Scene(#[from] cptlab_core::scene::SceneError),
    #[error(transparent)]
    Corpus(#[from] cptlab_core::corpus::CorpusError),
    #[error(transparent)]
    Curriculum(#[from] cptlab_core::curriculum::CurriculumError),
    #[error(transparent)]
    Run(#[from] Box<cptlab_core::curriculum::RunFailure>),
    #[error(transparent)]
    Metric(#[from] cptlab_core::metrics::MetricError),
    #[error("audit failed: {0}")]
    Audit(String),
}

impl LabError {
    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.as_ref().to_path_buf();
        move |source| LabError::Io { path, source }
    }

    pub fn csv(path: impl AsRef<Path>) -> impl FnOnce(csv::Error) -> LabError {
        let path = path.as_ref().to_path_buf();
        move |source| LabError::Csv { path, source }
    }

    pub fn format(path: impl AsRef<Path>, line: usize, message: impl Into<String>) -> LabError {
        LabError::Format {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }
}
