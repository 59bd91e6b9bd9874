use std::path::{Path, PathBuf};

use crate::exchange::ExchangeError;

#[derive(Debug, thiserror::Error)]
pub enum NvsrError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported WAV encoding ({detail})")]
    UnsupportedWav { path: PathBuf, detail: String },
    #[error(transparent)]
    Core(#[from] nvsr_core::Error),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error("{0}")]
    Config(String),
}

impl NvsrError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, NvsrError>;
