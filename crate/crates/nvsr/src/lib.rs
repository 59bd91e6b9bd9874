//! Host-side companion to `nvsr-core`: WAV files, the mel exchange bridge, corpora, the
//! evaluation grid and spectrogram images.

pub mod bench;
pub mod corpus;
pub mod error;
pub mod exchange;
pub mod png;
pub mod wav;

pub use error::{NvsrError, Result};
