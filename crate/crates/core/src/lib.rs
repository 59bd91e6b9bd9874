//! Speech super-resolution DSP core.
//!
//! Everything here is pure computation over in-memory buffers and builds without `std`
//! (an allocator is required). File formats, process bridges and the command line live in
//! the `nvsr` crate.

#![no_std]

extern crate alloc;

pub mod config;
pub mod degrade;
pub mod error;
pub mod fft;
pub mod iir;
pub mod mel;
pub mod melbwe;
pub mod melf;
pub mod metrics;
pub mod pipeline;
pub mod resample;
pub mod signal;
pub mod stft;
pub mod vocoder;

pub use error::{Error, MelfError, Result};
pub use mel::{build_filterbank, hz_to_mel, mel_pseudo_inverse, mel_to_hz, mel_transform, MelFilterbank, MelScale, MelSpectrogram};
pub use melbwe::{build_mask, detect_cutoff, pad_predict, CutoffMask, MelPredictor};
pub use metrics::lsd;
pub use pipeline::{lfr_postprocess, Pipeline, PipelineConfig, PredictorChoice};
pub use signal::Waveform;
pub use stft::{istft, stft, ComplexSpectrogram, MagSpectrogram, StftPlan};
pub use vocoder::{griffin_lim, Vocoder, VocoderConfig};
