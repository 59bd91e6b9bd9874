//! Reference analysis configuration shared by every stage.

/// Rate at which the pipeline synthesizes and evaluates.
pub const SAMPLE_RATE: u32 = 44_100;
/// Hann window length of every STFT.
pub const WINDOW_LEN: usize = 2048;
/// Hop between STFT frames (10 ms at 44.1 kHz).
pub const HOP: usize = 441;
pub const N_MELS: usize = 128;
/// Offset added before taking the natural log of mel energies.
pub const LOG_EPS: f64 = 1e-8;
/// Floor applied to magnitudes before the log-spectral distance ratio.
pub const LSD_FLOOR: f64 = 1e-8;
