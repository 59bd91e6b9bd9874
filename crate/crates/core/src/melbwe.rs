//! Mel-domain bandwidth extension: cutoff search, cutoff masks, replication padding and
//! the predictor interface.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::mel::{MelScale, MelSpectrogram};

pub const DEFAULT_THRESHOLD_DB: f64 = 40.0;

/// Result of a cutoff search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cutoff {
    /// Highest band considered to carry signal.
    pub band: usize,
    /// Set when the input had no energy at all and the full band was assumed.
    pub silent_input: bool,
}

/// Finds the highest band whose time-averaged level is within `threshold_db` of the
/// loudest band. Levels are mean band energies in dB (20 log10, the mel energies being
/// magnitude sums).
pub fn detect_cutoff(mel: &MelSpectrogram, threshold_db: f64) -> Result<Cutoff> {
    if mel.scale != MelScale::Linear {
        return Err(invalid("cutoff detection expects linear-scale mel energies"));
    }
    if mel.frames() == 0 {
        return Err(invalid("cutoff detection needs at least one frame"));
    }
    if !(threshold_db > 0.0) {
        return Err(invalid("cutoff threshold must be positive"));
    }
    let f = mel.n_mels();
    let mut means = alloc::vec![0.0; f];
    for t in 0..mel.frames() {
        for (m, e) in means.iter_mut().zip(mel.frame(t)) {
            *m += e;
        }
    }
    let peak = means.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Cutoff {
            band: f - 1,
            silent_input: true,
        });
    }
    let floor = peak * libm::pow(10.0, -threshold_db / 20.0);
    let band = means.iter().rposition(|&m| m >= floor).unwrap_or(0);
    Ok(Cutoff {
        band,
        silent_input: false,
    })
}

/// T x F binary mask, ones at bands `<= band`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffMask {
    pub band: usize,
    pub frames: usize,
    pub n_mels: usize,
}

impl CutoffMask {
    pub fn get(&self, _t: usize, f: usize) -> u8 {
        u8::from(f <= self.band)
    }

    pub fn to_matrix(&self) -> Vec<u8> {
        (0..self.frames)
            .flat_map(|_| (0..self.n_mels).map(|f| u8::from(f <= self.band)))
            .collect()
    }
}

pub fn build_mask(band: usize, frames: usize, n_mels: usize) -> Result<CutoffMask> {
    if band >= n_mels {
        return Err(invalid(alloc::format!(
            "cutoff band {band} outside 0..{n_mels}"
        )));
    }
    Ok(CutoffMask {
        band,
        frames,
        n_mels,
    })
}

/// Replication padding: bands above the cutoff take the cutoff band's energy, frame by
/// frame; bands at or below it are copied unchanged.
pub fn pad_predict(mel: &MelSpectrogram, mask: &CutoffMask) -> Result<MelSpectrogram> {
    if mel.shape() != (mask.frames, mask.n_mels) {
        return Err(Error::ShapeMismatch {
            what: "cutoff mask",
            expected: mel.shape(),
            found: (mask.frames, mask.n_mels),
        });
    }
    if mel.scale != MelScale::Linear {
        return Err(invalid("replication padding is applied to linear-scale mel energies"));
    }
    let c = mask.band;
    let out = (0..mel.frames())
        .flat_map(|t| {
            let row = mel.frame(t);
            (0..mel.n_mels()).map(move |f| if f <= c { row[f] } else { row[c] })
        })
        .collect();
    MelSpectrogram::new(mel.framing, mel.scale, mel.frames(), mel.n_mels(), out)
}

/// Strategy mapping a band-limited mel spectrogram to a full-band estimate.
pub trait MelPredictor: Send + Sync {
    fn name(&self) -> &str;

    fn predict(&self, mel: &MelSpectrogram, mask: &CutoffMask) -> Result<MelSpectrogram>;
}

/// Replication-padding predictor.
#[derive(Debug, Default, Clone, Copy)]
pub struct PadPredictor;

impl MelPredictor for PadPredictor {
    fn name(&self) -> &str {
        "pad"
    }

    fn predict(&self, mel: &MelSpectrogram, mask: &CutoffMask) -> Result<MelSpectrogram> {
        pad_predict(mel, mask)
    }
}

/// Passes the input through; the "no mel prediction" ablation.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityPredictor;

impl MelPredictor for IdentityPredictor {
    fn name(&self) -> &str {
        "none"
    }

    fn predict(&self, mel: &MelSpectrogram, _mask: &CutoffMask) -> Result<MelSpectrogram> {
        Ok(mel.clone())
    }
}

/// Checks a predictor's output against the predictor contract.
pub fn validate_prediction(input: &MelSpectrogram, output: &MelSpectrogram) -> Result<()> {
    if input.shape() != output.shape() {
        return Err(Error::ShapeMismatch {
            what: "predicted mel",
            expected: input.shape(),
            found: output.shape(),
        });
    }
    let linear = output.to_linear();
    if linear.as_slice().iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(Error::Predictor("prediction has negative or non-finite energies".into()));
    }
    Ok(())
}
