//! Log-spectral distance.

use crate::config::{HOP, LSD_FLOOR, WINDOW_LEN};
use crate::error::{invalid, Error, Result};
use crate::signal::Waveform;
use crate::stft::{MagSpectrogram, StftPlan};

/// Mean over frames of the RMS over bins of `log10(Y^2 / Ŷ^2)`, with both magnitudes
/// floored at [`LSD_FLOOR`].
pub fn lsd(reference: &MagSpectrogram, estimate: &MagSpectrogram) -> Result<f64> {
    if reference.shape() != estimate.shape() {
        return Err(Error::ShapeMismatch {
            what: "log-spectral distance",
            expected: reference.shape(),
            found: estimate.shape(),
        });
    }
    let (frames, bins) = reference.shape();
    if frames == 0 {
        return Err(invalid("log-spectral distance of an empty spectrogram"));
    }
    let total: f64 = (0..frames)
        .map(|t| {
            let sq: f64 = reference
                .frame(t)
                .iter()
                .zip(estimate.frame(t))
                .map(|(&y, &e)| {
                    let d = 2.0 * (libm::log10(y.max(LSD_FLOOR)) - libm::log10(e.max(LSD_FLOOR)));
                    d * d
                })
                .sum();
            libm::sqrt(sq / bins as f64)
        })
        .sum();
    Ok(total / frames as f64)
}

/// LSD between two waveforms under the reference 2048/441 framing. The estimate is
/// truncated or zero-padded to the reference length.
pub fn lsd_waveforms(reference: &Waveform, estimate: &Waveform) -> Result<f64> {
    if reference.sample_rate() != estimate.sample_rate() {
        return Err(invalid(alloc::format!(
            "sample rates differ: {} vs {}",
            reference.sample_rate(),
            estimate.sample_rate()
        )));
    }
    let plan = StftPlan::new(WINDOW_LEN, HOP, reference.sample_rate())?;
    lsd_with_plan(&plan, reference, estimate)
}

pub fn lsd_with_plan(plan: &StftPlan, reference: &Waveform, estimate: &Waveform) -> Result<f64> {
    let est = estimate.clone().fit_to_len(reference.len());
    let y = plan.analyze(reference.samples()).magnitude();
    let e = plan.analyze(est.samples()).magnitude();
    lsd(&y, &e)
}
