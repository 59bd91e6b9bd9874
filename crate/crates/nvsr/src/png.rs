//! Spectrogram images for inspecting outputs.

use std::path::Path;

use image::{GrayImage, Luma};
use nvsr_core::{StftPlan, Waveform};

use crate::error::{NvsrError, Result};

/// Dynamic range mapped onto the gray scale.
pub const RANGE_DB: f64 = 80.0;

/// Log-magnitude spectrogram: time left to right, frequency bottom to top, the loudest bin
/// white and anything [`RANGE_DB`] below it black.
pub fn spectrogram_image(plan: &StftPlan, w: &Waveform) -> GrayImage {
    let mag = plan.analyze(w.samples()).magnitude();
    let (frames, bins) = mag.shape();
    let peak = mag.as_slice().iter().cloned().fold(0.0f64, f64::max);
    let mut img = GrayImage::new(frames.max(1) as u32, bins as u32);
    if peak <= 0.0 {
        return img;
    }
    for t in 0..frames {
        for (k, &m) in mag.frame(t).iter().enumerate() {
            let db = 20.0 * (m.max(1e-300) / peak).log10();
            let v = ((db + RANGE_DB) / RANGE_DB).clamp(0.0, 1.0);
            img.put_pixel(t as u32, (bins - 1 - k) as u32, Luma([(v * 255.0).round() as u8]));
        }
    }
    img
}

pub fn write_spectrogram(path: &Path, plan: &StftPlan, w: &Waveform) -> Result<()> {
    spectrogram_image(plan, w)
        .save(path)
        .map_err(|e| NvsrError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_lights_its_row() {
        let plan = StftPlan::new(64, 16, 64).unwrap();
        let samples = (0..256)
            .map(|n| (2.0 * std::f64::consts::PI * 8.0 * n as f64 / 64.0).sin())
            .collect();
        let img = spectrogram_image(&plan, &Waveform::new(samples, 64).unwrap());
        assert_eq!(img.dimensions(), (16, 33));
        // bin 8 of 33 sits at row 24
        assert_eq!(img.get_pixel(8, 24)[0], 255);
        assert!(img.get_pixel(8, 2)[0] < 64);
    }

    #[test]
    fn silence_is_black() {
        let plan = StftPlan::new(64, 16, 64).unwrap();
        let img = spectrogram_image(&plan, &Waveform::silence(100, 64));
        assert!(img.pixels().all(|p| p[0] == 0));
    }
}
