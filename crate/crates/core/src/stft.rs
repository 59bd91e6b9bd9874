//! Centered Hann-window STFT and weighted overlap-add inverse.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fft::RealFft;
use crate::signal::Waveform;

/// Frame layout shared by every time-frequency representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Framing {
    pub window_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
    /// Length of the waveform the frames describe.
    pub signal_len: usize,
}

impl Framing {
    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn frames_for(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }

    /// Center frequency in Hz of FFT bin `k`.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.window_len as f64
    }

    fn validate(&self) -> Result<()> {
        if self.window_len < 2 || !self.window_len.is_power_of_two() {
            return Err(invalid("window length must be a power of two >= 2"));
        }
        if self.hop == 0 || self.hop > self.window_len / 2 {
            return Err(invalid(alloc::format!(
                "hop {} violates the Hann overlap-add condition for window {}",
                self.hop, self.window_len
            )));
        }
        if self.sample_rate == 0 {
            return Err(invalid("sample rate must be positive"));
        }
        Ok(())
    }
}

/// T x K complex STFT, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub framing: Framing,
    frames: usize,
    bins: Vec<Complex64>,
}

/// T x K magnitude spectrogram, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MagSpectrogram {
    pub framing: Framing,
    frames: usize,
    mags: Vec<f64>,
}

impl ComplexSpectrogram {
    pub fn from_bins(framing: Framing, frames: usize, bins: Vec<Complex64>) -> Result<Self> {
        framing.validate()?;
        let k = framing.bins();
        if bins.len() != frames * k {
            return Err(Error::ShapeMismatch {
                what: "complex spectrogram",
                expected: (frames, k),
                found: (bins.len() / k.max(1), k),
            });
        }
        if bins.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("complex spectrogram"));
        }
        Ok(Self {
            framing,
            frames,
            bins,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_bins(&self) -> usize {
        self.framing.bins()
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let k = self.n_bins();
        &self.bins[t * k..(t + 1) * k]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        let k = self.n_bins();
        &mut self.bins[t * k..(t + 1) * k]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn magnitude(&self) -> MagSpectrogram {
        MagSpectrogram {
            framing: self.framing,
            frames: self.frames,
            mags: self.bins.iter().map(|c| c.norm()).collect(),
        }
    }
}

impl MagSpectrogram {
    pub fn new(framing: Framing, frames: usize, mags: Vec<f64>) -> Result<Self> {
        framing.validate()?;
        let k = framing.bins();
        if mags.len() != frames * k {
            return Err(Error::ShapeMismatch {
                what: "magnitude spectrogram",
                expected: (frames, k),
                found: (mags.len() / k.max(1), k),
            });
        }
        if mags.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("magnitude spectrogram"));
        }
        if mags.iter().any(|&m| m < 0.0) {
            return Err(invalid("magnitudes must be non-negative"));
        }
        Ok(Self {
            framing,
            frames,
            mags,
        })
    }

    pub(crate) fn from_parts_unchecked(framing: Framing, frames: usize, mags: Vec<f64>) -> Self {
        Self {
            framing,
            frames,
            mags,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_bins(&self) -> usize {
        self.framing.bins()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let k = self.n_bins();
        &self.mags[t * k..(t + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mags
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.n_bins())
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.mags[t * self.n_bins() + k]
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64))
        .collect()
}

/// Reusable analysis/synthesis state for one (window, hop, rate) configuration.
#[derive(Debug, Clone)]
pub struct StftPlan {
    window_len: usize,
    hop: usize,
    sample_rate: u32,
    window: Vec<f64>,
    fft: RealFft,
}

impl StftPlan {
    pub fn new(window_len: usize, hop: usize, sample_rate: u32) -> Result<Self> {
        let probe = Framing {
            window_len,
            hop,
            sample_rate,
            signal_len: 0,
        };
        probe.validate()?;
        Ok(Self {
            window_len,
            hop,
            sample_rate,
            window: hann(window_len),
            fft: RealFft::new(window_len)?,
        })
    }

    pub fn framing(&self, signal_len: usize) -> Framing {
        Framing {
            window_len: self.window_len,
            hop: self.hop,
            sample_rate: self.sample_rate,
            signal_len,
        }
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Forward transform of raw samples; frames are centered at multiples of the hop with
    /// zero padding outside the signal.
    pub fn analyze(&self, samples: &[f64]) -> ComplexSpectrogram {
        let framing = self.framing(samples.len());
        let frames = framing.frames_for(samples.len());
        let k = framing.bins();
        let n = self.window_len;
        let half = (n / 2) as isize;
        let mut bins = alloc::vec![Complex64::new(0.0, 0.0); frames * k];
        let mut frame = alloc::vec![0.0; n];
        let mut scratch = self.fft.make_scratch();
        for t in 0..frames {
            let start = (t * self.hop) as isize - half;
            for (i, slot) in frame.iter_mut().enumerate() {
                let idx = start + i as isize;
                *slot = if idx >= 0 && (idx as usize) < samples.len() {
                    samples[idx as usize] * self.window[i]
                } else {
                    0.0
                };
            }
            self.fft
                .forward(&frame, &mut bins[t * k..(t + 1) * k], &mut scratch);
        }
        ComplexSpectrogram {
            framing,
            frames,
            bins,
        }
    }

    /// Weighted overlap-add inverse producing `spec.framing.signal_len` samples.
    pub fn synthesize(&self, spec: &ComplexSpectrogram) -> Result<Vec<f64>> {
        let f = spec.framing;
        if f.window_len != self.window_len || f.hop != self.hop {
            return Err(invalid("spectrogram framing does not match the STFT plan"));
        }
        let len = f.signal_len;
        let n = self.window_len;
        let half = (n / 2) as isize;
        let mut out = alloc::vec![0.0; len];
        let mut norm = alloc::vec![0.0; len];
        let mut frame = alloc::vec![0.0; n];
        let mut scratch = self.fft.make_scratch();
        for t in 0..spec.frames {
            self.fft.inverse(spec.frame(t), &mut frame, &mut scratch);
            let start = (t * self.hop) as isize - half;
            for i in 0..n {
                let idx = start + i as isize;
                if idx < 0 || idx as usize >= len {
                    continue;
                }
                let w = self.window[i];
                out[idx as usize] += w * frame[i];
                norm[idx as usize] += w * w;
            }
        }
        for (o, w) in out.iter_mut().zip(&norm) {
            *o = if *w > 1e-10 { *o / *w } else { 0.0 };
        }
        Ok(out)
    }
}

/// Hann-window STFT with `ceil(len / hop)` centered frames.
pub fn stft(w: &Waveform, window_len: usize, hop: usize) -> Result<ComplexSpectrogram> {
    Ok(StftPlan::new(window_len, hop, w.sample_rate())?.analyze(w.samples()))
}

/// Inverse of [`stft`].
pub fn istft(spec: &ComplexSpectrogram) -> Result<Waveform> {
    let f = spec.framing;
    let plan = StftPlan::new(f.window_len, f.hop, f.sample_rate)?;
    let samples = plan.synthesize(spec)?;
    Waveform::new(samples, f.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{HOP, SAMPLE_RATE, WINDOW_LEN};

    #[test]
    fn reference_framing_has_1025_bins() {
        let w = Waveform::new(alloc::vec![0.0; 44100], SAMPLE_RATE).unwrap();
        let s = stft(&w, WINDOW_LEN, HOP).unwrap();
        assert_eq!(s.n_bins(), 1025);
        assert_eq!(s.frames(), 100);
        assert!(s.as_slice().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn empty_waveform_gives_no_frames() {
        let w = Waveform::new(Vec::new(), SAMPLE_RATE).unwrap();
        let s = stft(&w, WINDOW_LEN, HOP).unwrap();
        assert_eq!(s.frames(), 0);
        assert!(istft(&s).unwrap().is_empty());
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        assert!(Waveform::new(alloc::vec![0.0, f64::NAN], SAMPLE_RATE).is_err());
        assert!(Waveform::new(alloc::vec![f64::INFINITY], SAMPLE_RATE).is_err());
    }

    #[test]
    fn hop_above_half_window_is_rejected() {
        assert!(StftPlan::new(2048, 1025, SAMPLE_RATE).is_err());
        assert!(StftPlan::new(2000, 441, SAMPLE_RATE).is_err());
        assert!(StftPlan::new(2048, 1024, SAMPLE_RATE).is_ok());
    }

    #[test]
    fn bin_centered_sinusoid_peaks_at_its_bin() {
        let sr = SAMPLE_RATE as f64;
        let k0 = 93usize;
        let f = k0 as f64 * sr / WINDOW_LEN as f64;
        let x: Vec<f64> = (0..22050)
            .map(|i| libm::sin(2.0 * PI * f * i as f64 / sr))
            .collect();
        let s = stft(&Waveform::new(x.clone(), SAMPLE_RATE).unwrap(), WINDOW_LEN, HOP).unwrap();
        let win = hann(WINDOW_LEN);
        // interior frames only
        for t in 3..s.frames() - 3 {
            let mags = s.magnitude();
            let row = mags.frame(t);
            let arg = (0..row.len())
                .max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap())
                .unwrap();
            assert_eq!(arg, k0);
            // direct DFT of the same windowed frame at bin k0
            let start = t * HOP - WINDOW_LEN / 2;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..WINDOW_LEN {
                let a = -2.0 * PI * (k0 * i) as f64 / WINDOW_LEN as f64;
                acc += Complex64::new(libm::cos(a), libm::sin(a)) * (x[start + i] * win[i]);
            }
            assert!((acc - s.frame(t)[k0]).norm() < 1e-8);
        }
    }
}
