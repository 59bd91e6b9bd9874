//! HTK mel scale, triangular filterbanks, and the forward/pseudo-inverse mel transforms.

use alloc::vec::Vec;

use crate::config::LOG_EPS;
use crate::error::{invalid, Error, Result};
use crate::stft::{Framing, MagSpectrogram};

pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) || !hz.is_finite() {
        return Err(invalid(alloc::format!("frequency must be finite and >= 0, got {hz}")));
    }
    Ok(2595.0 * libm::log10(1.0 + hz / 700.0))
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelConfig {
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    /// Scale each triangle to unit area instead of unit peak.
    pub area_norm: bool,
}

impl MelConfig {
    pub fn reference(sample_rate: u32) -> Self {
        Self {
            n_mels: crate::config::N_MELS,
            f_min: 0.0,
            f_max: sample_rate as f64 / 2.0,
            area_norm: false,
        }
    }
}

/// K x F non-negative weight matrix mapping linear bins to mel bands.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    config: MelConfig,
    sample_rate: u32,
    window_len: usize,
    bins: usize,
    weights: Vec<f64>,
    // half-open range of bins with non-zero weight, per band
    support: Vec<(usize, usize)>,
    centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(config: MelConfig, sample_rate: u32, window_len: usize) -> Result<Self> {
        let MelConfig {
            n_mels,
            f_min,
            f_max,
            area_norm,
        } = config;
        let nyquist = sample_rate as f64 / 2.0;
        if n_mels < 2 {
            return Err(invalid("n_mels must be at least 2"));
        }
        if !(0.0 <= f_min && f_min < f_max && f_max <= nyquist) {
            return Err(invalid(alloc::format!(
                "need 0 <= f_min < f_max <= {nyquist}, got [{f_min}, {f_max}]"
            )));
        }
        if window_len < 2 || !window_len.is_power_of_two() {
            return Err(invalid("window length must be a power of two"));
        }
        let bins = window_len / 2 + 1;
        let lo_mel = hz_to_mel(f_min)?;
        let hi_mel = hz_to_mel(f_max)?;
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(lo_mel + (hi_mel - lo_mel) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = |k: usize| k as f64 * sample_rate as f64 / window_len as f64;

        let mut weights = alloc::vec![0.0; bins * n_mels];
        let mut support = Vec::with_capacity(n_mels);
        for f in 0..n_mels {
            let (lower, center, upper) = (edges[f], edges[f + 1], edges[f + 2]);
            let scale = if area_norm { 2.0 / (upper - lower) } else { 1.0 };
            let mut first = None;
            let mut last = 0;
            for k in 0..bins {
                let hz = bin_hz(k);
                let rise = (hz - lower) / (center - lower);
                let fall = (upper - hz) / (upper - center);
                let w = rise.min(fall).max(0.0);
                if w > 0.0 {
                    weights[k * n_mels + f] = w * scale;
                    first.get_or_insert(k);
                    last = k;
                }
            }
            match first {
                Some(first) => support.push((first, last + 1)),
                None => {
                    return Err(invalid(alloc::format!(
                        "mel band {f} ({center:.1} Hz) covers no FFT bin; too many mel bands for window {window_len}"
                    )))
                }
            }
        }
        Ok(Self {
            config,
            sample_rate,
            window_len,
            bins,
            weights,
            support,
            centers_hz: edges[1..=n_mels].to_vec(),
        })
    }

    pub fn config(&self) -> &MelConfig {
        &self.config
    }

    pub fn n_mels(&self) -> usize {
        self.config.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.bins
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn weight(&self, k: usize, f: usize) -> f64 {
        self.weights[k * self.config.n_mels + f]
    }

    /// Row-major K x F weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.centers_hz[band]
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Sum of the weights of band `f`.
    pub fn band_area(&self, f: usize) -> f64 {
        let (lo, hi) = self.support[f];
        (lo..hi).map(|k| self.weight(k, f)).sum()
    }

    /// Band whose center is nearest to `hz` on the mel axis.
    pub fn band_containing(&self, hz: f64) -> usize {
        let target = hz_to_mel(hz.max(0.0)).unwrap_or(0.0);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (f, &c) in self.centers_hz.iter().enumerate() {
            let d = libm::fabs(hz_to_mel(c).unwrap_or(0.0) - target);
            if d < best_d {
                best_d = d;
                best = f;
            }
        }
        best
    }

    /// Highest band whose center lies at or below `hz` (band 0 if none).
    pub fn band_below(&self, hz: f64) -> usize {
        self.centers_hz
            .iter()
            .rposition(|&c| c <= hz)
            .unwrap_or(0)
    }

    fn project_frame(&self, mags: &[f64], out: &mut [f64]) {
        for (f, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.support[f];
            *o = (lo..hi).map(|k| mags[k] * self.weight(k, f)).sum();
        }
    }

    // out[k] = sum_f W[k, f] * bands[f]
    fn back_project_frame(&self, bands: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (f, &b) in bands.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let (lo, hi) = self.support[f];
            for k in lo..hi {
                out[k] += self.weight(k, f) * b;
            }
        }
    }
}

/// Reference-configuration filterbank with unit-peak triangles.
pub fn build_filterbank(
    sample_rate: u32,
    window_len: usize,
    n_mels: usize,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank> {
    MelFilterbank::new(
        MelConfig {
            n_mels,
            f_min,
            f_max,
            area_norm: false,
        },
        sample_rate,
        window_len,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MelScale {
    Linear,
    /// `ln(energy + LOG_EPS)`
    Log,
}

/// T x F mel energies, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub framing: Framing,
    pub scale: MelScale,
    frames: usize,
    n_mels: usize,
    energies: Vec<f64>,
}

impl MelSpectrogram {
    pub fn new(
        framing: Framing,
        scale: MelScale,
        frames: usize,
        n_mels: usize,
        energies: Vec<f64>,
    ) -> Result<Self> {
        if energies.len() != frames * n_mels {
            return Err(Error::ShapeMismatch {
                what: "mel spectrogram",
                expected: (frames, n_mels),
                found: (energies.len() / n_mels.max(1), n_mels),
            });
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("mel spectrogram"));
        }
        if scale == MelScale::Linear && energies.iter().any(|&e| e < 0.0) {
            return Err(invalid("linear mel energies must be non-negative"));
        }
        Ok(Self {
            framing,
            scale,
            frames,
            n_mels,
            energies,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.n_mels)
    }

    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.energies[t * self.n_mels + f]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.energies[t * self.n_mels..(t + 1) * self.n_mels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.energies
    }

    pub fn map_energies(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.framing,
            self.scale,
            self.frames,
            self.n_mels,
            self.energies.iter().map(|&e| f(e)).collect(),
        )
    }

    pub fn to_log(&self) -> Self {
        match self.scale {
            MelScale::Log => self.clone(),
            MelScale::Linear => self.with_energies(
                MelScale::Log,
                self.energies.iter().map(|&e| libm::log(e + LOG_EPS)).collect(),
            ),
        }
    }

    pub fn to_linear(&self) -> Self {
        match self.scale {
            MelScale::Linear => self.clone(),
            MelScale::Log => self.with_energies(
                MelScale::Linear,
                self.energies
                    .iter()
                    .map(|&e| (libm::exp(e) - LOG_EPS).max(0.0))
                    .collect(),
            ),
        }
    }

    fn with_energies(&self, scale: MelScale, energies: Vec<f64>) -> Self {
        Self {
            framing: self.framing,
            scale,
            frames: self.frames,
            n_mels: self.n_mels,
            energies,
        }
    }
}

fn check_bins(spec_bins: usize, fb: &MelFilterbank) -> Result<()> {
    if spec_bins != fb.n_bins() {
        return Err(Error::ShapeMismatch {
            what: "mel transform bins",
            expected: (fb.n_bins(), fb.n_mels()),
            found: (spec_bins, fb.n_mels()),
        });
    }
    Ok(())
}

/// `energies = mags . W`, linear scale.
pub fn mel_transform(s: &MagSpectrogram, fb: &MelFilterbank) -> Result<MelSpectrogram> {
    check_bins(s.n_bins(), fb)?;
    let f = fb.n_mels();
    let mut energies = alloc::vec![0.0; s.frames() * f];
    for t in 0..s.frames() {
        fb.project_frame(s.frame(t), &mut energies[t * f..(t + 1) * f]);
    }
    Ok(MelSpectrogram {
        framing: s.framing,
        scale: MelScale::Linear,
        frames: s.frames(),
        n_mels: f,
        energies,
    })
}

pub const PSEUDO_INVERSE_MAX_ITERS: usize = 200;
pub const PSEUDO_INVERSE_TOL: f64 = 1e-8;

/// Non-negative least-squares magnitude estimate whose mel projection approximates `m`.
///
/// Each frame starts from the transpose of the filterbank applied to band energies divided
/// by band area, then runs multiplicative updates until the relative drop in squared
/// residual falls under [`PSEUDO_INVERSE_TOL`] or [`PSEUDO_INVERSE_MAX_ITERS`] is reached.
pub fn mel_pseudo_inverse(m: &MelSpectrogram, fb: &MelFilterbank) -> Result<MagSpectrogram> {
    if m.scale != MelScale::Linear {
        return Err(invalid("mel pseudo-inverse expects linear-scale energies"));
    }
    if m.n_mels() != fb.n_mels() {
        return Err(Error::ShapeMismatch {
            what: "mel pseudo-inverse bands",
            expected: (m.frames(), fb.n_mels()),
            found: m.shape(),
        });
    }
    let framing = Framing {
        window_len: fb.window_len(),
        ..m.framing
    };
    let k = fb.n_bins();
    let f = fb.n_mels();
    let areas: Vec<f64> = (0..f).map(|b| fb.band_area(b)).collect();
    let mut mags = alloc::vec![0.0; m.frames() * k];

    let mut numer = alloc::vec![0.0; k];
    let mut denom = alloc::vec![0.0; k];
    let mut proj = alloc::vec![0.0; f];
    let mut scaled = alloc::vec![0.0; f];
    for t in 0..m.frames() {
        let target = m.frame(t);
        let norm2: f64 = target.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            continue;
        }
        let est = &mut mags[t * k..(t + 1) * k];
        for (s, (&e, &a)) in scaled.iter_mut().zip(target.iter().zip(&areas)) {
            *s = e / a;
        }
        fb.back_project_frame(&scaled, est);
        fb.back_project_frame(target, &mut numer);

        let mut prev = f64::INFINITY;
        for _ in 0..PSEUDO_INVERSE_MAX_ITERS {
            fb.project_frame(est, &mut proj);
            let resid: f64 = proj
                .iter()
                .zip(target)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                / norm2;
            if prev.is_finite() && prev - resid <= PSEUDO_INVERSE_TOL * prev.max(f64::MIN_POSITIVE) {
                break;
            }
            prev = resid;
            fb.back_project_frame(&proj, &mut denom);
            for ((s, &num), &den) in est.iter_mut().zip(&numer).zip(&denom) {
                *s = if den > 0.0 { *s * num / den } else { 0.0 };
            }
        }
    }
    Ok(MagSpectrogram::from_parts_unchecked(framing, m.frames(), mags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn framing(sr: u32, window_len: usize, frames: usize) -> Framing {
        Framing {
            window_len,
            hop: window_len / 4,
            sample_rate: sr,
            signal_len: frames * window_len / 4,
        }
    }

    fn random_mag(rng: &mut ChaCha8Rng, fr: Framing, frames: usize) -> MagSpectrogram {
        let k = fr.window_len / 2 + 1;
        let v = (0..frames * k).map(|_| rng.gen_range(0.0..2.0)).collect();
        MagSpectrogram::new(fr, frames, v).unwrap()
    }

    #[test]
    fn htk_values() {
        assert!((hz_to_mel(700.0).unwrap() - 781.1728387480312).abs() < 1e-9);
        assert!((hz_to_mel(1000.0).unwrap() - 999.9855371396244).abs() < 1e-9);
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        assert!(hz_to_mel(-1.0).is_err());
        assert!(hz_to_mel(f64::NAN).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut hz = 0.0;
        while hz <= 22050.0 {
            assert!((mel_to_hz(hz_to_mel(hz).unwrap()) - hz).abs() < 1e-6);
            hz += 7.3;
        }
    }

    #[test]
    fn reference_filterbank_shape_and_centers() {
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        assert_eq!((fb.n_bins(), fb.n_mels()), (1025, 128));
        assert_eq!(fb.weights().len(), 1025 * 128);
        // 130 mel-uniform edges over [0, 22050] Hz
        assert!((fb.center_hz(0) - 19.147650738681833).abs() < 1e-9);
        assert!((fb.center_hz(63) - 3237.1295693007864).abs() < 1e-9);
        assert!((fb.center_hz(127) - 21444.270350660852).abs() < 1e-9);
        assert!(fb.weights().iter().all(|&w| (0.0..=1.0).contains(&w)));
        assert!(fb.centers_hz().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn band_lookup() {
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        assert_eq!(fb.band_containing(fb.center_hz(40)), 40);
        assert_eq!(fb.band_below(fb.center_hz(40)), 40);
        assert_eq!(fb.band_below(fb.center_hz(40) - 1e-6), 39);
        assert_eq!(fb.band_below(0.0), 0);
        assert_eq!(fb.band_below(22050.0), 127);
    }

    #[test]
    fn too_many_bands_rejected() {
        assert!(build_filterbank(16000, 64, 128, 0.0, 8000.0).is_err());
        assert!(build_filterbank(16000, 512, 20, 100.0, 9000.0).is_err());
    }

    #[test]
    fn weights_match_triangle_formula() {
        let (sr, n, bands) = (16000u32, 256usize, 20usize);
        let fb = build_filterbank(sr, n, bands, 0.0, 8000.0).unwrap();
        let top = 2595.0 * libm::log10(1.0 + 8000.0 / 700.0);
        let edge = |i: usize| 700.0 * (libm::pow(10.0, top * i as f64 / 21.0 / 2595.0) - 1.0);
        for f in 0..bands {
            let (l, c, u) = (edge(f), edge(f + 1), edge(f + 2));
            for k in 0..=n / 2 {
                let hz = k as f64 * sr as f64 / n as f64;
                let want = if hz <= l || hz >= u {
                    0.0
                } else if hz <= c {
                    (hz - l) / (c - l)
                } else {
                    (u - hz) / (u - c)
                };
                assert!((fb.weight(k, f) - want).abs() < 1e-12, "k={k} f={f}");
            }
        }
    }

    #[test]
    fn transform_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        let s = random_mag(&mut rng, framing(44100, 2048, 5), 5);
        let m = mel_transform(&s, &fb).unwrap();
        assert_eq!(m.shape(), (5, 128));
        for t in 0..5 {
            for f in 0..128 {
                let mut want = 0.0;
                for k in 0..1025 {
                    want += s.get(t, k) * fb.weights()[k * 128 + f];
                }
                assert!((m.get(t, f) - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn transform_rejects_wrong_bins() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        let s = random_mag(&mut rng, framing(44100, 1024, 2), 2);
        assert!(matches!(mel_transform(&s, &fb), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn log_and_linear_round_trip() {
        let fr = framing(44100, 2048, 2);
        let m = MelSpectrogram::new(fr, MelScale::Linear, 2, 2, alloc::vec![0.0, 1.0, 2.5, 1e-3]).unwrap();
        let log = m.to_log();
        assert_eq!(log.scale, MelScale::Log);
        assert!((log.get(0, 0) - libm::log(LOG_EPS)).abs() < 1e-12);
        let back = log.to_linear();
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(m.to_linear(), m);
    }

    #[test]
    fn pseudo_inverse_zero_and_residual() {
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        let fr = framing(44100, 2048, 3);
        let zero = MelSpectrogram::new(fr, MelScale::Linear, 3, 128, alloc::vec![0.0; 3 * 128]).unwrap();
        let inv = mel_pseudo_inverse(&zero, &fb).unwrap();
        assert!(inv.as_slice().iter().all(|&v| v == 0.0));

        // smooth spectral envelope
        let k = fb.n_bins();
        let mags: Vec<f64> = (0..3 * k)
            .map(|i| {
                let (t, b) = (i / k, (i % k) as f64);
                (1.0 + t as f64) * libm::exp(-b / 300.0) * (1.2 + libm::sin(b / 40.0))
            })
            .collect();
        let s = MagSpectrogram::new(fr, 3, mags).unwrap();
        let m = mel_transform(&s, &fb).unwrap();
        let inv = mel_pseudo_inverse(&m, &fb).unwrap();
        assert!(inv.as_slice().iter().all(|&v| v >= 0.0));
        let again = mel_transform(&inv, &fb).unwrap();
        let num: f64 = again.as_slice().iter().zip(m.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = m.as_slice().iter().map(|b| b * b).sum();
        assert!(libm::sqrt(num / den) < 0.05, "{}", libm::sqrt(num / den));
    }

    #[test]
    fn pseudo_inverse_rejects_log_scale() {
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        let m = MelSpectrogram::new(framing(44100, 2048, 1), MelScale::Log, 1, 128, alloc::vec![0.0; 128]).unwrap();
        assert!(mel_pseudo_inverse(&m, &fb).is_err());
    }

    #[test]
    fn pseudo_inverse_never_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fb = build_filterbank(44100, 2048, 128, 0.0, 22050.0).unwrap();
        let v = (0..4 * 128).map(|_| rng.gen_range(0.0..5.0)).collect();
        let m = MelSpectrogram::new(framing(44100, 2048, 4), MelScale::Linear, 4, 128, v).unwrap();
        let inv = mel_pseudo_inverse(&m, &fb).unwrap();
        assert!(inv.as_slice().iter().all(|&x| x >= 0.0 && x.is_finite()));
    }
}
