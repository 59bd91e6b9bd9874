//! Evaluation inputs: dataset manifests and a deterministic speech-like signal generator
//! used when no recorded corpus is available.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nvsr_core::Waveform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NvsrError, Result};

/// One manifest line: a WAV path (resolved against the manifest's directory) and an
/// optional split tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub split: Option<String>,
}

/// Parses `path [split]` lines; blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Vec<ManifestEntry> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let mut parts = line.split_whitespace();
            let rel = parts.next().unwrap_or_default();
            let split = parts.next().map(str::to_owned);
            let id = Path::new(rel)
                .with_extension("")
                .to_string_lossy()
                .replace('\\', "/");
            ManifestEntry {
                id,
                path: base.join(rel),
                split,
            }
        })
        .collect()
}

pub fn read_manifest(path: &Path, split: Option<&str>) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| NvsrError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(parse_manifest(&text, base)
        .into_iter()
        .filter(|e| split.is_none_or(|s| e.split.as_deref() == Some(s)))
        .collect())
}

struct Resonator {
    gain: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    /// Two-pole bandpass with zeros at DC and Nyquist, unit gain at `center`.
    fn new(center: f64, bandwidth: f64, sr: f64) -> Self {
        let r = (-PI * bandwidth / sr).exp();
        let theta = 2.0 * PI * center / sr;
        Self {
            gain: (1.0 - r * r) / 2.0,
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.gain * (x - self.x2) + self.a1 * self.y1 + self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

// (F1, F2, F3) for a handful of vowels, Hz
const VOWELS: [(f64, f64, f64); 6] = [
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (300.0, 870.0, 2240.0),
    (530.0, 1840.0, 2480.0),
    (570.0, 840.0, 2410.0),
    (660.0, 1720.0, 2410.0),
];

fn envelope(i: usize, len: usize, ramp: usize) -> f64 {
    let ramp = ramp.min(len / 2).max(1);
    let edge = i.min(len - 1 - i);
    if edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
    }
}

/// Deterministic speech-like utterance: voiced segments with a gliding pulse-train source
/// through parallel formant resonators, fricative noise bursts, pauses and a faint noise
/// floor. Peak is normalized into `[0.5, 0.9]`.
pub fn speech_like(seed: u64, seconds: f64, sample_rate: u32) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let total = (seconds * sr).round() as usize;
    let mut out = vec![0.0; total];
    let f0_base = rng.gen_range(90.0..220.0);
    let formant_scale = rng.gen_range(0.88..1.18);
    let ramp = (0.012 * sr) as usize;

    let mut pos = (rng.gen_range(0.03..0.12) * sr) as usize;
    while pos < total {
        let kind = rng.gen_range(0.0..1.0);
        if kind < 0.62 {
            let len = (rng.gen_range(0.12..0.30) * sr) as usize;
            let (f1, f2, f3) = VOWELS[rng.gen_range(0..VOWELS.len())];
            let formants = [
                (f1 * formant_scale, 80.0, 1.0),
                (f2 * formant_scale, 110.0, 0.5),
                (f3 * formant_scale, 160.0, 0.25),
                (3500.0 * formant_scale, 250.0, 0.12),
                (4600.0 * formant_scale, 350.0, 0.07),
                (7000.0 * formant_scale, 1500.0, 0.03),
            ];
            let mut bank: Vec<(Resonator, f64)> = formants
                .iter()
                .map(|&(f, b, a)| (Resonator::new(f, b, sr), a))
                .collect();
            let f0_start = f0_base * rng.gen_range(0.85..1.2);
            let f0_end = f0_base * rng.gen_range(0.8..1.15);
            let amp = rng.gen_range(0.5..1.0);
            let mut phase = 0.0;
            let mut glottal = 0.0;
            for i in 0..len.min(total - pos) {
                let t = i as f64 / len as f64;
                let f0 = (f0_start + (f0_end - f0_start) * t)
                    * (1.0 + 0.01 * (2.0 * PI * 5.0 * i as f64 / sr).sin());
                phase += f0 / sr;
                let pulse = if phase >= 1.0 {
                    phase -= 1.0;
                    1.0
                } else {
                    0.0
                };
                glottal = 0.94 * glottal + pulse;
                let source = glottal + 0.03 * rng.gen_range(-1.0..1.0);
                let y: f64 = bank.iter_mut().map(|(r, a)| *a * r.step(source)).sum();
                out[pos + i] += amp * envelope(i, len, ramp) * y;
            }
            pos += len;
        } else if kind < 0.84 {
            let len = (rng.gen_range(0.06..0.16) * sr) as usize;
            let center = rng.gen_range(4500.0..8000.0_f64).min(0.4 * sr);
            let mut r1 = Resonator::new(center, rng.gen_range(2000.0..4000.0), sr);
            let mut r2 = Resonator::new((center * 1.6).min(0.45 * sr), 5000.0, sr);
            let amp = rng.gen_range(0.08..0.25);
            for i in 0..len.min(total - pos) {
                let n = rng.gen_range(-1.0..1.0);
                let y = r1.step(n) + 0.4 * r2.step(n);
                out[pos + i] += amp * envelope(i, len, ramp) * y;
            }
            pos += len;
        } else {
            pos += (rng.gen_range(0.05..0.2) * sr) as usize;
        }
    }
    for s in out.iter_mut() {
        *s += 1e-4 * rng.gen_range(-1.0..1.0);
    }
    let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let target = rng.gen_range(0.5..0.9);
    if peak > 0.0 {
        out.iter_mut().for_each(|s| *s *= target / peak);
    }
    Waveform::new(out, sample_rate).expect("generator produces finite samples")
}

/// Uniform white noise in `[-amplitude, amplitude]`.
pub fn white_noise(seed: u64, len: usize, amplitude: f64, sample_rate: u32) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    Waveform::new(samples, sample_rate).expect("finite noise")
}

/// A named synthetic utterance set, `synthetic-000`, `synthetic-001`, ...
pub fn synthetic_corpus(count: usize, seconds: f64, seed: u64) -> Vec<(String, Waveform)> {
    (0..count)
        .map(|i| {
            (
                format!("synthetic-{i:03}"),
                speech_like(seed.wrapping_add(i as u64), seconds, nvsr_core::config::SAMPLE_RATE),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lines() {
        let text = "# VCTK test split\np360/p360_001_mic1.wav test\n\np280/x.wav train\nloose.wav\n";
        let m = parse_manifest(text, Path::new("/data"));
        assert_eq!(m.len(), 3);
        assert_eq!(m[0].id, "p360/p360_001_mic1");
        assert_eq!(m[0].path, PathBuf::from("/data/p360/p360_001_mic1.wav"));
        assert_eq!(m[0].split.as_deref(), Some("test"));
        assert_eq!(m[2].split, None);
    }

    #[test]
    fn generator_is_deterministic_and_bounded() {
        let a = speech_like(7, 1.0, 44100);
        let b = speech_like(7, 1.0, 44100);
        assert_eq!(a, b);
        assert_eq!(a.len(), 44100);
        assert!(a.peak() <= 0.9 + 1e-12 && a.peak() >= 0.5 - 1e-12);
        assert_ne!(speech_like(8, 1.0, 44100), a);
    }
}
