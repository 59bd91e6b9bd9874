//! Mono WAV reading and writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use log::warn;
use nvsr_core::Waveform;

use crate::error::{NvsrError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavFormat {
    Pcm16,
    #[default]
    Float32,
}

/// Reads 16-bit integer or 32-bit float PCM. Multi-channel files are averaged to mono.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let wav_err = |source| NvsrError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (fmt, bits) => {
            return Err(NvsrError::UnsupportedWav {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {fmt:?}"),
            })
        }
    };
    let channels = spec.channels.max(1) as usize;
    let samples = if channels == 1 {
        interleaved
    } else {
        warn!(
            "{}: {channels} channels, downmixing to mono by averaging",
            path.display()
        );
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Ok(Waveform::new(samples, spec.sample_rate)?)
}

pub fn write_wav(path: &Path, w: &Waveform, format: WavFormat) -> Result<()> {
    let wav_err = |source| NvsrError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate(),
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => SampleFormat::Int,
            WavFormat::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in w.samples() {
        match format {
            WavFormat::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v).map_err(wav_err)?;
            }
            WavFormat::Float32 => writer.write_sample(s as f32).map_err(wav_err)?,
        }
    }
    writer.finalize().map_err(wav_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for (l, r) in [(16384i16, 0i16), (-16384, -16384), (8192, 24576)] {
            w.write_sample(l).unwrap();
            w.write_sample(r).unwrap();
        }
        w.finalize().unwrap();
        let mono = read_wav(&path).unwrap();
        assert_eq!(mono.sample_rate(), 16000);
        assert_eq!(mono.samples(), &[0.25, -0.5, 0.5]);
    }

    #[test]
    fn float_and_pcm16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = Waveform::new(vec![0.0, 0.5, -0.25, 0.75], 22050).unwrap();
        let f = dir.path().join("f.wav");
        write_wav(&f, &w, WavFormat::Float32).unwrap();
        assert_eq!(read_wav(&f).unwrap(), w);
        let p = dir.path().join("p.wav");
        write_wav(&p, &w, WavFormat::Pcm16).unwrap();
        let back = read_wav(&p).unwrap();
        for (a, b) in back.samples().iter().zip(w.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn unsupported_depth_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(1i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(NvsrError::UnsupportedWav { .. })
        ));
    }
}
