//! MELF: binary mel-spectrogram exchange format.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `MELF`                            |
//! | 4      | 4    | version (u32, = 1)                      |
//! | 8      | 20   | T, F, sample_rate, window_len, hop (u32)|
//! | 28     | 1    | scale: 0 linear, 1 natural log (eps 1e-8)|
//! | 29     | 4·T·F| f32 energies, time-major                |

use alloc::vec::Vec;

use crate::error::{Error, MelfError, Result};
use crate::mel::{MelScale, MelSpectrogram};
use crate::stft::Framing;

pub const MAGIC: &[u8; 4] = b"MELF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 29;

pub fn encode(mel: &MelSpectrogram) -> Result<Vec<u8>> {
    let (t, f) = mel.shape();
    let field = |v: usize, what: &'static str| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::InvalidParameter(alloc::format!("{what} does not fit in u32")))
    };
    let header = [
        field(t, "frame count")?,
        field(f, "band count")?,
        mel.framing.sample_rate,
        field(mel.framing.window_len, "window length")?,
        field(mel.framing.hop, "hop")?,
    ];
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t * f);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(match mel.scale {
        MelScale::Linear => 0,
        MelScale::Log => 1,
    });
    for &e in mel.as_slice() {
        out.extend_from_slice(&(e as f32).to_le_bytes());
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

pub fn decode(bytes: &[u8]) -> Result<MelSpectrogram> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(MelfError::BadMagic.into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(MelfError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        }
        .into());
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(MelfError::UnsupportedVersion(version).into());
    }
    let frames = read_u32(bytes, 8) as usize;
    let n_mels = read_u32(bytes, 12) as usize;
    let sample_rate = read_u32(bytes, 16);
    let window_len = read_u32(bytes, 20) as usize;
    let hop = read_u32(bytes, 24) as usize;
    let scale = match bytes[28] {
        0 => MelScale::Linear,
        1 => MelScale::Log,
        other => return Err(MelfError::BadScaleFlag(other).into()),
    };
    let expected = frames
        .checked_mul(n_mels)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(MelfError::Truncated {
            expected,
            found: bytes.len(),
        }
        .into());
    }
    if bytes.len() > expected {
        return Err(MelfError::TrailingBytes(bytes.len() - expected).into());
    }
    let energies = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let framing = Framing {
        window_len,
        hop,
        sample_rate,
        signal_len: frames * hop,
    };
    MelSpectrogram::new(framing, scale, frames, n_mels, energies)
}
