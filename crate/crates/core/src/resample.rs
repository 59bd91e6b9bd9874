//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc anti-aliasing filter.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Largest reduced numerator or denominator accepted.
pub const MAX_RATIO_TERM: u64 = 1000;
/// Kaiser window shape parameter of the anti-aliasing filter.
pub const KAISER_BETA: f64 = 5.0;
/// Sinc zero crossings kept on each side of the filter center, measured at the lower of
/// the two rates.
pub const ZERO_CROSSINGS: usize = 10;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reduced `(up, down)` factors for converting `from` Hz to `to` Hz.
pub fn ratio(from: u32, to: u32) -> Result<(u64, u64)> {
    if from == 0 || to == 0 {
        return Err(crate::error::invalid("sample rates must be positive"));
    }
    let g = gcd(from as u64, to as u64);
    let (up, down) = (to as u64 / g, from as u64 / g);
    if up > MAX_RATIO_TERM || down > MAX_RATIO_TERM {
        return Err(Error::UnsupportedRatio { up, down });
    }
    Ok((up, down))
}

/// Zeroth-order modified Bessel function of the first kind.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

pub fn kaiser(len: usize, beta: f64) -> Vec<f64> {
    if len == 1 {
        return alloc::vec![1.0];
    }
    let denom = bessel_i0(beta);
    (0..len)
        .map(|i| {
            let r = 2.0 * i as f64 / (len - 1) as f64 - 1.0;
            bessel_i0(beta * libm::sqrt((1.0 - r * r).max(0.0))) / denom
        })
        .collect()
}

/// Prototype lowpass at the upsampled rate: cutoff at the lower Nyquist, unit DC gain
/// before the `up` interpolation gain.
pub fn design_prototype(up: u64, down: u64) -> Vec<f64> {
    let max = up.max(down) as f64;
    let half_len = ZERO_CROSSINGS * up.max(down) as usize;
    let window = kaiser(2 * half_len + 1, KAISER_BETA);
    let mut taps: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let x = (j as f64 - half_len as f64) / max;
            let sinc = if x == 0.0 { 1.0 } else { libm::sin(PI * x) / (PI * x) };
            w * sinc
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    let gain = up as f64 / sum;
    for t in &mut taps {
        *t *= gain;
    }
    taps
}

fn output_len(len: usize, up: u64, down: u64) -> usize {
    ((len as u128 * up as u128 * 2 + down as u128) / (2 * down as u128)) as usize
}

/// Resamples to `target_rate`, returning `round(len * target / source)` samples aligned
/// with the input (the filter's group delay is compensated).
pub fn resample_poly(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    let (up, down) = ratio(w.sample_rate(), target_rate)?;
    if up == 1 && down == 1 {
        return Ok(w.clone());
    }
    let x = w.samples();
    let taps = design_prototype(up, down);
    let half_len = (taps.len() / 2) as i64;
    let (up_i, down_i) = (up as i64, down as i64);
    let n_out = output_len(x.len(), up, down);
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as i64 {
        let u = n * down_i;
        // inputs m with |u - m * up| <= half_len
        let lo = (u - half_len).div_euclid(up_i) + i64::from((u - half_len).rem_euclid(up_i) != 0);
        let lo = lo.max(0);
        let hi = ((u + half_len).div_euclid(up_i)).min(x.len() as i64 - 1);
        let mut acc = 0.0;
        let mut m = lo;
        while m <= hi {
            acc += x[m as usize] * taps[(u - m * up_i + half_len) as usize];
            m += 1;
        }
        out.push(acc);
    }
    Ok(Waveform::from_parts_unchecked(out, target_rate))
}
