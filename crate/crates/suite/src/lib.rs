//! Measurement helpers shared by the acceptance checks.

use std::f64::consts::PI;
use std::fmt;

use nvsr_core::stft::ComplexSpectrogram;

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Result line: `PASS`, `FAIL` or `SKIP`, the check name and what was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

/// Sum of squared STFT magnitudes over bins whose center lies in `[lo_hz, hi_hz)`.
pub fn band_energy(spec: &ComplexSpectrogram, lo_hz: f64, hi_hz: f64) -> f64 {
    let framing = spec.framing;
    let bins: Vec<usize> = (0..framing.bins())
        .filter(|&k| (lo_hz..hi_hz).contains(&framing.bin_hz(k)))
        .collect();
    (0..spec.frames())
        .map(|t| {
            let row = spec.frame(t);
            bins.iter().map(|&k| row[k].norm_sqr()).sum::<f64>()
        })
        .sum()
}

/// `‖a − b‖ / ‖b‖` over the bins of every frame whose center lies below `hz`.
pub fn relative_error_below(a: &ComplexSpectrogram, b: &ComplexSpectrogram, hz: f64) -> f64 {
    let framing = b.framing;
    let top = (0..framing.bins())
        .take_while(|&k| framing.bin_hz(k) < hz)
        .count();
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..b.frames().min(a.frames()) {
        for (x, y) in a.frame(t)[..top].iter().zip(&b.frame(t)[..top]) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Normalized correlation of `x` with the best-phase sinusoid at `hz`.
pub fn sinusoid_correlation(x: &[f64], hz: f64, sample_rate: u32) -> f64 {
    let (mut s, mut c, mut ss, mut cc, mut sc, mut xx) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let ph = 2.0 * PI * hz * n as f64 / sample_rate as f64;
        let (sn, cs) = ph.sin_cos();
        s += v * sn;
        c += v * cs;
        ss += sn * sn;
        cc += cs * cs;
        sc += sn * cs;
        xx += v * v;
    }
    if xx == 0.0 {
        return 0.0;
    }
    // projection of x onto span{sin, cos}
    let det = ss * cc - sc * sc;
    let a = (s * cc - c * sc) / det;
    let b = (c * ss - s * sc) / det;
    let proj = a * s + b * c;
    (proj / xx).max(0.0).sqrt()
}
