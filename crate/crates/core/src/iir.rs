//! Chebyshev type I lowpass design (bilinear transform) as cascaded biquads.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::signal::Waveform;

/// One second-order (or first-order, with zero trailing coefficients) section,
/// normalized so that `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

/// Cascade of [`Biquad`] sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Complex response at `hz` for sampling rate `sample_rate`.
    pub fn response(&self, hz: f64, sample_rate: f64) -> Complex64 {
        let w = 2.0 * PI * hz / sample_rate;
        let z1 = Complex64::new(libm::cos(w), -libm::sin(w));
        let z2 = z1 * z1;
        self.sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| {
            let num = z2 * s.b[2] + z1 * s.b[1] + s.b[0];
            let den = z2 * s.a[2] + z1 * s.a[1] + s.a[0];
            acc * num / den
        })
    }

    /// Causal filtering, transposed direct form II per section.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in out.iter_mut() {
                let x = *v;
                let y = s.b[0] * x + z1;
                z1 = s.b[1] * x - s.a[1] * y + z2;
                z2 = s.b[2] * x - s.a[2] * y;
                *v = y;
            }
        }
        out
    }

    /// Forward then time-reversed pass; squared magnitude response, zero phase.
    pub fn filter_zero_phase(&self, input: &[f64]) -> Vec<f64> {
        let mut y = self.filter(input);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y
    }
}

/// Ripple factor epsilon for a passband ripple in dB.
pub fn ripple_epsilon(ripple_db: f64) -> f64 {
    libm::sqrt(libm::pow(10.0, ripple_db / 10.0) - 1.0)
}

/// Digital Chebyshev type I lowpass whose passband edge (the frequency where the gain
/// leaves the ripple band) sits at `cutoff_hz`.
pub fn cheby1_design(order: usize, ripple_db: f64, cutoff_hz: f64, sample_rate: f64) -> Result<Sos> {
    if order == 0 {
        return Err(invalid("filter order must be at least 1"));
    }
    if !(ripple_db > 0.0) || !ripple_db.is_finite() {
        return Err(invalid("passband ripple must be positive"));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0) {
        return Err(invalid(alloc::format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            sample_rate / 2.0
        )));
    }
    let eps = ripple_epsilon(ripple_db);
    let mu = libm::asinh(1.0 / eps) / order as f64;
    let (sh, ch) = (libm::sinh(mu), libm::cosh(mu));
    // prewarped analog edge for the bilinear map s = 2 (z - 1) / (z + 1)
    let wc = 2.0 * libm::tan(PI * cutoff_hz / sample_rate);
    let to_z = |p: Complex64| (Complex64::new(2.0, 0.0) + p) / (Complex64::new(2.0, 0.0) - p);

    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
        let analog = Complex64::new(-sh * libm::sin(theta), ch * libm::cos(theta)) * wc;
        let p = to_z(analog);
        let a = [1.0, -2.0 * p.re, p.norm_sqr()];
        let dc = (a[0] + a[1] + a[2]) / 4.0;
        sections.push(Biquad {
            b: [dc, 2.0 * dc, dc],
            a,
        });
    }
    if order % 2 == 1 {
        let p = to_z(Complex64::new(-sh * wc, 0.0)).re;
        let dc = (1.0 - p) / 2.0;
        sections.push(Biquad {
            b: [dc, dc, 0.0],
            a: [1.0, -p, 0.0],
        });
    }
    // sections have unit DC gain; even orders sit at the bottom of the ripple at DC
    if order % 2 == 0 {
        let g = 1.0 / libm::sqrt(1.0 + eps * eps);
        for b in &mut sections[0].b {
            *b *= g;
        }
    }
    Ok(Sos { sections })
}

/// Lowpass `w` with a Chebyshev type I filter.
pub fn cheby1_lowpass(
    w: &Waveform,
    cutoff_hz: f64,
    order: usize,
    ripple_db: f64,
    zero_phase: bool,
) -> Result<Waveform> {
    let sos = cheby1_design(order, ripple_db, cutoff_hz, w.sample_rate() as f64)?;
    let y = if zero_phase {
        sos.filter_zero_phase(w.samples())
    } else {
        sos.filter(w.samples())
    };
    Ok(Waveform::from_parts_unchecked(y, w.sample_rate()))
}
