//! Low-resolution simulation: Chebyshev lowpass, polyphase subsampling to the low rate, and
//! polyphase upsampling back to the source rate.

use crate::error::{invalid, Result};
use crate::iir::cheby1_lowpass;
use crate::resample::resample_poly;
use crate::signal::Waveform;

pub const DEFAULT_FILTER_ORDER: usize = 8;
pub const DEFAULT_RIPPLE_DB: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    /// Low rate `l` the signal is reduced to.
    pub target_rate: u32,
    /// Rate `h` of the clean input.
    pub source_rate: u32,
    pub filter_order: usize,
    pub ripple_db: f64,
    /// Forward-backward filtering instead of the causal default.
    pub zero_phase: bool,
}

impl DegradeSpec {
    pub fn new(target_rate: u32, source_rate: u32) -> Self {
        Self {
            target_rate,
            source_rate,
            filter_order: DEFAULT_FILTER_ORDER,
            ripple_db: DEFAULT_RIPPLE_DB,
            zero_phase: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_rate == 0 || self.target_rate >= self.source_rate {
            return Err(invalid(alloc::format!(
                "low rate {} must satisfy 0 < l < h = {}",
                self.target_rate, self.source_rate
            )));
        }
        if self.filter_order == 0 {
            return Err(invalid("filter order must be at least 1"));
        }
        if !(self.ripple_db > 0.0) {
            return Err(invalid("passband ripple must be positive"));
        }
        Ok(())
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.target_rate as f64 / 2.0
    }
}

/// Band-limited pair derived from a clean waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct LowResolution {
    /// Signal at the low rate.
    pub low: Waveform,
    /// The low-rate signal brought back to the source rate, same length as the input.
    pub upsampled: Waveform,
}

pub fn simulate_lr(clean: &Waveform, spec: &DegradeSpec) -> Result<LowResolution> {
    spec.validate()?;
    if clean.sample_rate() != spec.source_rate {
        return Err(invalid(alloc::format!(
            "input rate {} differs from the degradation source rate {}",
            clean.sample_rate(),
            spec.source_rate
        )));
    }
    let filtered = cheby1_lowpass(
        clean,
        spec.cutoff_hz(),
        spec.filter_order,
        spec.ripple_db,
        spec.zero_phase,
    )?;
    let low = resample_poly(&filtered, spec.target_rate)?;
    let upsampled = resample_poly(&low, spec.source_rate)?.fit_to_len(clean.len());
    Ok(LowResolution { low, upsampled })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_rate_at_or_above_source() {
        let w = Waveform::silence(100, 44100);
        assert!(simulate_lr(&w, &DegradeSpec::new(44100, 44100)).is_err());
        assert!(simulate_lr(&w, &DegradeSpec::new(48000, 44100)).is_err());
        assert!(simulate_lr(&w, &DegradeSpec::new(8000, 48000)).is_err());
    }

    #[test]
    fn silence_in_silence_out() {
        let w = Waveform::silence(4410, 44100);
        let lr = simulate_lr(&w, &DegradeSpec::new(8000, 44100)).unwrap();
        assert_eq!(lr.upsampled.len(), 4410);
        assert_eq!(lr.low.sample_rate(), 8000);
        assert!(lr.upsampled.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_rates_are_accepted() {
        let w = Waveform::silence(2000, 44100);
        for khz in [2u32, 4, 8, 12, 16, 24, 32] {
            let lr = simulate_lr(&w, &DegradeSpec::new(khz * 1000, 44100)).unwrap();
            assert_eq!(lr.upsampled.len(), 2000);
        }
    }
}
