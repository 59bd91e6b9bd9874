//! Mel-to-waveform synthesis. The reference vocoder inverts the mel projection with
//! non-negative least squares and recovers phase with fast Griffin-Lim.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::config::SAMPLE_RATE;
use crate::error::{invalid, Error, Result};
use crate::mel::{mel_pseudo_inverse, MelFilterbank, MelScale, MelSpectrogram};
use crate::signal::Waveform;
use crate::stft::{ComplexSpectrogram, MagSpectrogram, StftPlan};

/// Peak ceiling applied to synthesized audio.
pub const PEAK_LIMIT: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocoderConfig {
    pub gl_iterations: usize,
    /// Fast Griffin-Lim momentum, in `[0, 1)`.
    pub momentum: f64,
    pub output_rate: u32,
}

impl Default for VocoderConfig {
    fn default() -> Self {
        Self {
            gl_iterations: 32,
            momentum: 0.99,
            output_rate: SAMPLE_RATE,
        }
    }
}

impl VocoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid(alloc::format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        if self.output_rate == 0 {
            return Err(invalid("output rate must be positive"));
        }
        Ok(())
    }
}

/// How a vocoder produces audio; recorded alongside evaluation results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocoderKind {
    /// Deterministic in-process mel inversion.
    Reference,
    /// Out-of-process model reached through a bridge.
    External,
}

pub trait Vocoder: Send + Sync {
    fn name(&self) -> &str;

    fn kind(&self) -> VocoderKind;

    fn synthesize(&self, mel: &MelSpectrogram) -> Result<Waveform>;
}

/// Fast Griffin-Lim phase reconstruction for a fixed STFT plan.
#[derive(Debug, Clone)]
pub struct GriffinLim {
    plan: StftPlan,
}

/// Output of [`GriffinLim::run_traced`].
#[derive(Debug, Clone)]
pub struct GriffinLimTrace {
    pub waveform: Vec<f64>,
    /// Spectral convergence after 0, 1, ..., n iterations.
    pub convergence: Vec<f64>,
}

impl GriffinLim {
    pub fn new(plan: StftPlan) -> Self {
        Self { plan }
    }

    pub fn run(&self, mag: &MagSpectrogram, iterations: usize, momentum: f64) -> Result<Vec<f64>> {
        self.iterate(mag, iterations, momentum, None)
    }

    pub fn run_traced(
        &self,
        mag: &MagSpectrogram,
        iterations: usize,
        momentum: f64,
    ) -> Result<GriffinLimTrace> {
        let mut convergence = Vec::with_capacity(iterations + 1);
        let waveform = self.iterate(mag, iterations, momentum, Some(&mut convergence))?;
        let rebuilt = self.plan.analyze(&waveform);
        convergence.push(spectral_convergence(&rebuilt, mag));
        Ok(GriffinLimTrace {
            waveform,
            convergence,
        })
    }

    fn iterate(
        &self,
        mag: &MagSpectrogram,
        iterations: usize,
        momentum: f64,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<Vec<f64>> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(invalid("momentum must lie in [0, 1)"));
        }
        let framing = mag.framing;
        let frames = mag.frames();
        let mut angles = alloc::vec![Complex64::new(1.0, 0.0); mag.as_slice().len()];
        let mut prev = alloc::vec![Complex64::new(0.0, 0.0); angles.len()];
        let blend = momentum / (1.0 + momentum);
        let build = |angles: &[Complex64]| -> Result<ComplexSpectrogram> {
            let bins = mag
                .as_slice()
                .iter()
                .zip(angles)
                .map(|(&m, &a)| a * m)
                .collect();
            ComplexSpectrogram::from_bins(framing, frames, bins)
        };
        for _ in 0..iterations {
            let signal = self.plan.synthesize(&build(&angles)?)?;
            let rebuilt = self.plan.analyze(&signal);
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(spectral_convergence(&rebuilt, mag));
            }
            for ((a, p), &r) in angles.iter_mut().zip(prev.iter_mut()).zip(rebuilt.as_slice()) {
                let v = r - *p * blend;
                let n = v.norm();
                *a = if n > 1e-16 { v / n } else { Complex64::new(1.0, 0.0) };
                *p = r;
            }
        }
        self.plan.synthesize(&build(&angles)?)
    }
}

/// `‖|S| − M‖_F / ‖M‖_F`, or the plain norm of `|S|` when `M` is zero.
pub fn spectral_convergence(spec: &ComplexSpectrogram, target: &MagSpectrogram) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (s, &m) in spec.as_slice().iter().zip(target.as_slice()) {
        let d = s.norm() - m;
        num += d * d;
        den += m * m;
    }
    if den > 0.0 {
        libm::sqrt(num / den)
    } else {
        libm::sqrt(num)
    }
}

/// Griffin-Lim on `mag` using its own framing.
pub fn griffin_lim(mag: &MagSpectrogram, iterations: usize, momentum: f64) -> Result<Waveform> {
    let f = mag.framing;
    let plan = StftPlan::new(f.window_len, f.hop, f.sample_rate)?;
    let samples = GriffinLim::new(plan).run(mag, iterations, momentum)?;
    Waveform::new(samples, f.sample_rate)
}

/// Reference vocoder: NNLS mel inversion, Griffin-Lim, peak limiting.
#[derive(Debug, Clone)]
pub struct ReferenceVocoder {
    config: VocoderConfig,
    filterbank: MelFilterbank,
    gl: GriffinLim,
    hop: usize,
}

impl ReferenceVocoder {
    pub fn new(config: VocoderConfig, filterbank: MelFilterbank, hop: usize) -> Result<Self> {
        config.validate()?;
        if filterbank.sample_rate() != config.output_rate {
            return Err(invalid("filterbank rate differs from the vocoder output rate"));
        }
        let plan = StftPlan::new(filterbank.window_len(), hop, config.output_rate)?;
        Ok(Self {
            config,
            filterbank,
            gl: GriffinLim::new(plan),
            hop,
        })
    }

    pub fn config(&self) -> &VocoderConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }
}

impl Vocoder for ReferenceVocoder {
    fn name(&self) -> &str {
        "griffin-lim"
    }

    fn kind(&self) -> VocoderKind {
        VocoderKind::Reference
    }

    fn synthesize(&self, mel: &MelSpectrogram) -> Result<Waveform> {
        if mel.scale != MelScale::Linear {
            return Err(invalid("vocoder expects linear-scale mel energies"));
        }
        if mel.as_slice().iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("mel spectrogram"));
        }
        let f = mel.framing;
        if f.hop != self.hop
            || f.window_len != self.filterbank.window_len()
            || f.sample_rate != self.config.output_rate
        {
            return Err(invalid("mel framing differs from the vocoder configuration"));
        }
        let mag = mel_pseudo_inverse(mel, &self.filterbank)?;
        let mut samples = self
            .gl
            .run(&mag, self.config.gl_iterations, self.config.momentum)?;
        let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if peak > PEAK_LIMIT {
            let g = PEAK_LIMIT / peak;
            samples.iter_mut().for_each(|s| *s *= g);
        }
        Waveform::new(samples, self.config.output_rate)
    }
}
