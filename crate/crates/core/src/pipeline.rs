//! End-to-end super-resolution: upsample, mel analysis, mel bandwidth extension, vocoder
//! synthesis, and lower-frequencies replacement.

use alloc::boxed::Box;

use crate::config::{HOP, SAMPLE_RATE, WINDOW_LEN};
use crate::error::{invalid, Error, Result};
use crate::mel::{mel_transform, MelConfig, MelFilterbank, MelSpectrogram};
use crate::melbwe::{
    build_mask, detect_cutoff, validate_prediction, IdentityPredictor, MelPredictor,
    PadPredictor, DEFAULT_THRESHOLD_DB,
};
use crate::resample::resample_poly;
use crate::signal::Waveform;
use crate::stft::StftPlan;
use crate::vocoder::{ReferenceVocoder, Vocoder, VocoderConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorChoice {
    /// Replication padding.
    Pad,
    /// Out-of-process predictor supplied through [`Pipeline::with_predictor`].
    External,
    /// Mel passed to the vocoder unchanged.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub predictor: PredictorChoice,
    pub vocoder: VocoderConfig,
    /// Lower-frequencies replacement after synthesis.
    pub postproc: bool,
    /// Cutoff in Hz used instead of the known input rate or detection.
    pub cutoff_override_hz: Option<f64>,
    pub threshold_db: f64,
    pub max_duration_secs: f64,
    /// Blend 3 bins above the replacement boundary instead of a hard switch.
    pub lfr_crossfade: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            predictor: PredictorChoice::Pad,
            vocoder: VocoderConfig::default(),
            postproc: true,
            cutoff_override_hz: None,
            threshold_db: DEFAULT_THRESHOLD_DB,
            max_duration_secs: 600.0,
            lfr_crossfade: false,
        }
    }
}

/// Where the cutoff used by a run came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffSource {
    Override,
    InputRate,
    Detected,
    /// Detection on an all-silent input; full band assumed.
    Silent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedCutoff {
    pub band: usize,
    pub hz: f64,
    pub source: CutoffSource,
}

/// Intermediate products of one [`Pipeline::run`].
#[derive(Debug, Clone)]
pub struct NvsrRun {
    pub output: Waveform,
    /// Input at the pipeline rate.
    pub upsampled: Waveform,
    pub input_mel: MelSpectrogram,
    pub predicted_mel: MelSpectrogram,
    pub cutoff: ResolvedCutoff,
}

pub struct Pipeline {
    config: PipelineConfig,
    filterbank: MelFilterbank,
    plan: StftPlan,
    predictor: Box<dyn MelPredictor>,
    vocoder: Box<dyn Vocoder>,
}

impl core::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .field("predictor", &self.predictor.name())
            .field("vocoder", &self.vocoder.name())
            .finish()
    }
}

impl Pipeline {
    /// Pipeline with the reference vocoder and a built-in predictor.
    pub fn new(config: PipelineConfig) -> Result<Self> {
        let predictor: Box<dyn MelPredictor> = match config.predictor {
            PredictorChoice::Pad => Box::new(PadPredictor),
            PredictorChoice::None => Box::new(IdentityPredictor),
            PredictorChoice::External => {
                return Err(invalid(
                    "external predictor requires a bridge; construct with Pipeline::with_predictor",
                ))
            }
        };
        Self::with_predictor(config, predictor)
    }

    pub fn with_predictor(config: PipelineConfig, predictor: Box<dyn MelPredictor>) -> Result<Self> {
        let filterbank = MelFilterbank::new(MelConfig::reference(SAMPLE_RATE), SAMPLE_RATE, WINDOW_LEN)?;
        let vocoder = Box::new(ReferenceVocoder::new(config.vocoder, filterbank.clone(), HOP)?);
        Self::with_parts(config, predictor, vocoder)
    }

    pub fn with_parts(
        config: PipelineConfig,
        predictor: Box<dyn MelPredictor>,
        vocoder: Box<dyn Vocoder>,
    ) -> Result<Self> {
        if let Some(hz) = config.cutoff_override_hz {
            if !(hz > 0.0 && hz <= SAMPLE_RATE as f64 / 2.0) {
                return Err(invalid(alloc::format!("cutoff override {hz} Hz out of range")));
            }
        }
        if !(config.max_duration_secs > 0.0) {
            return Err(invalid("duration cap must be positive"));
        }
        let filterbank = MelFilterbank::new(MelConfig::reference(SAMPLE_RATE), SAMPLE_RATE, WINDOW_LEN)?;
        Ok(Self {
            config,
            filterbank,
            plan: StftPlan::new(WINDOW_LEN, HOP, SAMPLE_RATE)?,
            predictor,
            vocoder,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn plan(&self) -> &StftPlan {
        &self.plan
    }

    pub fn predictor_name(&self) -> &str {
        self.predictor.name()
    }

    pub fn vocoder(&self) -> &dyn Vocoder {
        self.vocoder.as_ref()
    }

    /// Brings `x` to the pipeline rate. Returns the known band limit when the input rate
    /// was below it.
    pub fn upsample(&self, x: &Waveform) -> Result<(Waveform, Option<f64>)> {
        if x.sample_rate() == SAMPLE_RATE {
            return Ok((x.clone(), None));
        }
        let known = (x.sample_rate() < SAMPLE_RATE).then(|| x.sample_rate() as f64 / 2.0);
        Ok((resample_poly(x, SAMPLE_RATE)?, known))
    }

    /// Linear mel spectrogram of a pipeline-rate waveform.
    pub fn mel(&self, x: &Waveform) -> Result<MelSpectrogram> {
        if x.sample_rate() != SAMPLE_RATE {
            return Err(invalid("mel analysis expects pipeline-rate audio"));
        }
        mel_transform(&self.plan.analyze(x.samples()).magnitude(), &self.filterbank)
    }

    pub fn resolve_cutoff(&self, mel: &MelSpectrogram, known_hz: Option<f64>) -> Result<ResolvedCutoff> {
        let (hz, source) = match (self.config.cutoff_override_hz, known_hz) {
            (Some(hz), _) => (hz, CutoffSource::Override),
            (None, Some(hz)) => (hz, CutoffSource::InputRate),
            (None, None) => {
                if mel.frames() == 0 {
                    let band = self.filterbank.n_mels() - 1;
                    return Ok(ResolvedCutoff {
                        band,
                        hz: SAMPLE_RATE as f64 / 2.0,
                        source: CutoffSource::Silent,
                    });
                }
                let c = detect_cutoff(mel, self.config.threshold_db)?;
                let (hz, source) = if c.silent_input || c.band + 1 == self.filterbank.n_mels() {
                    (SAMPLE_RATE as f64 / 2.0, if c.silent_input { CutoffSource::Silent } else { CutoffSource::Detected })
                } else {
                    (self.filterbank.center_hz(c.band), CutoffSource::Detected)
                };
                return Ok(ResolvedCutoff {
                    band: c.band,
                    hz,
                    source,
                });
            }
        };
        Ok(ResolvedCutoff {
            band: self.filterbank.band_below(hz),
            hz,
            source,
        })
    }

    /// Vocoder synthesis of `mel` followed, when enabled, by replacing the output's low band
    /// with `reference`'s.
    pub fn render(&self, mel: &MelSpectrogram, reference: &Waveform, cutoff_hz: f64) -> Result<Waveform> {
        let voc = self.vocoder.synthesize(mel)?.fit_to_len(reference.len());
        if !self.config.postproc {
            return Ok(voc);
        }
        lfr_with_plan(&self.plan, &voc, reference, cutoff_hz, self.config.lfr_crossfade)
    }

    pub fn run(&self, x: &Waveform) -> Result<NvsrRun> {
        let secs = x.duration_secs();
        if secs > self.config.max_duration_secs {
            return Err(Error::TooLong {
                seconds: secs,
                cap: self.config.max_duration_secs,
            });
        }
        let (upsampled, known) = self.upsample(x)?;
        let input_mel = self.mel(&upsampled)?;
        let cutoff = self.resolve_cutoff(&input_mel, known)?;
        if upsampled.is_empty() {
            return Ok(NvsrRun {
                output: upsampled.clone(),
                predicted_mel: input_mel.clone(),
                upsampled,
                input_mel,
                cutoff,
            });
        }
        let mask = build_mask(cutoff.band, input_mel.frames(), input_mel.n_mels())?;
        let predicted_mel = self.predictor.predict(&input_mel, &mask)?;
        validate_prediction(&input_mel, &predicted_mel)?;
        let predicted_mel = predicted_mel.to_linear();
        let output = self.render(&predicted_mel, &upsampled, cutoff.hz)?;
        Ok(NvsrRun {
            output,
            upsampled,
            input_mel,
            predicted_mel,
            cutoff,
        })
    }

    pub fn nvsr(&self, x: &Waveform) -> Result<Waveform> {
        Ok(self.run(x)?.output)
    }
}

/// Lower-frequencies replacement: STFT bins strictly below `cutoff_hz` come from
/// `original`, the rest from `vocoder_out`. A cutoff at Nyquist takes every bin from
/// `original`.
pub fn lfr_postprocess(vocoder_out: &Waveform, original: &Waveform, cutoff_hz: f64) -> Result<Waveform> {
    let plan = StftPlan::new(WINDOW_LEN, HOP, original.sample_rate())?;
    lfr_with_plan(&plan, vocoder_out, original, cutoff_hz, false)
}

pub fn lfr_with_plan(
    plan: &StftPlan,
    vocoder_out: &Waveform,
    original: &Waveform,
    cutoff_hz: f64,
    crossfade: bool,
) -> Result<Waveform> {
    if vocoder_out.sample_rate() != original.sample_rate() {
        return Err(invalid("vocoder output and original differ in sample rate"));
    }
    let nyquist = original.sample_rate() as f64 / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz <= nyquist) {
        return Err(invalid(alloc::format!(
            "replacement cutoff {cutoff_hz} Hz outside (0, {nyquist}]"
        )));
    }
    let voc = vocoder_out.clone().fit_to_len(original.len());
    let orig = plan.analyze(original.samples());
    let mut mixed = plan.analyze(voc.samples());
    let framing = orig.framing;
    let bins = framing.bins();
    let boundary = if cutoff_hz >= nyquist {
        bins
    } else {
        (0..bins).find(|&k| framing.bin_hz(k) >= cutoff_hz).unwrap_or(bins)
    };
    const FADE: usize = 3;
    for t in 0..orig.frames() {
        let src = orig.frame(t);
        let dst = mixed.frame_mut(t);
        dst[..boundary].copy_from_slice(&src[..boundary]);
        if crossfade {
            for j in 0..FADE {
                let k = boundary + j;
                if k >= bins {
                    break;
                }
                let w = 1.0 - (j + 1) as f64 / (FADE + 1) as f64;
                dst[k] = src[k] * w + dst[k] * (1.0 - w);
            }
        }
    }
    Waveform::new(plan.synthesize(&mixed)?, original.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::lsd_with_plan;
    use alloc::vec::Vec;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn harmonic(seed: u64, len: usize) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f0 = rng.gen_range(100.0..200.0);
        let samples = (0..len)
            .map(|n| {
                let t = n as f64 / SAMPLE_RATE as f64;
                let voiced: f64 = (1..40)
                    .map(|h| libm::sin(2.0 * PI * f0 * h as f64 * t + h as f64) / h as f64)
                    .sum();
                0.2 * voiced + 0.01 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        Waveform::new(samples, SAMPLE_RATE).unwrap()
    }

    #[test]
    fn lfr_at_nyquist_reconstructs_original() {
        let orig = harmonic(1, 22050);
        let voc = harmonic(2, 22050);
        let out = lfr_postprocess(&voc, &orig, 22050.0).unwrap();
        let err = out.samples()[WINDOW_LEN..22050 - WINDOW_LEN]
            .iter()
            .zip(&orig.samples()[WINDOW_LEN..22050 - WINDOW_LEN])
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn lfr_near_zero_keeps_vocoder_output() {
        let orig = harmonic(3, 22050);
        let voc = harmonic(4, 22050);
        let out = lfr_postprocess(&voc, &orig, 1.0).unwrap();
        let err = out.samples()[WINDOW_LEN..22050 - WINDOW_LEN]
            .iter()
            .zip(&voc.samples()[WINDOW_LEN..22050 - WINDOW_LEN])
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max);
        assert!(err < 1e-3 * voc.peak(), "{err}");
    }

    #[test]
    fn lfr_rejects_bad_cutoffs_and_rates() {
        let a = harmonic(5, 4410);
        for hz in [0.0, -5.0, 22050.5, f64::NAN] {
            assert!(lfr_postprocess(&a, &a, hz).is_err(), "{hz}");
        }
        let other = Waveform::new(a.samples().to_vec(), 22050).unwrap();
        assert!(lfr_postprocess(&other, &a, 1000.0).is_err());
    }

    #[test]
    fn lfr_pads_short_vocoder_output() {
        let orig = harmonic(6, 8820);
        let voc = harmonic(7, 8000);
        assert_eq!(lfr_postprocess(&voc, &orig, 4000.0).unwrap().len(), 8820);
    }

    #[test]
    fn silence_in_silence_out() {
        let p = Pipeline::new(PipelineConfig::default()).unwrap();
        let x = Waveform::silence(8000, 16000);
        let out = p.nvsr(&x).unwrap();
        assert_eq!(out.sample_rate(), SAMPLE_RATE);
        assert_eq!(out.len(), 22050);
        assert!(out.peak() < 1e-9, "{}", out.peak());
        let run = p.run(&Waveform::silence(4410, SAMPLE_RATE)).unwrap();
        assert_eq!(run.cutoff.source, CutoffSource::Silent);
        assert!(run.output.peak() < 1e-9);
    }

    #[test]
    fn empty_in_empty_out() {
        let p = Pipeline::new(PipelineConfig::default()).unwrap();
        let out = p.nvsr(&Waveform::silence(0, 8000)).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.sample_rate(), SAMPLE_RATE);
    }

    #[test]
    fn too_long_is_rejected() {
        let p = Pipeline::new(PipelineConfig {
            max_duration_secs: 0.5,
            ..PipelineConfig::default()
        })
        .unwrap();
        assert!(matches!(
            p.nvsr(&Waveform::silence(4001, 8000)),
            Err(Error::TooLong { .. })
        ));
    }

    #[test]
    fn construction_checks() {
        let external = PipelineConfig {
            predictor: PredictorChoice::External,
            ..PipelineConfig::default()
        };
        assert!(Pipeline::new(external).is_err());
        for hz in [0.0, 30000.0] {
            let cfg = PipelineConfig {
                cutoff_override_hz: Some(hz),
                ..PipelineConfig::default()
            };
            assert!(Pipeline::new(cfg).is_err());
        }
    }

    #[test]
    fn cutoff_precedence() {
        let p = Pipeline::new(PipelineConfig::default()).unwrap();
        let full = harmonic(8, 8820);
        let mel = p.mel(&full).unwrap();
        let known = p.resolve_cutoff(&mel, Some(4000.0)).unwrap();
        assert_eq!(known.source, CutoffSource::InputRate);
        assert_eq!(known.hz, 4000.0);
        assert_eq!(known.band, p.filterbank().band_below(4000.0));
        let detected = p.resolve_cutoff(&mel, None).unwrap();
        assert_eq!(detected.source, CutoffSource::Detected);

        let o = Pipeline::new(PipelineConfig {
            cutoff_override_hz: Some(3000.0),
            ..PipelineConfig::default()
        })
        .unwrap();
        let over = o.resolve_cutoff(&mel, Some(4000.0)).unwrap();
        assert_eq!((over.source, over.hz), (CutoffSource::Override, 3000.0));
    }

    #[test]
    fn identity_path_sits_at_vocoder_floor() {
        let clean = harmonic(10, 22050);
        let none = Pipeline::new(PipelineConfig {
            predictor: PredictorChoice::None,
            postproc: false,
            ..PipelineConfig::default()
        })
        .unwrap();
        let out = none.nvsr(&clean).unwrap();
        let voc = ReferenceVocoder::new(
            VocoderConfig::default(),
            MelFilterbank::new(MelConfig::reference(SAMPLE_RATE), SAMPLE_RATE, WINDOW_LEN).unwrap(),
            HOP,
        )
        .unwrap();
        let floor_out = voc.synthesize(&none.mel(&clean).unwrap()).unwrap();
        let floor = lsd_with_plan(none.plan(), &clean, &floor_out).unwrap();
        let got = lsd_with_plan(none.plan(), &clean, &out).unwrap();
        assert!(got <= floor, "{got} > {floor}");
    }

    #[test]
    fn crossfade_only_touches_boundary_bins() {
        let orig = harmonic(11, 8820);
        let voc = harmonic(12, 8820);
        let plan = StftPlan::new(WINDOW_LEN, HOP, SAMPLE_RATE).unwrap();
        let hard = lfr_with_plan(&plan, &voc, &orig, 4000.0, false).unwrap();
        let soft = lfr_with_plan(&plan, &voc, &orig, 4000.0, true).unwrap();
        assert_ne!(hard, soft);
        let diff: Vec<f64> = hard.samples().iter().zip(soft.samples()).map(|(a, b)| a - b).collect();
        let d = plan.analyze(&diff).magnitude();
        let f = d.framing;
        let (mut low, mut total) = (0.0, 0.0);
        // edge frames are dominated by the overlap-add normalization
        for t in 6..d.frames() - 6 {
            for k in 0..d.n_bins() {
                let e = d.get(t, k) * d.get(t, k);
                total += e;
                if f.bin_hz(k) < 3500.0 {
                    low += e;
                }
            }
        }
        assert!(low < 1e-4 * total, "{low} / {total}");
    }
}
