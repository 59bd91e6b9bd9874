use nvsr::corpus::speech_like;
use nvsr_core::config::{HOP, WINDOW_LEN};
use nvsr_core::degrade::{simulate_lr, DegradeSpec};
use nvsr_core::metrics::lsd_waveforms;
use nvsr_core::vocoder::ReferenceVocoder;
use nvsr_core::{build_filterbank, mel_transform, StftPlan, Vocoder, VocoderConfig};

#[test]
fn speech_mel_round_trip() {
    let fb = build_filterbank(44100, WINDOW_LEN, 128, 0.0, 22050.0).unwrap();
    let voc = ReferenceVocoder::new(VocoderConfig::default(), fb.clone(), HOP).unwrap();
    let plan = StftPlan::new(WINDOW_LEN, HOP, 44100).unwrap();
    for seed in 0..3 {
        let clean = speech_like(seed, 1.5, 44100);
        let mel = mel_transform(&plan.analyze(clean.samples()).magnitude(), &fb).unwrap();
        let out = voc.synthesize(&mel).unwrap();
        assert_eq!(out.len(), clean.len());
        assert_eq!(out, voc.synthesize(&mel).unwrap());

        let again = mel_transform(&plan.analyze(out.samples()).magnitude(), &fb).unwrap();
        let num: f64 = again.as_slice().iter().zip(mel.as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = mel.as_slice().iter().map(|b| b * b).sum();
        let rel = (num / den).sqrt();
        assert!(rel < 0.35, "mel consistency {rel}");

        let degraded = simulate_lr(&clean, &DegradeSpec::new(4000, 44100)).unwrap().upsampled;
        let synth = lsd_waveforms(&clean, &out).unwrap();
        let base = lsd_waveforms(&clean, &degraded).unwrap();
        assert!(synth < base, "{synth} vs {base}");
    }
}
