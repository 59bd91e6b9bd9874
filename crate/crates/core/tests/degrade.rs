use std::f64::consts::PI;

use nvsr_core::degrade::{simulate_lr, DegradeSpec};
use nvsr_core::resample::resample_poly;
use nvsr_core::{StftPlan, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sine(hz: f64, secs: f64, sr: u32) -> Waveform {
    let n = (secs * sr as f64) as usize;
    Waveform::new(
        (0..n).map(|i| (2.0 * PI * hz * i as f64 / sr as f64).sin()).collect(),
        sr,
    )
    .unwrap()
}

/// Least-squares amplitude of a `hz` sinusoid over the middle half of `x`.
fn amplitude(x: &[f64], hz: f64, sr: u32) -> f64 {
    let (lo, hi) = (x.len() / 4, 3 * x.len() / 4);
    let (mut s, mut c) = (0.0, 0.0);
    for (n, v) in x.iter().enumerate().take(hi).skip(lo) {
        let ph = 2.0 * PI * hz * n as f64 / sr as f64;
        s += v * ph.sin();
        c += v * ph.cos();
    }
    2.0 * (s * s + c * c).sqrt() / (hi - lo) as f64
}

#[test]
fn passband_gain_within_a_tenth_of_a_db() {
    for (from, to) in [(44100, 8000), (8000, 44100), (44100, 16000), (16000, 44100), (48000, 44100)] {
        let nyq = from.min(to) as f64 / 2.0;
        for frac in [0.1, 0.25, 0.4, 0.6] {
            let hz = frac * nyq;
            let y = resample_poly(&sine(hz, 1.0, from), to).unwrap();
            let db = 20.0 * amplitude(y.samples(), hz, to).log10();
            assert!(db.abs() < 0.1, "{from}->{to} at {hz} Hz: {db:.3} dB");
        }
    }
}

#[test]
fn round_trip_sinusoid_correlates() {
    let x = sine(1000.0, 1.0, 44100);
    let down = resample_poly(&x, 8000).unwrap();
    assert_eq!(down.len(), 8000);
    let back = resample_poly(&down, 44100).unwrap();
    assert_eq!(back.len(), x.len());
    let (a, b) = (&x.samples()[2000..42000], &back.samples()[2000..42000]);
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na: f64 = a.iter().map(|v| v * v).sum();
    let nb: f64 = b.iter().map(|v| v * v).sum();
    let r = dot / (na * nb).sqrt();
    assert!(r >= 0.999, "{r}");
}

#[test]
fn simulated_pair_lengths_and_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for len in [0usize, 1, 440, 44100, 51234] {
        let y = Waveform::new((0..len).map(|_| rng.gen_range(-0.5..0.5)).collect(), 44100).unwrap();
        for l in [2000, 12000, 32000] {
            let lr = simulate_lr(&y, &DegradeSpec::new(l, 44100)).unwrap();
            assert_eq!(lr.upsampled.len(), len);
            assert_eq!(lr.upsampled.sample_rate(), 44100);
            assert_eq!(lr.low.sample_rate(), l);
            assert_eq!(lr.low.len(), ((len as f64) * l as f64 / 44100.0).round() as usize);
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y = Waveform::new((0..20000).map(|_| rng.gen_range(-0.5..0.5)).collect(), 44100).unwrap();
    let spec = DegradeSpec::new(12000, 44100);
    let a = simulate_lr(&y, &spec).unwrap();
    let b = simulate_lr(&y, &spec).unwrap();
    assert_eq!(a.low, b.low);
    assert_eq!(a.upsampled, b.upsampled);
}

#[test]
fn white_noise_at_8k_is_band_limited() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y = Waveform::new((0..88200).map(|_| rng.gen_range(-0.5..0.5)).collect(), 44100).unwrap();
    let x = simulate_lr(&y, &DegradeSpec::new(8000, 44100)).unwrap().upsampled;
    let plan = StftPlan::new(2048, 441, 44100).unwrap();
    let m = plan.analyze(x.samples()).magnitude();
    let (mut below, mut above) = (0.0, 0.0);
    for t in 0..m.frames() {
        for k in 0..m.n_bins() {
            let hz = m.framing.bin_hz(k);
            let e = m.get(t, k).powi(2);
            if hz < 3600.0 {
                below += e;
            } else if hz > 4400.0 {
                above += e;
            }
        }
    }
    let db = 10.0 * (below / above).log10();
    assert!(db >= 40.0, "{db:.1} dB");
}

#[test]
fn zero_phase_variant_has_no_delay() {
    let x = sine(500.0, 0.5, 44100);
    let mut spec = DegradeSpec::new(8000, 44100);
    spec.zero_phase = true;
    let y = simulate_lr(&x, &spec).unwrap().upsampled;
    let mid = &y.samples()[5000..17000];
    let orig = &x.samples()[5000..17000];
    let err = mid.iter().zip(orig).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 0.02, "{err}");
}
