//! Synthetic source and noise signals.
//!
//! The speech-like source is colored Gaussian noise with a -6 dB/octave tilt
//! above 500 Hz, gated by syllable-length on/off envelopes.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::dsp::to_complex;

pub fn white_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Circularly filter `x` with a zero-phase magnitude response `gain(f_hz)`.
pub fn shape_spectrum(x: &[f64], fs: f64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf = to_complex(x, n);
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        *z *= gain(bin as f64 * fs / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

/// Long-term spectral envelope of the speech-like source.
pub fn speech_tilt(f: f64) -> f64 {
    let highpass = (f / 80.0).min(1.0);
    let tilt = if f > 500.0 { 500.0 / f } else { 1.0 };
    highpass * tilt
}

/// Speech-like burst sequence of unit RMS.
pub fn speech_like<R: Rng + ?Sized>(len: usize, fs: f64, rng: &mut R) -> Vec<f64> {
    let noise = white_noise(len, rng);
    let mut x = shape_spectrum(&noise, fs, speech_tilt);
    let envelope = syllable_envelope(len, fs, rng);
    for (v, e) in x.iter_mut().zip(&envelope) {
        *v *= e;
    }
    normalize_rms(&mut x);
    x
}

/// Alternating on (80-300 ms) and off (30-150 ms) segments with 10 ms
/// raised-cosine ramps. Always starts with an on segment.
fn syllable_envelope<R: Rng + ?Sized>(len: usize, fs: f64, rng: &mut R) -> Vec<f64> {
    let mut env = vec![0.0; len];
    let ramp = ((0.010 * fs) as usize).max(1);
    let mut pos = 0usize;
    while pos < len {
        let on = (rng.random_range(0.080..0.300) * fs) as usize;
        let level = rng.random_range(0.3..1.0);
        let end = (pos + on).min(len);
        for (i, e) in env[pos..end].iter_mut().enumerate() {
            let from_start = i;
            let to_end = on - 1 - i;
            let r = from_start.min(to_end);
            let g = if r < ramp {
                0.5 - 0.5 * (std::f64::consts::PI * (r as f64 + 0.5) / ramp as f64).cos()
            } else {
                1.0
            };
            *e = level * g;
        }
        let off = (rng.random_range(0.030..0.150) * fs) as usize;
        pos = end + off;
    }
    env
}

pub(crate) fn normalize_rms(x: &mut [f64]) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        for v in x.iter_mut() {
            *v /= rms;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn speech_like_is_deterministic_and_normalized() {
        let a = speech_like(8192, 16000.0, &mut ChaCha8Rng::seed_from_u64(3));
        let b = speech_like(8192, 16000.0, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let p = a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64;
        assert!((p - 1.0).abs() < 1e-9);
        assert!(a[..100].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn shaping_with_unit_gain_is_identity() {
        let x = white_noise(1000, &mut ChaCha8Rng::seed_from_u64(1));
        let y = shape_spectrum(&x, 16000.0, |_| 1.0);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
