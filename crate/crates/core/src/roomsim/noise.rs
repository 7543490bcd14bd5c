//! Spherically isotropic (diffuse) binaural noise.
//!
//! Two independent noise channels are analysed with the STFT and mixed per
//! frequency with the Cholesky factor of the 2x2 coherence matrix
//! `[[1, g], [g, 1]]`, `g = sin(2 pi f d / c) / (2 pi f d / c)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::sinc;
use crate::error::{Error, Result};
use crate::signals::{stft_forward, stft_inverse, Spectrogram, StftConfig};
use crate::sources::{normalize_rms, shape_spectrum, speech_like, white_noise};
use crate::{Complex, SOUND_SPEED};

use super::Binaural;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    /// Sum of independent speech-like talkers.
    BabbleProxy,
    /// Pink noise with machine hum and periodic impacts.
    FactoryProxy,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [
        NoiseKind::White,
        NoiseKind::BabbleProxy,
        NoiseKind::FactoryProxy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::BabbleProxy => "babble_proxy",
            NoiseKind::FactoryProxy => "factory_proxy",
        }
    }
}

/// Where the two independent base channels come from.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    Synthetic {
        kind: NoiseKind,
        seed: u64,
    },
    /// Two segments cut at random offsets from a user recording.
    Recording {
        samples: Arc<[f64]>,
        seed: u64,
    },
}

impl NoiseSource {
    fn base_channels(&self, len: usize, fs: f64) -> Result<[Vec<f64>; 2]> {
        match self {
            NoiseSource::Synthetic { kind, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let a = synthetic(*kind, len, fs, &mut rng);
                let b = synthetic(*kind, len, fs, &mut rng);
                Ok([a, b])
            }
            NoiseSource::Recording { samples, seed } => {
                if samples.len() < len {
                    return Err(Error::Length {
                        needed: len,
                        got: samples.len(),
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let span = samples.len() - len;
                let mut cut = || {
                    let off = if span == 0 {
                        0
                    } else {
                        rng.random_range(0..=span)
                    };
                    samples[off..off + len].to_vec()
                };
                Ok([cut(), cut()])
            }
        }
    }
}

fn synthetic(kind: NoiseKind, len: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        NoiseKind::White => white_noise(len, rng),
        NoiseKind::BabbleProxy => {
            let talkers = 6;
            let mut x = vec![0.0; len];
            for _ in 0..talkers {
                for (v, s) in x.iter_mut().zip(speech_like(len, fs, rng)) {
                    *v += s;
                }
            }
            normalize_rms(&mut x);
            x
        }
        NoiseKind::FactoryProxy => {
            let w = white_noise(len, rng);
            let mut x = shape_spectrum(&w, fs, |f| 1.0 / f.max(50.0).sqrt());
            normalize_rms(&mut x);
            let f0 = rng.random_range(80.0..150.0);
            for h in 1..=10 {
                let phase = rng.random_range(0.0..2.0 * PI);
                let amp = 0.5 / h as f64;
                for (t, v) in x.iter_mut().enumerate() {
                    *v += amp * (2.0 * PI * f0 * h as f64 * t as f64 / fs + phase).sin();
                }
            }
            let tau = 0.015 * fs;
            let mut pos = (rng.random_range(0.0..0.2) * fs) as usize;
            while pos < len {
                let level = rng.random_range(2.0..4.0);
                for i in 0..((5.0 * tau) as usize).min(len - pos) {
                    let e: f64 = rng.sample(rand_distr::StandardNormal);
                    x[pos + i] += level * e * (-(i as f64) / tau).exp();
                }
                pos += (rng.random_range(0.15..0.35) * fs) as usize;
            }
            normalize_rms(&mut x);
            x
        }
    }
}

/// Real coherence of a spherically isotropic field between two points `d`
/// metres apart.
pub fn diffuse_coherence(f: f64, d: f64, c: f64) -> f64 {
    sinc(2.0 * PI * f * d / c)
}

/// Two-channel diffuse noise of `len` samples for microphones `mic_distance`
/// metres apart.
pub fn generate_diffuse_noise(
    len: usize,
    mic_distance: f64,
    source: &NoiseSource,
    config: &StftConfig,
) -> Result<Binaural> {
    config.validate()?;
    if !(mic_distance >= 0.0 && mic_distance.is_finite()) {
        return Err(Error::invalid(
            "microphone distance",
            "must be non-negative",
        ));
    }
    if len < config.window_len {
        return Err(Error::Length {
            needed: config.window_len,
            got: len,
        });
    }
    // Pad so the returned span lies in the exactly reconstructed interior.
    let offset = config.window_len;
    let frames = (offset + len).div_ceil(config.hop) + 1;
    let padded = config.samples_for_frames(frames);
    let fs = config.sample_rate as f64;
    let base = source.base_channels(padded, fs)?;

    let spec = stft_forward(&base, config)?;
    let bins = spec.bins();
    let mut mixed = Vec::with_capacity(2 * spec.frames() * bins);
    mixed.extend_from_slice(spec.channel(0));
    let gammas: Vec<(f64, f64)> = (0..bins)
        .map(|k| {
            let g = diffuse_coherence(spec.frequency(k), mic_distance, SOUND_SPEED);
            (g, (1.0 - g * g).max(0.0).sqrt())
        })
        .collect();
    for frame in 0..spec.frames() {
        let n1 = spec.frame(0, frame);
        let n2 = spec.frame(1, frame);
        mixed.extend((0..bins).map(|k| {
            let (g, r) = gammas[k];
            if r == 0.0 {
                n1[k] * g
            } else {
                n1[k] * g + n2[k] * r
            }
        }));
    }
    let mixed: Vec<Complex> = mixed;
    let mixed = Spectrogram::from_parts(config.clone(), 2, spec.frames(), false, mixed)?;
    let mut out = stft_inverse(&mixed)?;
    let ch1 = out.pop().unwrap()[offset..offset + len].to_vec();
    let ch0 = out.pop().unwrap()[offset..offset + len].to_vec();
    Ok([ch0, ch1])
}
