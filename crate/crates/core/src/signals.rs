//! Short-time Fourier analysis and synthesis, plus selection of the
//! localization band.
//!
//! Analysis uses a periodic Hann window. Synthesis uses the weighted
//! overlap-add (WOLA) dual of that window, `w(n) / sum_k w(n - kH)^2`, so the
//! product of analysis and synthesis windows overlap-adds to exactly one in
//! the interior of the signal. Frames are taken without edge padding.

use std::f64::consts::PI;
use std::ops::Range;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex;

/// Number of frequency bins in the default localization band (0-4 kHz).
pub const BAND_BINS: usize = 128;

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Framing and band parameters shared by every time-frequency computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub window_len: usize,
    pub hop: usize,
    pub window: Window,
    /// First full-spectrum bin of the localization band (inclusive).
    pub band_lo: usize,
    /// Last full-spectrum bin of the localization band (inclusive).
    pub band_hi: usize,
}

impl Default for StftConfig {
    /// 16 kHz, 32 ms window, 16 ms hop, band = bins 1..=128 (DC dropped).
    fn default() -> Self {
        StftConfig {
            sample_rate: 16_000,
            window_len: 512,
            hop: 256,
            window: Window::Hann,
            band_lo: 1,
            band_hi: BAND_BINS,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid(
                "stft config",
                "sample rate must be positive",
            ));
        }
        if self.window_len < 2 || self.hop == 0 || self.window_len % self.hop != 0 {
            return Err(Error::invalid(
                "stft config",
                format!(
                    "hop {} must divide window length {}",
                    self.hop, self.window_len
                ),
            ));
        }
        if self.hop == self.window_len {
            return Err(Error::invalid("stft config", "frames must overlap"));
        }
        if self.band_lo > self.band_hi || self.band_hi >= self.full_bins() {
            return Err(Error::invalid(
                "stft config",
                format!(
                    "band {}..={} outside 0..{}",
                    self.band_lo,
                    self.band_hi,
                    self.full_bins()
                ),
            ));
        }
        let dev = self.cola_deviation();
        if dev > 1e-10 {
            return Err(Error::invalid(
                "stft config",
                format!(
                    "window is not constant-overlap-add at hop {} ({dev:e})",
                    self.hop
                ),
            ));
        }
        Ok(())
    }

    /// Bins of a full (one-sided) spectrum.
    pub fn full_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// Bins in the localization band, `F`.
    pub fn band_len(&self) -> usize {
        self.band_hi - self.band_lo + 1
    }

    pub fn bin_spacing_hz(&self) -> f64 {
        self.sample_rate as f64 / self.window_len as f64
    }

    /// Centre frequency in Hz of full-spectrum bin `k`.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.bin_spacing_hz()
    }

    /// Frequencies of the band bins, in band order.
    pub fn band_frequencies(&self) -> Vec<f64> {
        (self.band_lo..=self.band_hi)
            .map(|k| self.bin_frequency(k))
            .collect()
    }

    /// Frames produced from `len` samples, or `None` if shorter than a window.
    pub fn num_frames(&self, len: usize) -> Option<usize> {
        (len >= self.window_len).then(|| (len - self.window_len) / self.hop + 1)
    }

    /// Shortest signal length that yields `frames` frames.
    pub fn samples_for_frames(&self, frames: usize) -> usize {
        (frames.max(1) - 1) * self.hop + self.window_len
    }

    /// Samples of an `n_frames` reconstruction covered by every overlapping
    /// frame, where synthesis is exact.
    pub fn interior(&self, n_frames: usize) -> Range<usize> {
        let start = self.window_len - self.hop;
        let end = n_frames * self.hop;
        start..end.max(start)
    }

    pub fn analysis_window(&self) -> Vec<f64> {
        self.window.coefficients(self.window_len)
    }

    /// WOLA dual of the analysis window at this hop.
    pub fn synthesis_window(&self) -> Vec<f64> {
        let w = self.analysis_window();
        let mut norm = vec![0.0; self.hop];
        for (n, &v) in w.iter().enumerate() {
            norm[n % self.hop] += v * v;
        }
        w.iter()
            .enumerate()
            .map(|(n, &v)| v / norm[n % self.hop])
            .collect()
    }

    /// Largest relative deviation from a constant of the overlap-added
    /// analysis window.
    pub fn cola_deviation(&self) -> f64 {
        overlap_add_deviation(&self.analysis_window(), self.hop)
    }

    /// Largest relative deviation from a constant of the overlap-added
    /// product of analysis and synthesis windows.
    pub fn wola_deviation(&self) -> f64 {
        let a = self.analysis_window();
        let s = self.synthesis_window();
        let prod: Vec<f64> = a.iter().zip(&s).map(|(x, y)| x * y).collect();
        overlap_add_deviation(&prod, self.hop)
    }
}

fn overlap_add_deviation(w: &[f64], hop: usize) -> f64 {
    if hop == 0 || hop > w.len() {
        return f64::INFINITY;
    }
    let mut sum = vec![0.0; hop];
    for (n, &v) in w.iter().enumerate() {
        sum[n % hop] += v;
    }
    let mean = sum.iter().sum::<f64>() / hop as f64;
    if mean == 0.0 {
        return f64::INFINITY;
    }
    sum.iter()
        .map(|&s| ((s - mean) / mean).abs())
        .fold(0.0, f64::max)
}

/// Complex multichannel STFT, `channels x frames x bins`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex>,
    channels: usize,
    frames: usize,
    bins: usize,
    band_selected: bool,
    config: StftConfig,
}

impl Spectrogram {
    /// Assemble a spectrogram from raw parts, checking shape and finiteness.
    pub fn from_parts(
        config: StftConfig,
        channels: usize,
        frames: usize,
        band_selected: bool,
        data: Vec<Complex>,
    ) -> Result<Self> {
        config.validate()?;
        let bins = if band_selected {
            config.band_len()
        } else {
            config.full_bins()
        };
        if channels == 0 || frames == 0 {
            return Err(Error::Shape(
                "spectrogram needs at least one channel and frame".into(),
            ));
        }
        if data.len() != channels * frames * bins {
            return Err(Error::Shape(format!(
                "expected {channels}x{frames}x{bins} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("spectrogram", "non-finite entry"));
        }
        Ok(Spectrogram {
            data,
            channels,
            frames,
            bins,
            band_selected,
            config,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn is_band_selected(&self) -> bool {
        self.band_selected
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// Full-spectrum index of the first bin on the frequency axis.
    pub fn first_bin(&self) -> usize {
        if self.band_selected {
            self.config.band_lo
        } else {
            0
        }
    }

    /// Frequency in Hz of local bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.config.bin_frequency(self.first_bin() + k)
    }

    pub fn at(&self, channel: usize, frame: usize, bin: usize) -> Complex {
        self.data[(channel * self.frames + frame) * self.bins + bin]
    }

    /// One frame of one channel.
    pub fn frame(&self, channel: usize, frame: usize) -> &[Complex] {
        let start = (channel * self.frames + frame) * self.bins;
        &self.data[start..start + self.bins]
    }

    /// All frames of one channel, `frames x bins`.
    pub fn channel(&self, channel: usize) -> &[Complex] {
        let len = self.frames * self.bins;
        &self.data[channel * len..(channel + 1) * len]
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex> {
        self.data
    }
}

/// Forward STFT of equal-length channels.
pub fn stft_forward<S: AsRef<[f64]>>(audio: &[S], config: &StftConfig) -> Result<Spectrogram> {
    config.validate()?;
    if audio.is_empty() {
        return Err(Error::Shape("no channels".into()));
    }
    let len = audio[0].as_ref().len();
    if audio.iter().any(|c| c.as_ref().len() != len) {
        return Err(Error::Shape("channels differ in length".into()));
    }
    let frames = config.num_frames(len).ok_or(Error::Length {
        needed: config.window_len,
        got: len,
    })?;
    if audio
        .iter()
        .any(|c| c.as_ref().iter().any(|x| !x.is_finite()))
    {
        return Err(Error::invalid("audio", "non-finite sample"));
    }

    let n = config.window_len;
    let bins = config.full_bins();
    let window = config.analysis_window();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(audio.len() * frames * bins);

    for channel in audio {
        let x = channel.as_ref();
        for frame in 0..frames {
            let start = frame * config.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(x[start + i] * window[i], 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            data.extend_from_slice(&buf[..bins]);
        }
    }

    Ok(Spectrogram {
        data,
        channels: audio.len(),
        frames,
        bins,
        band_selected: false,
        config: config.clone(),
    })
}

/// Weighted overlap-add inverse of [`stft_forward`].
///
/// The output has `(frames - 1) * hop + window_len` samples per channel; only
/// [`StftConfig::interior`] is an exact reconstruction.
pub fn stft_inverse(spec: &Spectrogram) -> Result<Vec<Vec<f64>>> {
    if spec.band_selected {
        return Err(Error::Shape(
            "cannot invert a band-selected spectrogram".into(),
        ));
    }
    let config = &spec.config;
    let n = config.window_len;
    let synth = config.synthesis_window();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let out_len = config.samples_for_frames(spec.frames);
    let scale = 1.0 / n as f64;

    let mut out = Vec::with_capacity(spec.channels);
    for ch in 0..spec.channels {
        let mut y = vec![0.0; out_len];
        for frame in 0..spec.frames {
            let half = spec.frame(ch, frame);
            buf[..half.len()].copy_from_slice(half);
            // Real signal: the upper half is the conjugate mirror.
            for k in half.len()..n {
                buf[k] = half[n - k].conj();
            }
            buf[0].im = 0.0;
            if n % 2 == 0 {
                buf[n / 2].im = 0.0;
            }
            ifft.process_with_scratch(&mut buf, &mut scratch);
            let start = frame * config.hop;
            for (i, b) in buf.iter().enumerate() {
                y[start + i] += b.re * scale * synth[i];
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Keep only the localization band (`band_lo..=band_hi`).
///
/// Retained values are copied unchanged.
pub fn select_band(spec: &Spectrogram) -> Result<Spectrogram> {
    if spec.band_selected {
        return Err(Error::Shape("spectrogram is already band-selected".into()));
    }
    let config = &spec.config;
    let lo = config.band_lo;
    let hi = config.band_hi;
    let mut data = Vec::with_capacity(spec.channels * spec.frames * config.band_len());
    for ch in 0..spec.channels {
        for frame in 0..spec.frames {
            data.extend_from_slice(&spec.frame(ch, frame)[lo..=hi]);
        }
    }
    Ok(Spectrogram {
        data,
        channels: spec.channels,
        frames: spec.frames,
        bins: config.band_len(),
        band_selected: true,
        config: config.clone(),
    })
}
