//! Classical estimators working directly on the microphone signals: a
//! cross-PSD DP-RTF estimate over voice-active bins, and GCC-PHAT.

use rustfft::FftPlanner;

use crate::dprtf::{encode_real, DpRtfVec};
use crate::dsp::to_complex;
use crate::error::{Error, Result};
use crate::signals::{select_band, Spectrogram};
use crate::Complex;

/// Default voice-activity threshold below the spectrogram peak, dB.
pub const VAD_THRESHOLD_DB: f64 = 40.0;

/// Binary time-frequency mask, `frames x bins`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfMask {
    frames: usize,
    bins: usize,
    active: Vec<bool>,
}

impl TfMask {
    pub fn new(frames: usize, bins: usize, active: Vec<bool>) -> Result<Self> {
        if active.len() != frames * bins {
            return Err(Error::Shape(format!(
                "mask of {} values for {frames}x{bins}",
                active.len()
            )));
        }
        Ok(TfMask {
            frames,
            bins,
            active,
        })
    }

    pub fn full(frames: usize, bins: usize) -> Self {
        TfMask {
            frames,
            bins,
            active: vec![true; frames * bins],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, frame: usize, bin: usize) -> bool {
        self.active[frame * self.bins + bin]
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Fraction of active bins.
    pub fn density(&self) -> f64 {
        self.count() as f64 / self.active.len().max(1) as f64
    }
}

/// Bins whose channel-averaged log power lies within `threshold_db` of the
/// spectrogram maximum. Silent bins are never active.
pub fn vad_mask(spec: &Spectrogram, threshold_db: f64) -> TfMask {
    let frames = spec.frames();
    let bins = spec.bins();
    let channels = spec.channels() as f64;
    let mut level = vec![0.0; frames * bins];
    for ch in 0..spec.channels() {
        for (l, z) in level.iter_mut().zip(spec.channel(ch)) {
            *l += 10.0 * z.norm_sqr().log10() / channels;
        }
    }
    let peak = level.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let active = level
        .iter()
        .map(|&l| l.is_finite() && l >= peak - threshold_db)
        .collect();
    TfMask {
        frames,
        bins,
        active,
    }
}

/// Encoded DP-RTF estimate with per-bin reliability.
#[derive(Debug, Clone, PartialEq)]
pub struct DpRtfEstimate {
    pub vector: DpRtfVec,
    /// False where no active frame carried energy in the reference channel;
    /// such bins hold the neutral encoding (`R = 1`).
    pub reliable: Vec<bool>,
}

/// Cross-PSD DP-RTF estimate,
/// `R(f) = sum_n m X2 conj(X1) / sum_n m |X1|^2`.
///
/// A full-band spectrogram is band-selected first. With no mask every frame
/// counts.
pub fn estimate_dprtf_cpsd(
    spec: &Spectrogram,
    mask: Option<&TfMask>,
    delta_i_max: f64,
) -> Result<DpRtfEstimate> {
    if spec.channels() < 2 {
        return Err(Error::Shape(format!(
            "need two channels, got {}",
            spec.channels()
        )));
    }
    let selected;
    let spec = if spec.is_band_selected() {
        spec
    } else {
        selected = select_band(spec)?;
        &selected
    };
    let (frames, bins) = (spec.frames(), spec.bins());
    if let Some(m) = mask {
        if m.frames != frames || m.bins != bins {
            return Err(Error::Shape(format!(
                "mask is {}x{}, spectrogram {frames}x{bins}",
                m.frames, m.bins
            )));
        }
    }
    let mut cross = vec![Complex::new(0.0, 0.0); bins];
    let mut power = vec![0.0; bins];
    for n in 0..frames {
        let x1 = spec.frame(0, n);
        let x2 = spec.frame(1, n);
        for f in 0..bins {
            if mask.is_none_or(|m| m.get(n, f)) {
                cross[f] += x2[f] * x1[f].conj();
                power[f] += x1[f].norm_sqr();
            }
        }
    }
    let mut reliable = vec![true; bins];
    let ratio: Vec<Complex> = cross
        .iter()
        .zip(&power)
        .zip(reliable.iter_mut())
        .map(|((c, &p), ok)| {
            let r = c / p;
            if p > 0.0 && r.norm() > 0.0 && r.re.is_finite() && r.im.is_finite() {
                r
            } else {
                *ok = false;
                Complex::new(1.0, 0.0)
            }
        })
        .collect();
    Ok(DpRtfEstimate {
        vector: encode_real(&ratio, delta_i_max)?,
        reliable,
    })
}

/// GCC-PHAT output.
#[derive(Debug, Clone, PartialEq)]
pub struct GccPhat {
    /// Delay of `x2` relative to `x1`, seconds.
    pub tdoa: f64,
    /// Peak lag in samples.
    pub lag: i64,
    /// Correlation for lags `-max_lag..=max_lag`.
    pub curve: Vec<f64>,
}

/// PHAT-weighted cross-correlation. A positive lag means `x2` lags `x1`.
pub fn gcc_phat(x1: &[f64], x2: &[f64], max_lag: usize, fs: f64) -> Result<GccPhat> {
    if x1.len() != x2.len() {
        return Err(Error::Shape("signals differ in length".into()));
    }
    if x1.len() < 2 * max_lag || x1.is_empty() {
        return Err(Error::Length {
            needed: (2 * max_lag).max(1),
            got: x1.len(),
        });
    }
    if x1.iter().all(|&v| v == 0.0) || x2.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("GCC-PHAT input", "all-zero signal"));
    }
    let n = (2 * x1.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut a = to_complex(x1, n);
    let mut b = to_complex(x2, n);
    fft.process(&mut a);
    fft.process(&mut b);
    let mut g: Vec<Complex> = a
        .iter()
        .zip(&b)
        .map(|(a, b)| {
            let c = b * a.conj();
            let m = c.norm();
            if m > 1e-300 {
                c / m
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    planner.plan_fft_inverse(n).process(&mut g);
    let max_lag = max_lag.min(n / 2 - 1);
    let curve: Vec<f64> = (-(max_lag as i64)..=max_lag as i64)
        .map(|lag| g[lag.rem_euclid(n as i64) as usize].re / n as f64)
        .collect();
    let mut best = 0;
    for (i, &c) in curve.iter().enumerate() {
        if c > curve[best] {
            best = i;
        }
    }
    let lag = best as i64 - max_lag as i64;
    Ok(GccPhat {
        tdoa: lag as f64 / fs,
        lag,
        curve,
    })
}

/// Mean squared IID error and mean squared IPD (sin/cos) error over the
/// active bins.
pub fn dprtf_errors(pred: &DpRtfVec, truth: &DpRtfVec, active: &[bool]) -> Result<(f64, f64)> {
    let f = truth.bins();
    if pred.bins() != f || active.len() != f {
        return Err(Error::Shape(format!(
            "bins: pred {}, truth {f}, mask {}",
            pred.bins(),
            active.len()
        )));
    }
    let count = active.iter().filter(|&&a| a).count();
    if count == 0 {
        return Err(Error::Empty("no active bins"));
    }
    let mut iid = 0.0;
    let mut ipd = 0.0;
    for k in (0..f).filter(|&k| active[k]) {
        iid += (pred.iid()[k] - truth.iid()[k]).powi(2);
        ipd += (pred.sin_ipd()[k] - truth.sin_ipd()[k]).powi(2)
            + (pred.cos_ipd()[k] - truth.cos_ipd()[k]).powi(2);
    }
    Ok((iid / count as f64, ipd / (2 * count) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{stft_forward, StftConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        crate::sources::white_noise(len, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn band(x: &[Vec<f64>]) -> Spectrogram {
        select_band(&stft_forward(x, &StftConfig::default()).unwrap()).unwrap()
    }

    #[test]
    fn flat_spectrum_is_fully_active() {
        let c = StftConfig::default();
        let data = vec![Complex::new(2.0, 0.0); 2 * 3 * c.band_len()];
        let spec = Spectrogram::from_parts(c, 2, 3, true, data).unwrap();
        assert_eq!(vad_mask(&spec, 40.0).density(), 1.0);
    }

    #[test]
    fn single_bin_mask() {
        let c = StftConfig::default();
        let mut data = vec![Complex::new(0.0, 0.0); 2 * 3 * c.band_len()];
        data[c.band_len() + 7] = Complex::new(1.0, 0.0);
        data[3 * c.band_len() + c.band_len() + 7] = Complex::new(0.5, 0.5);
        let spec = Spectrogram::from_parts(c, 2, 3, true, data).unwrap();
        let m = vad_mask(&spec, 30.0);
        assert_eq!(m.count(), 1);
        assert!(m.get(1, 7));
    }

    #[test]
    fn silent_input_has_no_active_bins() {
        let spec = band(&[vec![0.0; 4096], vec![0.0; 4096]]);
        assert_eq!(vad_mask(&spec, 40.0).count(), 0);
    }

    #[test]
    fn identical_channels_give_neutral_estimate() {
        let x = noise(8192, 1);
        let spec = band(&[x.clone(), x]);
        let est = estimate_dprtf_cpsd(&spec, None, 20.0).unwrap();
        assert!(est.reliable.iter().all(|&r| r));
        let neutral = DpRtfVec::neutral(128);
        assert!(est.vector.squared_distance(&neutral) < 1e-20);
    }

    #[test]
    fn delayed_channel_phase() {
        let x = noise(16384, 2);
        let mut y = vec![0.0; x.len()];
        y[2..].copy_from_slice(&x[..x.len() - 2]);
        let spec = band(&[x, y]);
        let est = estimate_dprtf_cpsd(&spec, None, 20.0).unwrap();
        for k in 0..128 {
            let f = spec.frequency(k);
            let expected = -2.0 * std::f64::consts::PI * f * 2.0 / 16000.0;
            assert!(
                (est.vector.sin_ipd()[k] - expected.sin()).abs() < 0.02,
                "bin {k}"
            );
            assert!(
                (est.vector.cos_ipd()[k] - expected.cos()).abs() < 0.02,
                "bin {k}"
            );
        }
    }

    #[test]
    fn missing_reference_energy_is_unreliable() {
        let x = noise(4096, 3);
        let spec = band(&[vec![0.0; 4096], x]);
        let est = estimate_dprtf_cpsd(&spec, None, 20.0).unwrap();
        assert!(est.reliable.iter().all(|&r| !r));
        assert_eq!(est.vector, DpRtfVec::neutral(128));
    }

    #[test]
    fn mono_input_is_rejected() {
        let spec = band(&[noise(4096, 4)]);
        assert!(matches!(
            estimate_dprtf_cpsd(&spec, None, 20.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn gcc_phat_integer_shift() {
        let x = noise(4000, 5);
        let mut y = vec![0.0; x.len()];
        y[5..].copy_from_slice(&x[..x.len() - 5]);
        let r = gcc_phat(&x, &y, 20, 16000.0).unwrap();
        assert_eq!(r.lag, 5);
        assert!((r.tdoa - 5.0 / 16000.0).abs() < 1e-15);
        assert_eq!(r.curve.len(), 41);
        assert_eq!(gcc_phat(&y, &x, 20, 16000.0).unwrap().lag, -5);
        assert_eq!(gcc_phat(&x, &x, 20, 16000.0).unwrap().lag, 0);
    }

    #[test]
    fn gcc_phat_rejects_silence() {
        assert!(gcc_phat(&[0.0; 100], &[0.0; 100], 10, 16000.0).is_err());
    }

    #[test]
    fn error_arithmetic() {
        let truth = DpRtfVec::new(vec![0.0, 0.0, 1.0, -1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            dprtf_errors(&truth, &truth, &[true, true]).unwrap(),
            (0.0, 0.0)
        );
        let flipped = DpRtfVec::new(vec![0.0, 0.5, -1.0, -1.0, 0.0, 0.0]).unwrap();
        let (iid, ipd) = dprtf_errors(&flipped, &truth, &[true, true]).unwrap();
        assert!((iid - 0.125).abs() < 1e-15);
        assert!((ipd - 1.0).abs() < 1e-15);
        let (_, ipd) = dprtf_errors(&flipped, &truth, &[true, false]).unwrap();
        assert!((ipd - 2.0).abs() < 1e-15);
        assert!(dprtf_errors(&flipped, &truth, &[false, false]).is_err());
    }
}
