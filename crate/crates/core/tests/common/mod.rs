//! Independent measurement oracles shared by the integration tests.
#![allow(dead_code)]

use rustfft::{num_complex::Complex64, FftPlanner};

/// Schroeder energy decay curve in dB (0 dB at t = 0) of the summed energy
/// of all channels.
pub fn schroeder_edc_db(channels: &[&[f64]]) -> Vec<f64> {
    let len = channels.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut energy = vec![0.0; len];
    for c in channels {
        for (e, v) in energy.iter_mut().zip(c.iter()) {
            *e += v * v;
        }
    }
    let mut edc = vec![0.0; len];
    let mut acc = 0.0;
    for i in (0..len).rev() {
        acc += energy[i];
        edc[i] = acc;
    }
    let total = edc[0];
    edc.iter().map(|&e| 10.0 * (e / total).log10()).collect()
}

/// Reverberation time from a least-squares line through the decay curve
/// between `hi_db` and `lo_db` (e.g. -5 and -35 for T30), extrapolated to
/// -60 dB.
pub fn rt60_from_edc(edc_db: &[f64], fs: f64, hi_db: f64, lo_db: f64) -> f64 {
    let pts: Vec<(f64, f64)> = edc_db
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= hi_db && d >= lo_db)
        .map(|(i, &d)| (i as f64 / fs, d))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -60.0 / (sxy / sxx)
}

/// Welch estimate of the real part of the complex coherence between two
/// signals, Hann segments of `nfft` with 50% overlap. Returns
/// `(frequency_hz, coherence)` for bins 0..=nfft/2.
pub fn welch_real_coherence(x: &[f64], y: &[f64], nfft: usize, fs: f64) -> Vec<(f64, f64)> {
    let hop = nfft / 2;
    let win: Vec<f64> = (0..nfft)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / nfft as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let bins = nfft / 2 + 1;
    let mut sxx = vec![0.0; bins];
    let mut syy = vec![0.0; bins];
    let mut sxy = vec![Complex64::new(0.0, 0.0); bins];
    let mut start = 0;
    while start + nfft <= x.len() {
        let mut a: Vec<Complex64> = (0..nfft)
            .map(|i| Complex64::new(x[start + i] * win[i], 0.0))
            .collect();
        let mut b: Vec<Complex64> = (0..nfft)
            .map(|i| Complex64::new(y[start + i] * win[i], 0.0))
            .collect();
        fft.process(&mut a);
        fft.process(&mut b);
        for k in 0..bins {
            sxx[k] += a[k].norm_sqr();
            syy[k] += b[k].norm_sqr();
            sxy[k] += a[k] * b[k].conj();
        }
        start += hop;
    }
    (0..bins)
        .map(|k| {
            (
                k as f64 * fs / nfft as f64,
                sxy[k].re / (sxx[k] * syy[k]).sqrt(),
            )
        })
        .collect()
}

/// Brute-force nearest entry; ties go to the earliest (smallest azimuth).
pub fn exhaustive_nearest(pred: &[f64], entries: &[(f64, Vec<f64>)]) -> f64 {
    let mut best = (f64::INFINITY, f64::NAN);
    for (az, e) in entries {
        let d: f64 = pred.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 || (d == best.0 && *az < best.1) {
            best = (d, *az);
        }
    }
    best.1
}

/// Welch power spectral density (unnormalized), Hann segments of `nfft`
/// with 50% overlap, bins 0..=nfft/2.
pub fn welch_psd(x: &[f64], nfft: usize) -> Vec<f64> {
    let hop = nfft / 2;
    let win: Vec<f64> = (0..nfft)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / nfft as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut psd = vec![0.0; nfft / 2 + 1];
    let mut start = 0;
    while start + nfft <= x.len() {
        let mut a: Vec<Complex64> = (0..nfft)
            .map(|i| Complex64::new(x[start + i] * win[i], 0.0))
            .collect();
        fft.process(&mut a);
        for (p, v) in psd.iter_mut().zip(&a) {
            *p += v.norm_sqr();
        }
        start += hop;
    }
    psd
}
