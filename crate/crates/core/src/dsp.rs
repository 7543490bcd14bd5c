//! Small numeric helpers shared by the simulation modules.

use rustfft::FftPlanner;

use crate::Complex;

/// Full linear convolution via FFT, `a.len() + b.len() - 1` samples.
pub(crate) fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return direct_convolve(a, b);
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa = to_complex(a, n);
    let mut fb = to_complex(b, n);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|z| z.re * scale).collect()
}

fn direct_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn to_complex(x: &[f64], n: usize) -> Vec<Complex> {
    let mut v: Vec<Complex> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
    v.resize(n, Complex::new(0.0, 0.0));
    v
}

/// Wrap an angle in degrees to `[-180, 180)`.
pub(crate) fn wrap_deg(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Unnormalized sinc, `sin(x) / x`.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

pub(crate) fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}
