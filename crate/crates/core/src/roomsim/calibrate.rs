//! Matching the image-source decay to a target RT60.
//!
//! With uniform absorption the image-source response is not a single
//! exponential: paths grazing the far walls reflect less often and dominate
//! the tail, and images arriving in the same sample add coherently because
//! every reflection coefficient is positive. Sabine's reflectivity therefore
//! yields decays well above the target (about 1.4x at 0.5-0.8 s in a 5x7x3 m
//! room). The calibration searches the absorption for which the T30 of the
//! simulated omnidirectional response equals the target.

use super::images::for_each_image;
use super::{rt60_to_reflectivity, Reflectivity, RoomConfig, MAX_AUTO_ORDER, PRUNE_DB};
use crate::error::Result;

/// Reflection order at which `beta^k` falls below the pruning level.
pub(super) fn order_for(reflection: f64) -> usize {
    let per_reflection = -20.0 * reflection.log10();
    ((-PRUNE_DB / per_reflection).ceil() as usize).min(MAX_AUTO_ORDER)
}

/// Per-order image arrivals for one source/receiver pair.
struct Histogram {
    /// `amplitude[k][n]`: sum of `1 / r` over images of order `k` arriving
    /// at sample `n`.
    amplitude: Vec<Vec<f64>>,
    fs: f64,
}

impl Histogram {
    fn new(room: &RoomConfig, source: [f64; 3], max_order: usize, fs: f64) -> Self {
        let mut amplitude: Vec<Vec<f64>> = vec![Vec::new(); max_order + 1];
        for_each_image(room, source, max_order, f64::INFINITY, |im| {
            let n = (im.distance / room.sound_speed * fs).round() as usize;
            let row = &mut amplitude[im.order];
            if row.len() <= n {
                row.resize(n + 1, 0.0);
            }
            row[n] += 1.0 / im.distance;
        });
        Histogram { amplitude, fs }
    }

    /// T30 of the envelope the simulator produces with `reflection`.
    fn t30(&self, reflection: f64) -> f64 {
        let order = order_for(reflection).min(self.amplitude.len() - 1);
        let min_gain = 10f64.powf(PRUNE_DB / 20.0);
        let len = self.amplitude[..=order]
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        let mut h = vec![0.0; len];
        let mut g: f64 = 1.0;
        for (k, row) in self.amplitude[..=order].iter().enumerate() {
            if k > 0 && g < min_gain {
                break;
            }
            for (e, v) in h.iter_mut().zip(row) {
                *e += g * v;
            }
            g *= reflection;
        }
        let mut edc = vec![0.0; len];
        let mut acc = 0.0;
        for i in (0..len).rev() {
            acc += h[i] * h[i];
            edc[i] = acc;
        }
        let total = edc[0];
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &e) in edc.iter().enumerate() {
            let db = 10.0 * (e / total).log10();
            if (-35.0..=-5.0).contains(&db) {
                let t = i as f64 / self.fs;
                n += 1.0;
                sx += t;
                sy += db;
                sxx += t * t;
                sxy += t * db;
            }
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        if n < 2.0 || !(slope < 0.0) {
            return 0.0;
        }
        -60.0 / slope
    }
}

/// A source about 1 m in front of the array, inside the room.
fn reference_source(room: &RoomConfig) -> [f64; 3] {
    let mut d = 1.0;
    loop {
        let p = room.source_position(0.0, d);
        if room.inside(p) || d < 1e-3 {
            return p;
        }
        d *= 0.5;
    }
}

/// Reflection coefficient for which the T30 of the response simulated at
/// `fs` equals `room.rt60`. Zero for an anechoic room.
pub fn calibrated_reflection(room: &RoomConfig, fs: f64) -> Result<f64> {
    let sabine = match rt60_to_reflectivity(room)? {
        Reflectivity::Anechoic => return Ok(0.0),
        Reflectivity::Uniform { absorption, .. } => absorption,
    };
    let reflection = |alpha: f64| (1.0 - alpha).sqrt();
    let mut lo = sabine * 0.8;
    let mut hi = 0.999;
    let hist = Histogram::new(room, reference_source(room), order_for(reflection(lo)), fs);
    let target = room.rt60;
    if hist.t30(reflection(lo)) < target {
        return Ok(reflection(lo));
    }
    // T30 falls as absorption rises.
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if hist.t30(reflection(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok(reflection((lo * hi).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_needs_more_absorption_than_sabine() {
        let room = RoomConfig::new([5.0, 7.0, 3.0], [2.5, 3.5, 1.5], 0.5);
        let sabine = rt60_to_reflectivity(&room).unwrap().reflection();
        let calibrated = calibrated_reflection(&room, 16000.0).unwrap();
        assert!(calibrated < sabine);
        assert!(calibrated > 0.5);
    }

    #[test]
    fn longer_target_reflects_more() {
        let mut last = 0.0;
        for rt60 in [0.3, 0.5, 0.8] {
            let room = RoomConfig::new([5.0, 7.0, 3.0], [2.5, 3.5, 1.5], rt60);
            let beta = calibrated_reflection(&room, 16000.0).unwrap();
            assert!(beta > last);
            last = beta;
        }
    }

    #[test]
    fn anechoic_has_no_reflection() {
        let room = RoomConfig::new([5.0, 7.0, 3.0], [2.5, 3.5, 1.5], 0.0);
        assert_eq!(calibrated_reflection(&room, 16000.0).unwrap(), 0.0);
    }
}
