//! Localization and enhancement scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsp::wrap_deg;
use crate::error::{Error, Result};

/// Azimuths closer than this are the same grid value.
const SAME_AZIMUTH: f64 = 1e-6;

fn check_pair(est: &[f64], truth: &[f64]) -> Result<()> {
    if est.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} estimates for {} references",
            est.len(),
            truth.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::Empty("no instances to score"));
    }
    Ok(())
}

/// Fraction of instances whose estimate equals the true grid azimuth.
pub fn accuracy(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth)?;
    let hits = est
        .iter()
        .zip(truth)
        .filter(|(e, t)| (*e - *t).abs() < SAME_AZIMUTH)
        .count();
    Ok(hits as f64 / est.len() as f64)
}

/// Mean absolute angular error in degrees, over all instances.
pub fn mae(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth)?;
    let sum: f64 = est
        .iter()
        .zip(truth)
        .map(|(e, t)| wrap_deg(e - t).abs())
        .sum();
    Ok(sum / est.len() as f64)
}

/// Detection probability and false-alarm rate of a frame-wise track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdFar {
    pub pd: f64,
    pub far_per_s: f64,
}

/// Scores a track over its voice-active frames. A frame is detected when its
/// estimate is within `tolerance` degrees of the truth and a false alarm
/// when an estimate exists but is farther away.
pub fn pd_far(
    est: &[Option<f64>],
    truth: &[f64],
    vad: &[bool],
    tolerance: f64,
    frame_rate: f64,
) -> Result<PdFar> {
    if est.len() != truth.len() || est.len() != vad.len() {
        return Err(Error::Shape("track lengths differ".into()));
    }
    if !(frame_rate > 0.0) || !(tolerance >= 0.0) {
        return Err(Error::invalid(
            "pd_far",
            "tolerance and frame rate must be positive",
        ));
    }
    let mut active = 0usize;
    let mut detected = 0usize;
    let mut false_alarms = 0usize;
    for ((e, t), &v) in est.iter().zip(truth).zip(vad) {
        if !v {
            continue;
        }
        active += 1;
        if let Some(e) = e {
            if wrap_deg(e - t).abs() <= tolerance {
                detected += 1;
            } else {
                false_alarms += 1;
            }
        }
    }
    if active == 0 {
        return Err(Error::Empty("no voice-active frames"));
    }
    Ok(PdFar {
        pd: detected as f64 / active as f64,
        far_per_s: false_alarms as f64 / (active as f64 / frame_rate),
    })
}

/// Scale-invariant signal-to-distortion ratio in dB. `est` is projected onto
/// `reference` before the residual is measured; a perfect match gives
/// `+inf`.
pub fn sdr(est: &[f64], reference: &[f64]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::Shape("signals differ in length".into()));
    }
    let ref_energy: f64 = reference.iter().map(|r| r * r).sum();
    let est_energy: f64 = est.iter().map(|e| e * e).sum();
    if ref_energy == 0.0 || est_energy == 0.0 {
        return Err(Error::invalid("sdr", "zero-energy signal"));
    }
    let alpha = est.iter().zip(reference).map(|(e, r)| e * r).sum::<f64>() / ref_energy;
    let target = alpha * alpha * ref_energy;
    let residual: f64 = est
        .iter()
        .zip(reference)
        .map(|(e, r)| (e - alpha * r).powi(2))
        .sum();
    if residual == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (target / residual).log10())
}

/// Scores of one (sub)set of instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub mae_deg: f64,
    pub pd: Option<f64>,
    pub far_per_s: Option<f64>,
    pub n_instances: usize,
    pub condition: BTreeMap<String, serde_json::Value>,
}

impl MetricsReport {
    /// ACC/MAE report for static instances.
    pub fn from_estimates(
        est: &[f64],
        truth: &[f64],
        condition: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        Ok(MetricsReport {
            acc: accuracy(est, truth)?,
            mae_deg: mae(est, truth)?,
            pd: None,
            far_per_s: None,
            n_instances: est.len(),
            condition,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
