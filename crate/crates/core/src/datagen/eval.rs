//! Scoring prediction files and producing the classical baseline.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::manifest::{InstanceRecord, Prediction};
use super::read_tensor;
use crate::dprtf::{match_doa, Dictionary, DpRtfVec};
use crate::error::{Error, Result};
use crate::estimators::{estimate_dprtf_cpsd, vad_mask};
use crate::metrics::MetricsReport;
use crate::signals::StftConfig;

/// Overall scores plus one report per (RT60, SNR, distance) condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub overall: MetricsReport,
    pub strata: Vec<MetricsReport>,
}

/// Match every prediction against `dict` and score it against the manifest.
pub fn evaluate_predictions(
    manifest: &[InstanceRecord],
    predictions: &[Prediction],
    dict: &Dictionary,
) -> Result<Evaluation> {
    if predictions.is_empty() {
        return Err(Error::Empty("predictions file is empty"));
    }
    let by_id: HashMap<&str, &InstanceRecord> =
        manifest.iter().map(|r| (r.id.as_str(), r)).collect();
    let expected_len = 3 * dict.bins();
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(predictions.len());
    for p in predictions {
        let record = by_id
            .get(p.id.as_str())
            .ok_or_else(|| Error::invalid("predictions", format!("id {} not in manifest", p.id)))?;
        if !seen.insert(p.id.as_str()) {
            return Err(Error::invalid(
                "predictions",
                format!("duplicate id {}", p.id),
            ));
        }
        if p.dprtf.len() != expected_len {
            return Err(Error::Shape(format!(
                "prediction {} has {} values, expected {expected_len}",
                p.id,
                p.dprtf.len()
            )));
        }
        let est = match_doa(&DpRtfVec::new(p.dprtf.clone())?, dict)?;
        rows.push((*record, est));
    }

    let est: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let truth: Vec<f64> = rows.iter().map(|r| r.0.theta_deg).collect();
    let overall = MetricsReport::from_estimates(&est, &truth, BTreeMap::new())?;

    // Keys order numerically, with the clean (+inf SNR) condition last.
    let key = |r: &InstanceRecord| {
        let q = |v: f64| {
            if v.is_finite() {
                (v * 1e6).round() as i64
            } else {
                i64::MAX
            }
        };
        (q(r.rt60_s), q(r.snr_db.db()), q(r.distance_m))
    };
    let mut groups: BTreeMap<_, (Vec<f64>, Vec<f64>, &InstanceRecord)> = BTreeMap::new();
    for (record, e) in &rows {
        let g = groups
            .entry(key(record))
            .or_insert((Vec::new(), Vec::new(), record));
        g.0.push(*e);
        g.1.push(record.theta_deg);
    }
    let strata = groups
        .into_values()
        .map(|(est, truth, r)| {
            let condition = BTreeMap::from([
                ("rt60_s".to_string(), json!(r.rt60_s)),
                ("snr_db".to_string(), serde_json::to_value(r.snr_db)?),
                ("distance_m".to_string(), json!(r.distance_m)),
            ]);
            MetricsReport::from_estimates(&est, &truth, condition)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { overall, strata })
}

/// Cross-PSD DP-RTF estimates of the mixtures of `records`, restricted to
/// voice-active bins. Tensor paths are relative to `data_dir`.
pub fn baseline_predictions(
    data_dir: &Path,
    records: &[InstanceRecord],
    config: &StftConfig,
    threshold_db: f64,
    delta_i_max: f64,
) -> Result<Vec<Prediction>> {
    records
        .iter()
        .map(|r| {
            let spec = read_tensor(data_dir.join(&r.mixture))?.to_band_spectrogram(config)?;
            let mask = vad_mask(&spec, threshold_db);
            let est = if mask.count() > 0 {
                estimate_dprtf_cpsd(&spec, Some(&mask), delta_i_max)?
            } else {
                estimate_dprtf_cpsd(&spec, None, delta_i_max)?
            };
            Ok(Prediction::new(r.id.clone(), &est.vector))
        })
        .collect()
}
