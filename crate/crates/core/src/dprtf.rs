//! Direct-path relative transfer functions and dictionary matching.
//!
//! The complex DP-RTF `R(f) = H2(f) / H1(f)` is encoded as a real vector of
//! length `3F`:
//!
//! ```text
//! [ dI(1..F) | sin dP(1..F) | cos dP(1..F) ]
//! dI(f) = clip(20 log10 |R(f)| / dI_max, -1, 1),   dP(f) = arg R(f)
//! ```
//!
//! A [`Dictionary`] stores the encoded vector of every candidate direction;
//! [`match_doa`] returns the candidate nearest in squared Euclidean distance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrir::{transfer_at, DoaGrid, HrirSet};
use crate::signals::StftConfig;
use crate::Complex;

/// Default IID normalization, dB.
pub const DELTA_I_MAX: f64 = 20.0;

/// Magnitude below which a reference transfer function is degenerate.
pub const DEGENERATE_MAGNITUDE: f64 = 1e-12;

/// Real-valued DP-RTF feature, `[dI | sin dP | cos dP]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DpRtfVec(Vec<f64>);

impl DpRtfVec {
    /// Wrap a raw `3F` vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 3 != 0 {
            return Err(Error::Shape(format!(
                "DP-RTF vector length {} is not a positive multiple of 3",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("DP-RTF vector", "non-finite element"));
        }
        Ok(DpRtfVec(values))
    }

    /// Vector with `dI = 0`, `dP = 0` at every bin.
    pub fn neutral(bins: usize) -> Self {
        let mut v = vec![0.0; 3 * bins];
        v[2 * bins..].fill(1.0);
        DpRtfVec(v)
    }

    pub fn bins(&self) -> usize {
        self.0.len() / 3
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn iid(&self) -> &[f64] {
        &self.0[..self.bins()]
    }

    pub fn sin_ipd(&self) -> &[f64] {
        let f = self.bins();
        &self.0[f..2 * f]
    }

    pub fn cos_ipd(&self) -> &[f64] {
        let f = self.bins();
        &self.0[2 * f..]
    }

    pub fn squared_distance(&self, other: &DpRtfVec) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Largest deviation of `sin^2 + cos^2` from one over all bins.
    pub fn unit_circle_error(&self) -> f64 {
        self.sin_ipd()
            .iter()
            .zip(self.cos_ipd())
            .map(|(s, c)| (s * s + c * c - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Elementwise `h2 / h1`.
pub fn dprtf_complex(h1: &[Complex], h2: &[Complex]) -> Result<Vec<Complex>> {
    if h1.len() != h2.len() {
        return Err(Error::Shape(format!(
            "transfer functions differ in length ({} vs {})",
            h1.len(),
            h2.len()
        )));
    }
    h1.iter()
        .zip(h2)
        .enumerate()
        .map(|(bin, (a, b))| {
            let magnitude = a.norm();
            if magnitude < DEGENERATE_MAGNITUDE || !magnitude.is_finite() {
                Err(Error::DegenerateTransfer { bin, magnitude })
            } else {
                Ok(b / a)
            }
        })
        .collect()
}

/// Encode a complex DP-RTF into its real-valued form.
pub fn encode_real(r: &[Complex], delta_i_max: f64) -> Result<DpRtfVec> {
    if r.is_empty() {
        return Err(Error::Shape("empty DP-RTF".into()));
    }
    if !(delta_i_max > 0.0 && delta_i_max.is_finite()) {
        return Err(Error::invalid("delta_i_max", "must be positive"));
    }
    let f = r.len();
    let mut out = vec![0.0; 3 * f];
    for (bin, z) in r.iter().enumerate() {
        let mag = z.norm();
        if mag == 0.0 || !mag.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::ZeroEncode { bin });
        }
        let phase = z.arg();
        out[bin] = (20.0 * mag.log10() / delta_i_max).clamp(-1.0, 1.0);
        out[f + bin] = phase.sin();
        out[2 * f + bin] = phase.cos();
    }
    Ok(DpRtfVec(out))
}

/// Metadata and entries of a DP-RTF dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    grid: DoaGrid,
    entries: Vec<DpRtfVec>,
    sample_rate: u32,
    delta_i_max: f64,
    head_id: String,
}

impl Dictionary {
    /// Entries must follow grid order and share one length.
    pub fn new(
        grid: DoaGrid,
        entries: Vec<DpRtfVec>,
        sample_rate: u32,
        delta_i_max: f64,
        head_id: impl Into<String>,
    ) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} entries for {} grid directions",
                entries.len(),
                grid.len()
            )));
        }
        let f = entries[0].bins();
        if entries.iter().any(|e| e.bins() != f) {
            return Err(Error::Shape("dictionary entries differ in length".into()));
        }
        Ok(Dictionary {
            grid,
            entries,
            sample_rate,
            delta_i_max,
            head_id: head_id.into(),
        })
    }

    pub fn grid(&self) -> &DoaGrid {
        &self.grid
    }

    pub fn entries(&self) -> &[DpRtfVec] {
        &self.entries
    }

    pub fn bins(&self) -> usize {
        self.entries[0].bins()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn delta_i_max(&self) -> f64 {
        self.delta_i_max
    }

    pub fn head_id(&self) -> &str {
        &self.head_id
    }

    pub fn entry(&self, azimuth: f64) -> Option<&DpRtfVec> {
        self.grid.index_of(azimuth).map(|i| &self.entries[i])
    }

    /// Iterate `(azimuth, entry)` in grid order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &DpRtfVec)> {
        self.grid.azimuths().iter().copied().zip(&self.entries)
    }

    /// Smallest Euclidean distance between two distinct entries.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.entries.len() {
            for j in i + 1..self.entries.len() {
                best = best.min(self.entries[i].squared_distance(&self.entries[j]));
            }
        }
        best.sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DictionaryFile {
            fs: self.sample_rate,
            f: self.bins(),
            delta_i_max: self.delta_i_max,
            head_id: self.head_id.clone(),
            grid_deg: self.grid.azimuths().to_vec(),
            entries: self
                .iter()
                .map(|(az, e)| {
                    (
                        azimuth_key(az),
                        e.values().iter().map(|&v| round_sig9(v)).collect(),
                    )
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DictionaryFile = serde_json::from_str(text)?;
        let grid = DoaGrid::new(file.grid_deg)?;
        if file.entries.len() != grid.len() {
            return Err(Error::Format(format!(
                "{} entries for {} grid directions",
                file.entries.len(),
                grid.len()
            )));
        }
        let mut entries = Vec::with_capacity(grid.len());
        for &az in grid.azimuths() {
            let key = azimuth_key(az);
            let values = file
                .entries
                .get(&key)
                .ok_or_else(|| Error::Format(format!("missing entry for azimuth {key}")))?;
            if values.len() != 3 * file.f {
                return Err(Error::Format(format!(
                    "entry {key} has {} values, expected {}",
                    values.len(),
                    3 * file.f
                )));
            }
            entries.push(DpRtfVec::new(values.clone())?);
        }
        Dictionary::new(grid, entries, file.fs, file.delta_i_max, file.head_id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dictionary::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    fs: u32,
    #[serde(rename = "F")]
    f: usize,
    delta_i_max: f64,
    head_id: String,
    grid_deg: Vec<f64>,
    entries: BTreeMap<String, Vec<f64>>,
}

fn azimuth_key(az: f64) -> String {
    format!("{az}")
}

/// Round to 9 significant digits; serde then prints at most 9 digits.
fn round_sig9(v: f64) -> f64 {
    format!("{v:.8e}").parse().unwrap_or(v)
}

/// Dictionary of encoded direct-path DP-RTFs for every grid direction.
pub fn build_dictionary(
    hrir: &HrirSet,
    grid: &DoaGrid,
    config: &StftConfig,
    delta_i_max: f64,
) -> Result<Dictionary> {
    config.validate()?;
    let mut entries = Vec::with_capacity(grid.len());
    for &az in grid.azimuths() {
        let index = hrir.find(az).ok_or(Error::NotOnGrid(az))?;
        let [h1, h2] = transfer_at(hrir, index, config);
        entries.push(encode_real(&dprtf_complex(&h1, &h2)?, delta_i_max)?);
    }
    Dictionary::new(
        grid.clone(),
        entries,
        hrir.sample_rate(),
        delta_i_max,
        hrir.head_id(),
    )
}

/// Elementwise mean of dictionaries over identical grids.
pub fn average_dictionary(dicts: &[Dictionary]) -> Result<Dictionary> {
    let first = dicts
        .first()
        .ok_or(Error::Empty("no dictionaries to average"))?;
    for d in &dicts[1..] {
        if d.grid != first.grid {
            return Err(Error::invalid("dictionaries", "grids differ"));
        }
        if d.bins() != first.bins() {
            return Err(Error::invalid("dictionaries", "bin counts differ"));
        }
        if d.sample_rate != first.sample_rate || d.delta_i_max != first.delta_i_max {
            return Err(Error::invalid(
                "dictionaries",
                "sample rate or IID scale differ",
            ));
        }
    }
    let n = dicts.len() as f64;
    let entries = (0..first.entries.len())
        .map(|i| {
            let mut acc = vec![0.0; first.entries[i].values().len()];
            for d in dicts {
                for (a, v) in acc.iter_mut().zip(d.entries[i].values()) {
                    *a += v;
                }
            }
            DpRtfVec(acc.into_iter().map(|a| a / n).collect())
        })
        .collect();
    let head_id = if dicts.len() == 1 {
        first.head_id.clone()
    } else {
        let ids: Vec<&str> = dicts.iter().map(|d| d.head_id.as_str()).collect();
        format!("mean({})", ids.join(","))
    };
    Dictionary::new(
        first.grid.clone(),
        entries,
        first.sample_rate,
        first.delta_i_max,
        head_id,
    )
}

/// Grid azimuth minimizing `|pred - entry|^2`; ties go to the smaller
/// azimuth.
pub fn match_doa(pred: &DpRtfVec, dict: &Dictionary) -> Result<f64> {
    if dict.entries.is_empty() {
        return Err(Error::Empty("empty dictionary"));
    }
    if pred.values().len() != dict.entries[0].values().len() {
        return Err(Error::Shape(format!(
            "prediction has {} values, dictionary entries {}",
            pred.values().len(),
            dict.entries[0].values().len()
        )));
    }
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, e) in dict.entries.iter().enumerate() {
        let d = pred.squared_distance(e);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    Ok(dict.grid.azimuths()[best])
}
