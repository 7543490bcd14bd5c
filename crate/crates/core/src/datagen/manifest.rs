//! JSON-lines manifests and prediction files.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Snr, Split};
use crate::dprtf::DpRtfVec;
use crate::error::{Error, Result};
use crate::roomsim::NoiseKind;

/// Noise used for an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLabel {
    Recording,
    #[serde(untagged)]
    Synthetic(NoiseKind),
}

/// One simulated utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub split: Split,
    pub theta_deg: f64,
    pub rt60_s: f64,
    pub snr_db: Snr,
    pub room_id: String,
    pub head_id: String,
    pub distance_m: f64,
    pub noise_kind: NoiseLabel,
    /// Paths relative to the manifest directory.
    pub mixture: PathBuf,
    pub direct: PathBuf,
    pub target: PathBuf,
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(item);
    }
    Ok(out)
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<InstanceRecord>> {
    read_lines(path.as_ref())
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[InstanceRecord]) -> Result<()> {
    write_lines(path.as_ref(), records)
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub dprtf: Vec<f64>,
}

impl Prediction {
    pub fn new(id: impl Into<String>, v: &DpRtfVec) -> Self {
        Prediction {
            id: id.into(),
            dprtf: v.values().to_vec(),
        }
    }
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    read_lines(path.as_ref())
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    write_lines(path.as_ref(), predictions)
}
