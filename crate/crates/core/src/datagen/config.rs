//! Dataset generation configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dprtf::DELTA_I_MAX;
use crate::error::{Error, Result};
use crate::hrir::{DoaGrid, HrirSet, SphericalHead};
use crate::roomsim::{rt60_to_reflectivity, NoiseKind, RoomConfig};
use crate::signals::StftConfig;

/// Segment length giving 31 frames with the default framing.
pub const SEGMENT_LEN: usize = 8192;

/// Signal-to-noise ratio in dB; `+inf` (written `"inf"`) means no noise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr(pub f64);

impl Snr {
    pub const CLEAN: Snr = Snr(f64::INFINITY);

    pub fn db(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Snr(v)),
            Raw::Text(t) if t == "inf" || t == "+inf" => Ok(Snr::CLEAN),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad SNR {t:?}"))),
        }
    }
}

/// RT60 values: an explicit list or an inclusive `start:step:end` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rt60Spec {
    Values(Vec<f64>),
    Range { start: f64, step: f64, end: f64 },
}

impl Rt60Spec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            Rt60Spec::Values(ref v) => Ok(v.clone()),
            Rt60Spec::Range { start, step, end } => {
                if !(step > 0.0) || !(end >= start) {
                    return Err(Error::invalid(
                        "rt60 range",
                        "need step > 0 and end >= start",
                    ));
                }
                let n = ((end - start) / step + 1e-9).floor() as usize;
                // Rounded to the microsecond so `0.2 + 3 * 0.1` prints as 0.5.
                Ok((0..=n)
                    .map(|i| ((start + i as f64 * step) * 1e6).round() / 1e6)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub id: String,
    pub dimensions: [f64; 3],
    pub array_center: [f64; 3],
    #[serde(default)]
    pub array_yaw: f64,
    pub rt60: Rt60Spec,
    /// Source distances from the head centre, metres.
    pub distances: Vec<f64>,
}

impl RoomSpec {
    pub fn room(&self, rt60: f64) -> RoomConfig {
        RoomConfig {
            array_yaw: self.array_yaw,
            ..RoomConfig::new(self.dimensions, self.array_center, rt60)
        }
    }
}

/// A head: synthesized spherical model or an `HRS1` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HeadSpec {
    Sphere {
        id: String,
        radius: f64,
        #[serde(default = "default_ild")]
        ild_max_db: f64,
        taps: Option<usize>,
    },
    File {
        path: PathBuf,
        /// Microphone spacing for the diffuse noise model, metres.
        #[serde(default = "default_mic_distance")]
        mic_distance: f64,
    },
}

fn default_ild() -> f64 {
    6.0
}

fn default_mic_distance() -> f64 {
    0.157
}

/// A loaded head with its noise-model microphone spacing.
#[derive(Debug, Clone)]
pub struct Head {
    pub hrir: HrirSet,
    pub mic_distance: f64,
}

impl HeadSpec {
    pub fn load(&self, fs: u32, grid: &DoaGrid) -> Result<Head> {
        match self {
            HeadSpec::Sphere {
                id,
                radius,
                ild_max_db,
                taps,
            } => {
                let head = SphericalHead {
                    ild_max_db: *ild_max_db,
                    head_id: id.clone(),
                    ..SphericalHead::new(*radius)
                };
                let taps = taps.unwrap_or_else(|| head.min_taps(fs));
                Ok(Head {
                    hrir: head.synthesize(grid, fs, taps)?,
                    mic_distance: 2.0 * radius,
                })
            }
            HeadSpec::File { path, mic_distance } => {
                let hrir = HrirSet::load(path)?;
                if hrir.sample_rate() != fs {
                    return Err(Error::invalid(
                        "head",
                        format!(
                            "{} is sampled at {} Hz, expected {fs}",
                            path.display(),
                            hrir.sample_rate()
                        ),
                    ));
                }
                if let Some(&az) = grid.azimuths().iter().find(|&&az| hrir.find(az).is_none()) {
                    return Err(Error::NotOnGrid(az));
                }
                Ok(Head {
                    hrir,
                    mic_distance: *mic_distance,
                })
            }
        }
    }

    /// Identifier known without loading the file.
    pub fn declared_id(&self) -> Option<&str> {
        match self {
            HeadSpec::Sphere { id, .. } => Some(id),
            HeadSpec::File { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub heads: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: SplitSpec,
    pub val: SplitSpec,
    pub test: SplitSpec,
}

impl Splits {
    pub fn get(&self, split: Split) -> &SplitSpec {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub master_seed: u64,
    #[serde(default = "default_segment")]
    pub segment_len: usize,
    #[serde(default)]
    pub stft: StftConfig,
    #[serde(default)]
    pub grid_deg: DoaGrid,
    #[serde(default = "default_delta_i_max")]
    pub delta_i_max: f64,
    pub rooms: Vec<RoomSpec>,
    pub snr_db: Vec<Snr>,
    #[serde(default = "default_noise_kinds")]
    pub noise_kinds: Vec<NoiseKind>,
    pub heads: Vec<HeadSpec>,
    pub splits: Splits,
    /// Directory of WAV files used as sources instead of synthetic bursts.
    #[serde(default)]
    pub source_corpus: Option<PathBuf>,
    /// Directory of WAV files used as noise instead of the synthetic kinds.
    #[serde(default)]
    pub noise_corpus: Option<PathBuf>,
}

fn default_segment() -> usize {
    SEGMENT_LEN
}

fn default_delta_i_max() -> f64 {
    DELTA_I_MAX
}

fn default_noise_kinds() -> Vec<NoiseKind> {
    NoiseKind::ALL.to_vec()
}

impl GenConfig {
    /// Parse a JSON configuration. Relative paths are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: GenConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for head in &mut cfg.heads {
            if let HeadSpec::File { path, .. } = head {
                resolve(path);
            }
        }
        if let Some(p) = cfg.source_corpus.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.noise_corpus.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        if self.segment_len < self.stft.window_len {
            return Err(Error::invalid("config", "segment shorter than one window"));
        }
        if !(self.delta_i_max > 0.0) {
            return Err(Error::invalid("config", "delta_i_max must be positive"));
        }
        if self.rooms.is_empty() {
            return Err(Error::invalid("config", "no rooms"));
        }
        let mut room_ids = BTreeSet::new();
        for spec in &self.rooms {
            if !room_ids.insert(&spec.id) {
                return Err(Error::invalid(
                    "config",
                    format!("duplicate room id {}", spec.id),
                ));
            }
            let rt60s = spec.rt60.values()?;
            if rt60s.is_empty() || spec.distances.is_empty() {
                return Err(Error::invalid(
                    "config",
                    format!("room {} needs RT60 values and distances", spec.id),
                ));
            }
            for &rt60 in &rt60s {
                rt60_to_reflectivity(&spec.room(rt60))?;
            }
            let room = spec.room(0.0);
            for &d in &spec.distances {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::invalid("config", "distances must be positive"));
                }
                for &az in self.grid_deg.azimuths() {
                    if !room.inside(room.source_position(az, d)) {
                        return Err(Error::invalid(
                            "config",
                            format!("room {}: source at {az} deg, {d} m is outside", spec.id),
                        ));
                    }
                }
            }
        }
        if self.snr_db.is_empty()
            || self
                .snr_db
                .iter()
                .any(|s| s.0.is_nan() || s.0 == f64::NEG_INFINITY)
        {
            return Err(Error::invalid(
                "config",
                "SNR set must be non-empty and finite or inf",
            ));
        }
        if self.noise_kinds.is_empty() && self.noise_corpus.is_none() {
            return Err(Error::invalid("config", "no noise kinds"));
        }
        let mut seen = BTreeSet::new();
        for split in Split::ALL {
            let s = self.splits.get(split);
            if s.count == 0 {
                return Err(Error::invalid(
                    "config",
                    format!("{} count must be at least 1", split.name()),
                ));
            }
            if s.heads.is_empty() {
                return Err(Error::invalid(
                    "config",
                    format!("{} split has no heads", split.name()),
                ));
            }
            for h in &s.heads {
                if !seen.insert(h.as_str()) {
                    return Err(Error::invalid(
                        "config",
                        format!("head {h} appears in more than one split"),
                    ));
                }
            }
        }
        let declared: BTreeSet<&str> = self.heads.iter().filter_map(|h| h.declared_id()).collect();
        let has_files = self.heads.iter().any(|h| h.declared_id().is_none());
        if !has_files {
            if let Some(missing) = seen.iter().find(|h| !declared.contains(*h)) {
                return Err(Error::invalid("config", format!("unknown head {missing}")));
            }
        }
        Ok(())
    }

    pub fn total_instances(&self) -> usize {
        Split::ALL.iter().map(|&s| self.splits.get(s).count).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_json() {
        let v: Vec<Snr> = serde_json::from_str(r#"[-5, 20, "inf"]"#).unwrap();
        assert_eq!(v, vec![Snr(-5.0), Snr(20.0), Snr::CLEAN]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[-5.0,20.0,"inf"]"#);
        assert!(serde_json::from_str::<Snr>(r#""loud""#).is_err());
    }

    #[test]
    fn rt60_range_is_inclusive() {
        let r: Rt60Spec = serde_json::from_str(r#"{"start":0.2,"step":0.1,"end":0.8}"#).unwrap();
        assert_eq!(r.values().unwrap(), vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        let r: Rt60Spec = serde_json::from_str("[0.3, 0.6]").unwrap();
        assert_eq!(r.values().unwrap(), vec![0.3, 0.6]);
    }
}
