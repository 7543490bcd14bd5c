//! Head-related impulse response sets.
//!
//! An [`HrirSet`] holds one two-channel impulse response per direction.
//! Sets are stored on disk in the `HRS1` format:
//!
//! ```text
//! "HRS1" | u32le fs | u32le D | u32le L
//! D x (f32le azimuth_deg, f32le elevation_deg)
//! D x 2 x L f32le taps          (direction-major, channel-major, time-minor)
//! u16le id_len | id_len bytes of UTF-8 head id
//! ```
//!
//! Channel 0 is the left ear (microphone 1), channel 1 the right ear
//! (microphone 2). Positive azimuths are to the right of the head.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{sinc, wrap_deg};
use crate::error::{Error, Result};
use crate::signals::StftConfig;
use crate::{Complex, SOUND_SPEED};

const MAGIC: &[u8; 4] = b"HRS1";

/// Length of the windowed-sinc fractional delay.
pub const FRACTIONAL_DELAY_TAPS: usize = 64;
/// Length of the linear-phase level-difference filter.
pub const ILD_FILTER_TAPS: usize = 63;

/// A source direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub fn horizontal(azimuth: f64) -> Self {
        Direction {
            azimuth,
            elevation: 0.0,
        }
    }
}

/// Candidate source azimuths in the horizontal plane, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DoaGrid {
    azimuths: Vec<f64>,
}

impl DoaGrid {
    pub fn new(azimuths: Vec<f64>) -> Result<Self> {
        if azimuths.is_empty() {
            return Err(Error::invalid("DOA grid", "no directions"));
        }
        if azimuths
            .iter()
            .any(|a| !a.is_finite() || *a < -180.0 || *a >= 180.0)
        {
            return Err(Error::invalid("DOA grid", "azimuth outside [-180, 180)"));
        }
        if azimuths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "DOA grid",
                "azimuths must be strictly increasing",
            ));
        }
        Ok(DoaGrid { azimuths })
    }

    /// The 25 horizontal candidate directions:
    /// -80, -65, -55, -45:5:45, 55, 65, 80 degrees.
    pub fn standard() -> Self {
        let mut az = vec![-80.0, -65.0, -55.0];
        az.extend((-9..=9).map(|i| 5.0 * i as f64));
        az.extend([55.0, 65.0, 80.0]);
        DoaGrid { azimuths: az }
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn len(&self) -> usize {
        self.azimuths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.azimuths.is_empty()
    }

    /// Index of an azimuth that is exactly on the grid.
    pub fn index_of(&self, azimuth: f64) -> Option<usize> {
        self.azimuths.iter().position(|&a| same_azimuth(a, azimuth))
    }

    pub fn contains(&self, azimuth: f64) -> bool {
        self.index_of(azimuth).is_some()
    }
}

impl Default for DoaGrid {
    fn default() -> Self {
        DoaGrid::standard()
    }
}

impl TryFrom<Vec<f64>> for DoaGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DoaGrid::new(v)
    }
}

impl From<DoaGrid> for Vec<f64> {
    fn from(g: DoaGrid) -> Self {
        g.azimuths
    }
}

fn same_azimuth(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Direction-indexed two-channel impulse responses.
#[derive(Debug, Clone, PartialEq)]
pub struct HrirSet {
    sample_rate: u32,
    directions: Vec<Direction>,
    taps_len: usize,
    taps: Vec<f32>,
    head_id: String,
}

impl HrirSet {
    /// Build a set from `directions.len() x 2 x taps_len` taps.
    ///
    /// Directions are rounded to `f32` so that a save/load round trip is
    /// exact.
    pub fn new(
        sample_rate: u32,
        directions: Vec<Direction>,
        taps_len: usize,
        taps: Vec<f32>,
        head_id: impl Into<String>,
    ) -> Result<Self> {
        let directions: Vec<Direction> = directions
            .into_iter()
            .map(|d| Direction {
                azimuth: d.azimuth as f32 as f64,
                elevation: d.elevation as f32 as f64,
            })
            .collect();
        let set = HrirSet {
            sample_rate,
            directions,
            taps_len,
            taps,
            head_id: head_id.into(),
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("HRIR set", "sample rate must be positive"));
        }
        if self.directions.is_empty() {
            return Err(Error::invalid("HRIR set", "no directions"));
        }
        if self.taps_len == 0 {
            return Err(Error::invalid("HRIR set", "zero-length impulse responses"));
        }
        let expected = self.directions.len() * 2 * self.taps_len;
        if self.taps.len() != expected {
            return Err(Error::PayloadLength {
                expected,
                found: self.taps.len(),
            });
        }
        for d in &self.directions {
            if !(d.azimuth.is_finite() && d.elevation.is_finite())
                || d.azimuth < -180.0
                || d.azimuth >= 180.0
            {
                return Err(Error::invalid(
                    "HRIR set",
                    format!("azimuth {} outside [-180, 180)", d.azimuth),
                ));
            }
        }
        for (i, a) in self.directions.iter().enumerate() {
            if self.directions[..i].contains(a) {
                return Err(Error::invalid(
                    "HRIR set",
                    format!("duplicate direction ({}, {})", a.azimuth, a.elevation),
                ));
            }
        }
        if self.taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("HRIR set", "non-finite tap"));
        }
        if self.head_id.len() > u16::MAX as usize {
            return Err(Error::invalid("HRIR set", "head id too long"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn taps_len(&self) -> usize {
        self.taps_len
    }

    pub fn head_id(&self) -> &str {
        &self.head_id
    }

    pub fn taps(&self) -> &[f32] {
        &self.taps
    }

    /// Impulse response of direction `index`, channel 0 or 1.
    pub fn impulse_response(&self, index: usize, channel: usize) -> &[f32] {
        let start = (index * 2 + channel) * self.taps_len;
        &self.taps[start..start + self.taps_len]
    }

    /// Index of the horizontal-plane direction at exactly `azimuth`.
    pub fn find(&self, azimuth: f64) -> Option<usize> {
        self.directions
            .iter()
            .enumerate()
            .filter(|(_, d)| same_azimuth(d.azimuth, azimuth))
            .min_by(|a, b| a.1.elevation.abs().total_cmp(&b.1.elevation.abs()))
            .map(|(i, _)| i)
    }

    /// Index of the direction whose azimuth is angularly nearest to
    /// `azimuth`, ignoring elevation. Ties go to the smaller azimuth.
    pub fn nearest(&self, azimuth: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, d) in self.directions.iter().enumerate() {
            let dist = wrap_deg(d.azimuth - azimuth).abs();
            let better = dist < best_dist
                || (dist == best_dist && d.azimuth < self.directions[best].azimuth)
                || (dist == best_dist
                    && d.azimuth == self.directions[best].azimuth
                    && d.elevation.abs() < self.directions[best].elevation.abs());
            if better {
                best = i;
                best_dist = dist;
            }
        }
        best
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            16 + self.directions.len() * 8 + self.taps.len() * 4 + 2 + self.head_id.len(),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&(self.directions.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.taps_len as u32).to_le_bytes());
        for d in &self.directions {
            out.extend_from_slice(&(d.azimuth as f32).to_le_bytes());
            out.extend_from_slice(&(d.elevation as f32).to_le_bytes());
        }
        for t in &self.taps {
            out.extend_from_slice(&t.to_le_bytes());
        }
        out.extend_from_slice(&(self.head_id.len() as u16).to_le_bytes());
        out.extend_from_slice(self.head_id.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad HRS1 magic".into()));
        }
        let fs = r.u32()?;
        let d = r.u32()? as usize;
        let l = r.u32()? as usize;
        let mut directions = Vec::with_capacity(d.min(1 << 16));
        for _ in 0..d {
            let az = r.f32()? as f64;
            let el = r.f32()? as f64;
            directions.push(Direction {
                azimuth: az,
                elevation: el,
            });
        }
        let n_taps = d
            .checked_mul(2)
            .and_then(|v| v.checked_mul(l))
            .ok_or_else(|| Error::Format("HRS1 dimensions overflow".into()))?;
        let available = (bytes.len() - r.pos) / 4;
        if available < n_taps {
            return Err(Error::PayloadLength {
                expected: n_taps,
                found: available,
            });
        }
        let taps: Vec<f32> = (0..n_taps).map(|_| r.f32()).collect::<Result<_>>()?;
        let id_len = r.u16()? as usize;
        let id = std::str::from_utf8(r.take(id_len)?)
            .map_err(|_| Error::Format("head id is not UTF-8".into()))?
            .to_string();
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after HRS1 payload",
                bytes.len() - r.pos
            )));
        }
        HrirSet::new(fs, directions, l, taps, id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        HrirSet::from_bytes(&bytes)
    }
}

/// Shorthand for [`HrirSet::load`].
pub fn load_hrir_set(path: impl AsRef<Path>) -> Result<HrirSet> {
    HrirSet::load(path)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format("unexpected end of HRS1 data".into())),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Rigid spherical head with point microphones on its surface.
///
/// Each ear gets a windowed-sinc fractional delay following the Woodworth
/// model and a linear-phase level filter with gain
/// `ild_max_db * sin(lateral) * min(1, f / 4 kHz)` dB, where `lateral` is the
/// source angle towards that ear (positive when the ear faces the source).
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalHead {
    pub radius: f64,
    /// Azimuths of the left and right microphones, degrees.
    pub ear_azimuths: (f64, f64),
    pub ild_max_db: f64,
    pub head_id: String,
}

impl SphericalHead {
    pub fn new(radius: f64) -> Self {
        SphericalHead {
            radius,
            ear_azimuths: (-90.0, 90.0),
            ild_max_db: 6.0,
            head_id: format!("sphere-{:.2}cm", radius * 100.0),
        }
    }

    /// Angle in degrees by which the source sits on this ear's side of the
    /// head, in [-90, 90].
    pub fn lateral_angle(&self, azimuth: f64, ear_azimuth: f64) -> f64 {
        90.0 - wrap_deg(azimuth - ear_azimuth).abs()
    }

    /// Arrival time relative to the head centre, seconds (Woodworth).
    pub fn ear_delay(&self, lateral_deg: f64) -> f64 {
        let a = self.radius / SOUND_SPEED;
        let lat = lateral_deg.to_radians();
        if lat >= 0.0 {
            -a * lat.sin()
        } else {
            -a * lat
        }
    }

    /// Interaural time difference, left arrival minus right arrival.
    pub fn itd(&self, azimuth: f64) -> f64 {
        let l = self.ear_delay(self.lateral_angle(azimuth, self.ear_azimuths.0));
        let r = self.ear_delay(self.lateral_angle(azimuth, self.ear_azimuths.1));
        l - r
    }

    /// Level gain of one ear in dB at frequency `f`.
    pub fn ear_gain_db(&self, lateral_deg: f64, f: f64) -> f64 {
        self.ild_max_db * lateral_deg.to_radians().sin() * (f / 4000.0).min(1.0)
    }

    /// Constant delay (samples) added to every response so all taps are
    /// causal.
    fn base_delay(&self, fs: f64) -> f64 {
        (FRACTIONAL_DELAY_TAPS / 2) as f64 + (self.radius / SOUND_SPEED * fs).ceil()
    }

    /// Minimum impulse response length for this head at `fs`.
    pub fn min_taps(&self, fs: u32) -> usize {
        let fs = fs as f64;
        let max_delay = self.base_delay(fs) + self.radius / SOUND_SPEED * fs * PI / 2.0;
        max_delay.floor() as usize - (FRACTIONAL_DELAY_TAPS / 2 - 1)
            + FRACTIONAL_DELAY_TAPS
            + ILD_FILTER_TAPS
            - 1
    }

    fn ear_response(&self, lateral_deg: f64, fs: f64, len: usize) -> Result<Vec<f64>> {
        let delay = self.base_delay(fs) + self.ear_delay(lateral_deg) * fs;
        let fd = fractional_delay(delay);
        let start = delay.floor() as usize - (FRACTIONAL_DELAY_TAPS / 2 - 1);
        let ild = level_filter(|f| self.ear_gain_db(lateral_deg, f), fs);
        let mut out = vec![0.0; len];
        let needed = start + fd.len() + ild.len() - 1;
        if needed > len {
            return Err(Error::Capacity(format!(
                "impulse response needs {needed} taps, only {len} available"
            )));
        }
        for (i, &a) in fd.iter().enumerate() {
            for (j, &b) in ild.iter().enumerate() {
                out[start + i + j] += a * b;
            }
        }
        Ok(out)
    }

    pub fn synthesize(&self, grid: &DoaGrid, fs: u32, taps_len: usize) -> Result<HrirSet> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("spherical head", "radius must be positive"));
        }
        if fs == 0 {
            return Err(Error::invalid(
                "spherical head",
                "sample rate must be positive",
            ));
        }
        let mut taps = Vec::with_capacity(grid.len() * 2 * taps_len);
        let mut directions = Vec::with_capacity(grid.len());
        for &az in grid.azimuths() {
            for ear in [self.ear_azimuths.0, self.ear_azimuths.1] {
                let lat = self.lateral_angle(az, ear);
                let ir = self.ear_response(lat, fs as f64, taps_len)?;
                taps.extend(ir.iter().map(|&v| v as f32));
            }
            directions.push(Direction::horizontal(az));
        }
        HrirSet::new(fs, directions, taps_len, taps, self.head_id.clone())
    }
}

/// Synthesize a spherical-head HRIR set with the default level model.
pub fn synth_spherical_head(
    radius: f64,
    mic_azimuths: (f64, f64),
    grid: &DoaGrid,
    fs: u32,
    taps_len: usize,
) -> Result<HrirSet> {
    let head = SphericalHead {
        ear_azimuths: mic_azimuths,
        ..SphericalHead::new(radius)
    };
    head.synthesize(grid, fs, taps_len)
}

/// Unit-energy windowed-sinc impulse centred at `delay`, starting at tap
/// `floor(delay) - 31`.
fn fractional_delay(delay: f64) -> Vec<f64> {
    let half = (FRACTIONAL_DELAY_TAPS / 2) as f64;
    let first = delay.floor() - (half - 1.0);
    let mut h: Vec<f64> = (0..FRACTIONAL_DELAY_TAPS)
        .map(|i| {
            let x = first + i as f64 - delay;
            let w = 0.5 + 0.5 * (PI * x / half).cos();
            sinc(PI * x) * w
        })
        .collect();
    let energy = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut h {
        *v /= energy;
    }
    h
}

/// Type-I linear-phase FIR sampling the amplitude `gain_db(f)` at
/// `k * fs / ILD_FILTER_TAPS`. A flat 0 dB response is an exact unit impulse.
fn level_filter(gain_db: impl Fn(f64) -> f64, fs: f64) -> Vec<f64> {
    let m = ILD_FILTER_TAPS;
    let centre = m / 2;
    let amps: Vec<f64> = (0..=centre)
        .map(|k| 10f64.powf(gain_db(k as f64 * fs / m as f64) / 20.0))
        .collect();
    if amps.iter().all(|&a| a == 1.0) {
        let mut h = vec![0.0; m];
        h[centre] = 1.0;
        return h;
    }
    (0..m)
        .map(|n| {
            let t = n as f64 - centre as f64;
            let mut acc = amps[0];
            for (k, &a) in amps.iter().enumerate().skip(1) {
                acc += 2.0 * a * (2.0 * PI * k as f64 * t / m as f64).cos();
            }
            acc / m as f64
        })
        .collect()
}

/// Band-limited transfer functions of one direction, `[left, right]`, each
/// of length `F`, evaluated at the band bins of `config`.
pub fn direct_path_tf(
    set: &HrirSet,
    azimuth: f64,
    config: &StftConfig,
) -> Result<[Vec<Complex>; 2]> {
    let index = set.find(azimuth).ok_or(Error::NotOnGrid(azimuth))?;
    Ok(transfer_at(set, index, config))
}

pub(crate) fn transfer_at(set: &HrirSet, index: usize, config: &StftConfig) -> [Vec<Complex>; 2] {
    let n = config.window_len;
    let twiddles: Vec<Complex> = (0..n)
        .map(|i| Complex::from_polar(1.0, -2.0 * PI * i as f64 / n as f64))
        .collect();
    let dft = |h: &[f32]| -> Vec<Complex> {
        (config.band_lo..=config.band_hi)
            .map(|k| {
                h.iter()
                    .enumerate()
                    .map(|(t, &v)| twiddles[(k * t) % n] * v as f64)
                    .sum()
            })
            .collect()
    };
    [
        dft(set.impulse_response(index, 0)),
        dft(set.impulse_response(index, 1)),
    ]
}
