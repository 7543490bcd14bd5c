//! Binaural room simulation.
//!
//! Shoebox rooms are simulated with the image-source method. Every image is
//! rendered through the HRIR whose grid azimuth is nearest to the image's
//! horizontal direction as seen from the head, with gain
//! `beta^reflections / distance` and an integer-sample propagation delay.
//! All six surfaces share one reflection coefficient. [`rt60_to_reflectivity`]
//! inverts Sabine's formula; [`ImageSourceOptions::for_room`] refines that
//! value so the simulated decay meets the target RT60.

mod calibrate;
mod images;
mod mix;
mod noise;

pub use calibrate::calibrated_reflection;
pub use mix::{mix_at_snr, snr_noise_gain};
pub use noise::{diffuse_coherence, generate_diffuse_noise, NoiseKind, NoiseSource};

use serde::{Deserialize, Serialize};

use crate::dsp::{fft_convolve, wrap_deg};
use crate::error::{Error, Result};
use crate::hrir::HrirSet;
use crate::SOUND_SPEED;
use images::for_each_image;

/// Two equal-length channels, left then right.
pub type Binaural = [Vec<f64>; 2];

/// Shoebox room with a binaural array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomConfig {
    /// Length, width, height in metres.
    pub dimensions: [f64; 3],
    /// Head centre in room coordinates, metres.
    pub array_center: [f64; 3],
    /// Look direction of the head, degrees counter-clockwise from +x.
    #[serde(default)]
    pub array_yaw: f64,
    pub rt60: f64,
    #[serde(default = "default_sound_speed")]
    pub sound_speed: f64,
}

fn default_sound_speed() -> f64 {
    SOUND_SPEED
}

impl RoomConfig {
    pub fn new(dimensions: [f64; 3], array_center: [f64; 3], rt60: f64) -> Self {
        RoomConfig {
            dimensions,
            array_center,
            array_yaw: 0.0,
            rt60,
            sound_speed: SOUND_SPEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("room", "dimensions must be positive"));
        }
        if !self.inside(self.array_center) {
            return Err(Error::invalid("room", "array centre outside the room"));
        }
        if !(self.rt60 >= 0.0 && self.rt60.is_finite()) {
            return Err(Error::invalid("room", "RT60 must be non-negative"));
        }
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return Err(Error::invalid("room", "sound speed must be positive"));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.dimensions.iter().product()
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + y * z + x * z)
    }

    pub fn inside(&self, p: [f64; 3]) -> bool {
        p.iter()
            .zip(&self.dimensions)
            .all(|(&c, &d)| c > 0.0 && c < d)
    }

    /// Position of a source at `azimuth` (degrees, positive to the right of
    /// the look direction) and horizontal `distance` from the head.
    pub fn source_position(&self, azimuth: f64, distance: f64) -> [f64; 3] {
        let phi = (self.array_yaw - azimuth).to_radians();
        [
            self.array_center[0] + distance * phi.cos(),
            self.array_center[1] + distance * phi.sin(),
            self.array_center[2],
        ]
    }

    /// Azimuth of point `p` relative to the head, horizontal projection.
    pub fn relative_azimuth(&self, p: [f64; 3]) -> f64 {
        let dx = p[0] - self.array_center[0];
        let dy = p[1] - self.array_center[1];
        wrap_deg(self.array_yaw - dy.atan2(dx).to_degrees())
    }
}

/// Surface reflectivity implied by a room's RT60.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reflectivity {
    /// RT60 = 0: only the direct path is simulated.
    Anechoic,
    /// Same absorption on all six surfaces; `reflection = sqrt(1 - absorption)`.
    Uniform { absorption: f64, reflection: f64 },
}

impl Reflectivity {
    pub fn reflection(&self) -> f64 {
        match *self {
            Reflectivity::Anechoic => 0.0,
            Reflectivity::Uniform { reflection, .. } => reflection,
        }
    }
}

/// Sabine inversion: `alpha = 0.161 V / (S RT60)`, `beta = sqrt(1 - alpha)`.
pub fn rt60_to_reflectivity(room: &RoomConfig) -> Result<Reflectivity> {
    room.validate()?;
    if room.rt60 == 0.0 {
        return Ok(Reflectivity::Anechoic);
    }
    let absorption = 0.161 * room.volume() / (room.surface_area() * room.rt60);
    if absorption >= 1.0 {
        return Err(Error::Infeasible {
            rt60: room.rt60,
            absorption,
        });
    }
    Ok(Reflectivity::Uniform {
        absorption,
        reflection: (1.0 - absorption).sqrt(),
    })
}

/// Reflection coefficient and limits of the image-source expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSourceOptions {
    /// Wall reflection coefficient; ignored for anechoic rooms.
    pub reflection: f64,
    /// Maximum number of wall reflections per image.
    pub max_order: usize,
    /// Images whose accumulated reflection loss `beta^k` is below this level
    /// (dB) are skipped.
    pub prune_db: f64,
    /// Truncate the response to this many samples.
    pub max_len: Option<usize>,
}

/// Impulse trains with at most this many images are convolved directly.
const SPARSE_TRAIN: usize = 64;

/// Upper bound on the automatic reflection order.
pub const MAX_AUTO_ORDER: usize = 256;

/// Reflection loss below which images are dropped, dB.
pub const PRUNE_DB: f64 = -60.0;

impl ImageSourceOptions {
    /// Reflection coefficient calibrated for sample rate `fs`, with the
    /// order high enough for the reflection loss to reach [`PRUNE_DB`].
    pub fn for_room(room: &RoomConfig, fs: u32) -> Result<Self> {
        Self::with_reflection(room, calibrated_reflection(room, fs as f64)?)
    }

    /// Plain Sabine reflection coefficient, without calibration.
    pub fn sabine(room: &RoomConfig) -> Result<Self> {
        Self::with_reflection(room, rt60_to_reflectivity(room)?.reflection())
    }

    fn with_reflection(room: &RoomConfig, reflection: f64) -> Result<Self> {
        let max_order = match rt60_to_reflectivity(room)? {
            Reflectivity::Anechoic => 0,
            Reflectivity::Uniform { .. } => calibrate::order_for(reflection),
        };
        Ok(ImageSourceOptions {
            reflection,
            max_order,
            prune_db: PRUNE_DB,
            max_len: None,
        })
    }

    pub fn with_max_len(mut self, len: usize) -> Self {
        self.max_len = Some(len);
        self
    }
}

/// Binaural room impulse response with its direct-path part kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Brir {
    /// Full response, direct path plus reflections.
    pub taps: Binaural,
    /// Order-0 (direct-path) contribution alone, same length as `taps`.
    pub direct: Binaural,
    /// Samples up to the end of the direct-path contribution.
    pub direct_len: usize,
}

impl Brir {
    pub fn len(&self) -> usize {
        self.taps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps[0].is_empty()
    }
}

/// Simulate with the automatic order/pruning limits but an explicit
/// reflection order cap.
pub fn simulate_brir(
    room: &RoomConfig,
    source_az: f64,
    distance: f64,
    hrir: &HrirSet,
    max_order: usize,
) -> Result<Brir> {
    let opts = ImageSourceOptions {
        max_order,
        ..ImageSourceOptions::for_room(room, hrir.sample_rate())?
    };
    simulate_brir_with(room, source_az, distance, hrir, &opts)
}

pub fn simulate_brir_with(
    room: &RoomConfig,
    source_az: f64,
    distance: f64,
    hrir: &HrirSet,
    opts: &ImageSourceOptions,
) -> Result<Brir> {
    let reflectivity = rt60_to_reflectivity(room)?;
    if hrir.directions().is_empty() {
        return Err(Error::invalid("HRIR set", "empty grid"));
    }
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::invalid("source", "distance must be positive"));
    }
    let source = room.source_position(source_az, distance);
    if !room.inside(source) {
        return Err(Error::invalid(
            "source",
            format!("position {source:?} is outside the room"),
        ));
    }

    let fs = hrir.sample_rate() as f64;
    let beta = opts.reflection;
    let max_order = match reflectivity {
        Reflectivity::Anechoic => 0,
        Reflectivity::Uniform { .. } => opts.max_order,
    };
    let min_gain = 10f64.powf(opts.prune_db / 20.0);
    let max_delay = opts.max_len.unwrap_or(usize::MAX);
    let max_dist = opts
        .max_len
        .map(|l| l as f64 * room.sound_speed / fs)
        .unwrap_or(f64::INFINITY);

    let mut trains: Vec<Vec<f64>> = vec![Vec::new(); hrir.directions().len()];
    let mut direct_train: Option<(usize, usize, f64)> = None;
    for_each_image(room, source, max_order, max_dist, |im| {
        let reflection_gain = beta.powi(im.order as i32);
        if im.order > 0 && reflection_gain < min_gain {
            return;
        }
        let delay = (im.distance / room.sound_speed * fs).round() as usize;
        if delay >= max_delay {
            return;
        }
        let dir = hrir.nearest(room.relative_azimuth(im.position));
        let gain = reflection_gain / im.distance;
        if im.order == 0 {
            direct_train = Some((dir, delay, gain));
        }
        let t = &mut trains[dir];
        if t.len() <= delay {
            t.resize(delay + 1, 0.0);
        }
        t[delay] += gain;
    });

    let (d_dir, d_delay, d_gain) = direct_train
        .ok_or_else(|| Error::Capacity("direct path falls outside the response length".into()))?;
    let natural_len = trains.iter().map(|t| t.len()).max().unwrap_or(0) + hrir.taps_len() - 1;
    let len = opts.max_len.map_or(natural_len, |l| l.min(natural_len));

    let mut taps: Binaural = [vec![0.0; len], vec![0.0; len]];
    for (dir, train) in trains.iter().enumerate() {
        if train.iter().all(|&g| g == 0.0) {
            continue;
        }
        for (ch, out) in taps.iter_mut().enumerate() {
            let h: Vec<f64> = hrir
                .impulse_response(dir, ch)
                .iter()
                .map(|&v| v as f64)
                .collect();
            let nonzero: Vec<(usize, f64)> = train
                .iter()
                .enumerate()
                .filter(|(_, &g)| g != 0.0)
                .map(|(i, &g)| (i, g))
                .collect();
            if nonzero.len() <= SPARSE_TRAIN {
                for (delay, g) in nonzero {
                    for (o, &v) in out.iter_mut().skip(delay).zip(&h) {
                        *o += g * v;
                    }
                }
            } else {
                let y = fft_convolve(train, &h);
                for (o, v) in out.iter_mut().zip(y) {
                    *o += v;
                }
            }
        }
    }

    let mut direct: Binaural = [vec![0.0; len], vec![0.0; len]];
    for (ch, out) in direct.iter_mut().enumerate() {
        for (i, &h) in hrir.impulse_response(d_dir, ch).iter().enumerate() {
            if let Some(o) = out.get_mut(d_delay + i) {
                *o = d_gain * h as f64;
            }
        }
    }
    let direct_len = (d_delay + hrir.taps_len()).min(len);

    Ok(Brir {
        taps,
        direct,
        direct_len,
    })
}

fn render(filter: &Binaural, source: &[f64]) -> Result<Binaural> {
    if source.is_empty() {
        return Err(Error::Shape("empty source signal".into()));
    }
    let n = source.len();
    let ch = |h: &[f64]| {
        let mut y = fft_convolve(source, h);
        y.resize(n, 0.0);
        y.truncate(n);
        y
    };
    Ok([ch(&filter[0]), ch(&filter[1])])
}

/// Reverberant binaural signal: the source convolved with the full BRIR,
/// truncated to the source length.
pub fn render_source(brir: &Brir, source: &[f64]) -> Result<Binaural> {
    render(&brir.taps, source)
}

/// Direct-path binaural signal, the dereverberated reference.
pub fn render_direct(brir: &Brir, source: &[f64]) -> Result<Binaural> {
    render(&brir.direct, source)
}
