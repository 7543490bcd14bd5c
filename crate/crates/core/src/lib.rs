//! Binaural sound-source localization with direct-path relative transfer
//! functions (DP-RTF).
//!
//! The crate covers the non-learned half of the pipeline:
//!
//! - [`signals`]: STFT analysis/synthesis and localization-band selection.
//! - [`hrir`]: head-related impulse response sets, the `HRS1` file format and
//!   a synthetic spherical head.
//! - [`roomsim`]: image-method binaural room impulse responses, diffuse noise
//!   and SNR-controlled mixing.
//! - [`dprtf`]: the real-valued DP-RTF feature, dictionaries over a DOA grid
//!   and nearest-entry DOA matching.
//! - [`estimators`]: classical DP-RTF (cross-PSD ratio) and GCC-PHAT
//!   baselines.
//! - [`metrics`]: ACC, MAE, PD/FAR and SDR.
//! - [`datagen`]: deterministic dataset generation, tensor and manifest I/O,
//!   and evaluation of prediction files.

pub mod datagen;
pub mod dprtf;
mod dsp;
pub mod error;
pub mod estimators;
pub mod hrir;
pub mod metrics;
pub mod roomsim;
pub mod signals;
pub mod sources;

pub use num_complex::Complex64 as Complex;

pub use error::{Error, Result};

/// Speed of sound used throughout, in m/s.
pub const SOUND_SPEED: f64 = 343.0;
