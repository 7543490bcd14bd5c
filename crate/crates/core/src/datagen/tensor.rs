//! `DPT1` dense tensor files.
//!
//! Layout: magic `DPT1`, u8 dtype (0 = f32le), u8 ndim, ndim x u32le dims,
//! then the row-major f32le payload. Complex tensors carry a trailing
//! dimension of 2 (re, im).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signals::{Spectrogram, StftConfig};
use crate::Complex;

const MAGIC: &[u8; 4] = b"DPT1";
const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(Error::Shape(format!("unsupported rank {}", dims.len())));
        }
        if dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::Shape("dimension exceeds u32".into()));
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::PayloadLength {
                expected,
                found: data.len(),
            });
        }
        Ok(Tensor { dims, data })
    }

    /// `channels x frames x bins x 2` tensor of a spectrogram.
    pub fn from_spectrogram(spec: &Spectrogram) -> Self {
        let data = spec
            .data()
            .iter()
            .flat_map(|z| [z.re as f32, z.im as f32])
            .collect();
        Tensor {
            dims: vec![spec.channels(), spec.frames(), spec.bins(), 2],
            data,
        }
    }

    /// Inverse of [`Tensor::from_spectrogram`] for band-selected spectra.
    pub fn to_band_spectrogram(&self, config: &StftConfig) -> Result<Spectrogram> {
        let [channels, frames, bins, 2] = self.dims[..] else {
            return Err(Error::Shape(format!(
                "expected channels x frames x bins x 2, got {:?}",
                self.dims
            )));
        };
        if bins != config.band_len() {
            return Err(Error::Shape(format!(
                "{bins} bins, configuration band has {}",
                config.band_len()
            )));
        }
        let data = self
            .data
            .chunks_exact(2)
            .map(|c| Complex::new(c[0] as f64, c[1] as f64))
            .collect();
        Spectrogram::from_parts(config.clone(), channels, frames, true, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(DTYPE_F32);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing DPT1 magic".into()));
        }
        if bytes[4] != DTYPE_F32 {
            return Err(Error::Format(format!("unknown dtype {}", bytes[4])));
        }
        let ndim = bytes[5] as usize;
        let header = 6 + 4 * ndim;
        if ndim == 0 || bytes.len() < header {
            return Err(Error::Format("truncated header".into()));
        }
        let dims: Vec<usize> = bytes[6..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format("dimension product overflows".into()))?;
        let payload = &bytes[header..];
        if payload.len() != expected.saturating_mul(4) {
            return Err(Error::PayloadLength {
                expected,
                found: payload.len() / 4,
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Tensor { dims, data })
    }
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tensor.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::from_bytes(&bytes)
}
