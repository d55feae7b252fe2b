//! Synthetic test tensors, additive white Gaussian noise and the `.dten`
//! dense tensor format.
//!
//! `.dten` layout (little-endian):
//!
//! ```text
//! "DTEN"        4 bytes
//! version       u8 (= 1)
//! N             u32
//! I_1 .. I_N    N x u64
//! values        prod(I_n) x f64, column-major
//! ```
//!
//! Other containers (images, video, hyperspectral cubes) are converted
//! outside this crate, e.g. with numpy:
//! `open(p, "wb").write(b"DTEN" + bytes([1]) + struct.pack("<I", x.ndim) + struct.pack(f"<{x.ndim}Q", *x.shape) + x.astype("<f8").tobytes(order="F"))`.

use std::fs;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RngSeed;
use crate::tensor::DenseTensor;
use crate::tt::ByteReader;

const DTEN_MAGIC: &[u8; 4] = b"DTEN";
const DTEN_VERSION: u8 = 1;

/// `n × n × n` tensor with diagonal frontal slices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub n: usize,
    /// Plateau length `T`.
    #[serde(rename = "T")]
    pub plateau: usize,
    /// Decay step `D`: successive diagonal entries after the plateau shrink by `10^-D`.
    #[serde(rename = "D")]
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFnParams {
    pub dims: Vec<usize>,
    pub h: f64,
}

/// Frontal slice `j` (one-based) is
/// `diag(1, ..., 1, 10^-D, 10^-2D, ..., 10^-(n-m)D)` with `m = min(T, j)` ones.
pub fn spectrum_decay_tensor(p: &SpectrumParams) -> Result<DenseTensor> {
    if p.n == 0 || p.plateau == 0 || !(p.decay > 0.0) {
        return Err(Error::invalid(format!(
            "spectrum parameters need n >= 1, T >= 1, D > 0 (got n={}, T={}, D={})",
            p.n, p.plateau, p.decay
        )));
    }
    let n = p.n;
    let mut values = vec![0.0; n * n * n];
    for j in 1..=n {
        let ones = p.plateau.min(j);
        for i in 0..n {
            let d = if i < ones {
                1.0
            } else {
                10f64.powf(-((i + 1 - ones) as f64) * p.decay)
            };
            values[i + n * i + n * n * (j - 1)] = d;
        }
    }
    DenseTensor::new(vec![n, n, n], values)
}

/// Entry `(i_1, ..., i_N)` (one-based) is `(i_1^h + ... + i_N^h)^(-1/h)`.
pub fn power_function_tensor(p: &PowerFnParams) -> Result<DenseTensor> {
    if p.dims.is_empty() || !(p.h > 0.0) {
        return Err(Error::invalid(format!(
            "power function needs at least one mode and h > 0 (got {:?}, h={})",
            p.dims, p.h
        )));
    }
    let h = p.h;
    // per-mode tables of i^h
    let powers: Vec<Vec<f64>> = p
        .dims
        .iter()
        .map(|&d| (1..=d).map(|i| (i as f64).powf(h)).collect())
        .collect();
    DenseTensor::from_fn(p.dims.clone(), |idx| {
        let mut sum = 0.0;
        for (m, &i) in idx.iter().enumerate() {
            sum += powers[m][i];
        }
        sum.powf(-1.0 / h)
    })
}

/// Adds i.i.d. zero-mean Gaussian noise whose variance is
/// `P / 10^(snr_db/10)` with `P = ‖t‖_F² / len` the measured signal power.
pub fn add_awgn(t: &DenseTensor, snr_db: f64, seed: RngSeed) -> Result<DenseTensor> {
    let power = t.values().iter().map(|v| v * v).sum::<f64>() / t.len() as f64;
    if power == 0.0 {
        return Err(Error::invalid("signal power is zero; SNR is undefined"));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = seed.rng();
    let values = t
        .values()
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect();
    DenseTensor::new(t.dims().to_vec(), values)
}

pub fn tensor_to_bytes(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + 8 * t.order() + 8 * t.len());
    out.extend_from_slice(DTEN_MAGIC);
    out.push(DTEN_VERSION);
    out.extend_from_slice(&(t.order() as u32).to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in t.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn tensor_from_bytes(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = ByteReader::new(bytes);
    if r.take(4)? != DTEN_MAGIC {
        return Err(Error::parse(0, "bad magic, expected \"DTEN\""));
    }
    let version = r.u8()?;
    if version != DTEN_VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let mut dims = Vec::with_capacity(n.min(64));
    for k in 0..n {
        let at = r.pos as u64;
        let d = r.u64()?;
        if d == 0 {
            return Err(Error::parse(at, format!("mode {k} has size 0")));
        }
        dims.push(d as usize);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::parse(r.pos as u64, "entry count overflows"))?;
    let values = r.f64s(len)?;
    if r.pos != bytes.len() {
        return Err(Error::parse(
            r.pos as u64,
            format!("{} trailing bytes after {len} values", bytes.len() - r.pos),
        ));
    }
    DenseTensor::new(dims, values)
}

pub fn tensor_save(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tensor_to_bytes(t)).map_err(|e| Error::io(path, e))
}

pub fn tensor_load(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    tensor_from_bytes(&bytes)
}
