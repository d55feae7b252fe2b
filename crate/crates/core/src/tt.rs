//! Tensor-train container, reconstruction, diagnostics and the `.ttc` format.
//!
//! Core `n` is an order-3 tensor of dims `(r_{n-1}, I_n, r_n)` with
//! `r_0 = r_N = 1`; boundary singleton modes are stored explicitly.
//!
//! `.ttc` layout (all integers and reals little-endian):
//!
//! ```text
//! "TTC1"            4 bytes
//! N                 u32
//! r_0 .. r_N        (N+1) x u64
//! I_1 .. I_N        N x u64
//! core 1 .. core N  f64 values, each core column-major
//! ```

use std::fs;
use std::path::Path;

use nalgebra::DMatrixView;

use crate::error::{Error, Result};
use crate::linalg::{orthogonality_residual, Matrix};
use crate::tensor::DenseTensor;

const TTC_MAGIC: &[u8; 4] = b"TTC1";

#[derive(Clone, Debug, PartialEq)]
pub struct TtTensor {
    cores: Vec<DenseTensor>,
}

impl TtTensor {
    /// Checked constructor: every core order 3, adjacent ranks agree and the
    /// boundary ranks are 1.
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        let tt = Self { cores };
        tt.check()?;
        Ok(tt)
    }

    /// Wraps cores without validation; see [`TtTensor::validate`].
    pub fn from_cores_unchecked(cores: Vec<DenseTensor>) -> Self {
        Self { cores }
    }

    fn check(&self) -> Result<()> {
        if self.cores.is_empty() {
            return Err(Error::invalid("a TT tensor needs at least one core"));
        }
        for (n, core) in self.cores.iter().enumerate() {
            if core.order() != 3 {
                return Err(Error::invalid(format!(
                    "core {n} has order {}, expected 3",
                    core.order()
                )));
            }
        }
        if self.cores[0].dims()[0] != 1 {
            return Err(Error::invalid(format!(
                "core 0: boundary rank r_0 = {}, expected 1",
                self.cores[0].dims()[0]
            )));
        }
        let last = self.cores.len() - 1;
        if self.cores[last].dims()[2] != 1 {
            return Err(Error::invalid(format!(
                "core {last}: boundary rank r_N = {}, expected 1",
                self.cores[last].dims()[2]
            )));
        }
        for n in 0..last {
            let right = self.cores[n].dims()[2];
            let left = self.cores[n + 1].dims()[0];
            if right != left {
                return Err(Error::invalid(format!(
                    "core {}: left rank {left} does not match right rank {right} of core {n}",
                    n + 1
                )));
            }
        }
        Ok(())
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<DenseTensor> {
        self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// `(r_0, ..., r_N)`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![self.cores[0].dims()[0]];
        r.extend(self.cores.iter().map(|c| c.dims()[2]));
        r
    }

    /// Stored parameter count `sum_n r_{n-1} I_n r_n`.
    pub fn num_params(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    /// The `(r_{n-1} I_n) × r_n` unfolding of core `n`.
    pub fn core_unfolding(&self, n: usize) -> Matrix {
        let d = self.cores[n].dims();
        Matrix::from_column_slice(d[0] * d[1], d[2], self.cores[n].values())
    }

    /// Chained `×₃¹` contraction of all cores with the boundary modes squeezed.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        self.check()?;
        // running (I_1...I_n) × r_n matrix
        let mut acc = self.core_unfolding(0);
        for core in &self.cores[1..] {
            let d = core.dims();
            let next = DMatrixView::from_slice(core.values(), d[0], d[1] * d[2]);
            let prod = &acc * next;
            let rows = prod.nrows() * d[1];
            acc = Matrix::from_vec(rows, d[2], prod.data.into());
        }
        DenseTensor::new(self.dims(), acc.data.into())
    }

    /// Report-only structural and orthogonality diagnostics.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let mut orders_ok = true;
        for (n, core) in self.cores.iter().enumerate() {
            if core.order() != 3 {
                orders_ok = false;
                issues.push(format!("core {n} has order {}", core.order()));
            }
        }
        if self.cores.is_empty() {
            issues.push("no cores".into());
        }
        if !orders_ok || self.cores.is_empty() {
            return ValidationReport {
                boundary_ranks_ok: false,
                rank_chain_ok: false,
                orthogonality_residuals: Vec::new(),
                issues,
            };
        }

        let last = self.cores.len() - 1;
        let r0 = self.cores[0].dims()[0];
        let rn = self.cores[last].dims()[2];
        let boundary_ranks_ok = r0 == 1 && rn == 1;
        if r0 != 1 {
            issues.push(format!("boundary rank r_0 = {r0}"));
        }
        if rn != 1 {
            issues.push(format!("boundary rank r_N = {rn}"));
        }
        let mut rank_chain_ok = true;
        for n in 0..last {
            let (right, left) = (self.cores[n].dims()[2], self.cores[n + 1].dims()[0]);
            if right != left {
                rank_chain_ok = false;
                issues.push(format!("rank mismatch between core {n} ({right}) and core {} ({left})", n + 1));
            }
        }
        let orthogonality_residuals = (0..last)
            .map(|n| orthogonality_residual(&self.core_unfolding(n)))
            .collect();
        ValidationReport {
            boundary_ranks_ok,
            rank_chain_ok,
            orthogonality_residuals,
            issues,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.cores.len();
        let mut out = Vec::with_capacity(4 + 4 + 16 * n + 8 + 8 * self.num_params());
        out.extend_from_slice(TTC_MAGIC);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for r in self.ranks() {
            out.extend_from_slice(&(r as u64).to_le_bytes());
        }
        for d in self.dims() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for core in &self.cores {
            for v in core.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4)?;
        if magic != TTC_MAGIC {
            return Err(Error::parse(0, "bad magic, expected \"TTC1\""));
        }
        let n = r.u32()? as usize;
        if n == 0 {
            return Err(Error::parse(4, "core count is 0"));
        }
        let ranks = (0..=n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let dims = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        if ranks[0] != 1 {
            return Err(Error::invalid(format!("core 0: boundary rank r_0 = {}, expected 1", ranks[0])));
        }
        if ranks[n] != 1 {
            return Err(Error::invalid(format!(
                "core {}: boundary rank r_N = {}, expected 1",
                n - 1,
                ranks[n]
            )));
        }
        if let Some(k) = ranks.iter().position(|&x| x == 0) {
            return Err(Error::invalid(format!("core {}: rank {k} is 0", k.saturating_sub(1))));
        }
        if let Some(k) = dims.iter().position(|&x| x == 0) {
            return Err(Error::invalid(format!("core {k}: mode size is 0")));
        }
        let mut cores = Vec::with_capacity(n);
        for k in 0..n {
            let core_dims = vec![ranks[k] as usize, dims[k] as usize, ranks[k + 1] as usize];
            let len = ranks[k]
                .checked_mul(dims[k])
                .and_then(|v| v.checked_mul(ranks[k + 1]))
                .ok_or_else(|| Error::parse(r.pos as u64, format!("core {k} size overflows")))?;
            let values = r.f64s(len as usize)?;
            cores.push(DenseTensor::new(core_dims, values)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::parse(
                r.pos as u64,
                format!("{} trailing bytes", bytes.len() - r.pos),
            ));
        }
        TtTensor::new(cores)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub boundary_ranks_ok: bool,
    pub rank_chain_ok: bool,
    /// `max |QᵀQ − I|` for cores `0..N-1`.
    pub orthogonality_residuals: Vec<f64>,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn structurally_valid(&self) -> bool {
        self.boundary_ranks_ok && self.rank_chain_ok
    }

    pub fn left_orthogonal(&self, tol: f64) -> bool {
        self.orthogonality_residuals.iter().all(|&r| r <= tol)
    }
}

/// Bounds-checked little-endian reader that reports byte offsets.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::parse(
                self.pos as u64,
                format!(
                    "unexpected end of data: needed {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::parse(self.pos as u64, "value count overflows"))?;
        let raw = self.take(len)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, RngSeed};

    fn random_tt(dims: &[usize], ranks: &[usize], seed: u64) -> TtTensor {
        let mut full = vec![1];
        full.extend_from_slice(ranks);
        full.push(1);
        let cores = dims
            .iter()
            .enumerate()
            .map(|(n, &d)| {
                let m = gaussian_matrix(full[n] * d, full[n + 1], RngSeed(seed).derive(n as u64));
                DenseTensor::new(vec![full[n], d, full[n + 1]], m.as_slice().to_vec()).unwrap()
            })
            .collect();
        TtTensor::new(cores).unwrap()
    }

    fn vector_core(v: &[f64]) -> DenseTensor {
        DenseTensor::new(vec![1, v.len(), 1], v.to_vec()).unwrap()
    }

    #[test]
    fn single_core_is_the_vector() {
        let tt = TtTensor::new(vec![vector_core(&[1.0, -2.0, 3.0])]).unwrap();
        let t = tt.reconstruct().unwrap();
        assert_eq!(t.dims(), &[3]);
        assert_eq!(t.values(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn rank_one_is_outer_product() {
        let u = [0.5, -1.0];
        let v = [2.0, 3.0, -0.25];
        let w = [1.5, 4.0, -2.0, 0.1];
        let tt = TtTensor::new(vec![vector_core(&u), vector_core(&v), vector_core(&w)]).unwrap();
        let t = tt.reconstruct().unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    let e = u[i] * v[j] * w[k];
                    assert!((t.get(&[i, j, k]).unwrap() - e).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn reconstruct_matches_chained_contraction() {
        let tt = random_tt(&[3, 4, 2, 3], &[2, 3, 2], 1);
        let mut acc = tt.cores()[0].clone();
        for core in &tt.cores()[1..] {
            acc = acc.contract(acc.order() - 1, core, 0).unwrap();
        }
        let squeezed = acc.reshape(&[3, 4, 2, 3]).unwrap();
        let t = tt.reconstruct().unwrap();
        let diff = t.sub(&squeezed).unwrap().frobenius_norm();
        assert!(diff <= 1e-12 * t.frobenius_norm());
    }

    #[test]
    fn constructor_rejects_bad_ranks() {
        let a = DenseTensor::new(vec![1, 2, 3], vec![0.0; 6]).unwrap();
        let b = DenseTensor::new(vec![2, 2, 1], vec![0.0; 4]).unwrap();
        let err = TtTensor::new(vec![a, b]).unwrap_err().to_string();
        assert!(err.contains("core 1"), "{err}");
    }

    #[test]
    fn validate_flags_boundary() {
        let a = DenseTensor::new(vec![2, 2, 1], vec![0.0; 4]).unwrap();
        let tt = TtTensor::from_cores_unchecked(vec![a]);
        let rep = tt.validate();
        assert!(!rep.boundary_ranks_ok);
        assert!(tt.reconstruct().is_err());
    }

    #[test]
    fn validate_orthogonality_residual() {
        // unit first core with r_1 = 1, scaled by 2: |4 - 1| = 3
        let q = gaussian_matrix(5, 1, RngSeed(3)).normalize();
        let c0 = DenseTensor::new(vec![1, 5, 1], (q * 2.0).as_slice().to_vec()).unwrap();
        let c1 = vector_core(&[1.0, 2.0]);
        let rep = TtTensor::new(vec![c0, c1]).unwrap().validate();
        assert!(rep.structurally_valid());
        assert_eq!(rep.orthogonality_residuals.len(), 1);
        assert!((rep.orthogonality_residuals[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn params_and_linearity() {
        let tt = random_tt(&[5, 6, 7], &[3, 4], 4);
        assert_eq!(tt.num_params(), 5 * 3 + 3 * 6 * 4 + 4 * 7);
        let base = tt.reconstruct().unwrap();
        let mut cores = tt.clone().into_cores();
        cores[1] = cores[1].scale(-2.5);
        let scaled = TtTensor::new(cores).unwrap().reconstruct().unwrap();
        let diff = scaled.sub(&base.scale(-2.5)).unwrap().frobenius_norm();
        assert!(diff <= 1e-12 * base.frobenius_norm());
    }

    #[test]
    fn byte_round_trip_and_errors() {
        let tt = random_tt(&[5, 6, 7], &[3, 4], 5);
        let bytes = tt.to_bytes();
        assert_eq!(TtTensor::from_bytes(&bytes).unwrap(), tt);

        match TtTensor::from_bytes(&bytes[..bytes.len() - 3]) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(TtTensor::from_bytes(b"NOPE"), Err(Error::Parse { offset: 0, .. })));

        let mut bad = bytes.clone();
        bad[8..16].copy_from_slice(&2u64.to_le_bytes());
        match TtTensor::from_bytes(&bad) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("core 0"), "{msg}"),
            other => panic!("expected invalid argument, got {other:?}"),
        }
    }
}
