//! Dense order-N tensors stored column-major (first index varies fastest).
//!
//! Mode indices in this API are zero-based. The element at multi-index
//! `(i_0, ..., i_{N-1})` lives at offset `sum_n i_n * prod_{m<n} I_m`.

use nalgebra::DMatrixView;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

impl DenseTensor {
    /// Builds a tensor from a column-major buffer.
    ///
    /// An empty `dims` denotes an order-0 tensor holding exactly one value.
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("mode {pos} has size 0")));
        }
        if values.len() != product(&dims) {
            return Err(Error::invalid(format!(
                "buffer holds {} values but dims {:?} need {}",
                values.len(),
                dims,
                product(&dims)
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = product(&dims);
        Self::new(dims, vec![0.0; len])
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            dims: Vec::new(),
            values: vec![value],
        }
    }

    /// Evaluates `f` at every zero-based multi-index, in storage order.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("mode {pos} has size 0")));
        }
        let len = product(&dims);
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            values.push(f(&idx));
            for (i, d) in idx.iter_mut().zip(&dims) {
                *i += 1;
                if *i < *d {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { dims, values })
    }

    /// Views a matrix as an order-2 tensor.
    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            dims: vec![m.nrows(), m.ncols()],
            values: m.as_slice().to_vec(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i >= d {
                return None;
            }
            offset += i * stride;
            stride *= d;
        }
        Some(offset)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.offset(index).map(|o| self.values[o])
    }

    pub fn reshape(&self, new_dims: &[usize]) -> Result<Self> {
        self.clone().into_reshaped(new_dims)
    }

    /// Reshape without copying the buffer.
    pub fn into_reshaped(self, new_dims: &[usize]) -> Result<Self> {
        if new_dims.iter().any(|&d| d == 0) || product(new_dims) != self.values.len() {
            return Err(Error::invalid(format!(
                "cannot reshape {:?} ({} entries) into {:?}",
                self.dims,
                self.values.len(),
                new_dims
            )));
        }
        Ok(Self {
            dims: new_dims.to_vec(),
            values: self.values,
        })
    }

    /// Unfolds the tensor with the first `split` modes as rows.
    pub fn matricize(&self, split: usize) -> Result<Matrix> {
        let n = self.order();
        if split == 0 || split >= n {
            return Err(Error::invalid(format!(
                "split {split} outside 1..={} for an order-{n} tensor",
                n.saturating_sub(1)
            )));
        }
        let rows = product(&self.dims[..split]);
        let cols = product(&self.dims[split..]);
        Ok(Matrix::from_column_slice(rows, cols, &self.values))
    }

    /// `self ×_mode b`, with `b` of shape `J × I_mode`.
    pub fn mode_n_product(&self, b: &Matrix, mode: usize) -> Result<Self> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for an order-{} tensor",
                self.order()
            )));
        }
        let size = self.dims[mode];
        if b.ncols() != size {
            return Err(Error::invalid(format!(
                "matrix has {} columns but mode {mode} has size {size}",
                b.ncols()
            )));
        }
        let left = product(&self.dims[..mode]);
        let right = product(&self.dims[mode + 1..]);
        let j = b.nrows();
        let mut dims = self.dims.clone();
        dims[mode] = j;

        let values = if left == 1 {
            let m = DMatrixView::from_slice(&self.values, size, right);
            (b * m).as_slice().to_vec()
        } else {
            let bt = b.transpose();
            let mut out = Vec::with_capacity(left * j * right);
            for slab in self.values.chunks_exact(left * size) {
                let m = DMatrixView::from_slice(slab, left, size);
                out.extend_from_slice((m * &bt).as_slice());
            }
            out
        };
        Ok(Self { dims, values })
    }

    /// Mode-(n, m) product: contracts mode `mode_a` of `self` with mode
    /// `mode_b` of `other`. Result modes are the remaining modes of `self`
    /// followed by the remaining modes of `other`.
    pub fn contract(&self, mode_a: usize, other: &DenseTensor, mode_b: usize) -> Result<Self> {
        if mode_a >= self.order() || mode_b >= other.order() {
            return Err(Error::invalid(format!(
                "contraction modes ({mode_a}, {mode_b}) out of range for orders ({}, {})",
                self.order(),
                other.order()
            )));
        }
        let shared = self.dims[mode_a];
        if shared != other.dims[mode_b] {
            return Err(Error::invalid(format!(
                "common mode mismatch: {} vs {}",
                shared, other.dims[mode_b]
            )));
        }

        let mut perm_a: Vec<usize> = (0..self.order()).filter(|&m| m != mode_a).collect();
        perm_a.push(mode_a);
        let mut perm_b = vec![mode_b];
        perm_b.extend((0..other.order()).filter(|&m| m != mode_b));

        let a = self.permute(&perm_a);
        let b = other.permute(&perm_b);
        let rows = a.len() / shared;
        let cols = b.len() / shared;
        let am = DMatrixView::from_slice(&a.values, rows, shared);
        let bm = DMatrixView::from_slice(&b.values, shared, cols);
        let c = am * bm;

        let dims: Vec<usize> = perm_a[..perm_a.len() - 1]
            .iter()
            .map(|&m| self.dims[m])
            .chain(perm_b[1..].iter().map(|&m| other.dims[m]))
            .collect();
        Ok(Self {
            dims,
            values: c.as_slice().to_vec(),
        })
    }

    /// Reorders modes so that new mode `i` is old mode `perm[i]`.
    pub(crate) fn permute(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.order());
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let mut strides = vec![1usize; self.order()];
        for m in 1..self.order() {
            strides[m] = strides[m - 1] * self.dims[m - 1];
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let new_strides: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();

        let mut values = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; new_dims.len()];
        let mut src = 0usize;
        for _ in 0..self.len() {
            values.push(self.values[src]);
            for k in 0..idx.len() {
                idx[k] += 1;
                src += new_strides[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                src -= new_strides[k] * new_dims[k];
                idx[k] = 0;
            }
        }
        Self {
            dims: new_dims,
            values,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::invalid(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dims: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = product(dims);
        DenseTensor::new(dims.to_vec(), (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    fn random_matrix(r: usize, c: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(DenseTensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn reshape_round_trip_and_column_major() {
        let t = DenseTensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let back = t.reshape(&[3, 2]).unwrap().reshape(&[2, 3]).unwrap();
        assert_eq!(back, t);

        // [1,2;3,4] column-major is (1,3,2,4)
        let m = DenseTensor::new(vec![2, 2], vec![1., 3., 2., 4.]).unwrap();
        assert_eq!(m.get(&[0, 1]), Some(2.0));
        assert_eq!(m.reshape(&[4]).unwrap().values(), &[1., 3., 2., 4.]);
        assert!(t.reshape(&[4, 2]).is_err());
    }

    #[test]
    fn reshape_matches_index_map() {
        let t = random(&[4, 5, 6], 1);
        let r = t.reshape(&[20, 6]).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                for k in 0..6 {
                    assert_eq!(r.get(&[i + 4 * j, k]), t.get(&[i, j, k]));
                }
            }
        }
        let m = t.matricize(2).unwrap();
        assert_eq!(m.as_slice(), r.values());
    }

    #[test]
    fn matricize_small_case() {
        let t = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        let m = t.matricize(1).unwrap();
        let expected = Matrix::from_row_slice(2, 4, &[1., 3., 5., 7., 2., 4., 6., 8.]);
        assert_eq!(m, expected);
        assert!(t.matricize(0).is_err());
        assert!(t.matricize(3).is_err());
    }

    #[test]
    fn matricize_exhaustive_small_dims() {
        for d0 in 1..=3 {
            for d1 in 1..=3 {
                for d2 in 1..=3 {
                    let len = d0 * d1 * d2;
                    let t = DenseTensor::new(vec![d0, d1, d2], (0..len).map(|v| v as f64).collect())
                        .unwrap();
                    let m = t.matricize(1).unwrap();
                    for i in 0..d0 {
                        for j in 0..d1 {
                            for k in 0..d2 {
                                let expected = (i + d0 * j + d0 * d1 * k) as f64;
                                assert_eq!(m[(i, j + d1 * k)], expected);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn norms_are_layout_invariant() {
        let t = random(&[3, 4, 5], 2);
        let direct: f64 = t.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((t.frobenius_norm() - direct).abs() <= 1e-12 * direct);
        for k in 1..3 {
            let m = t.matricize(k).unwrap();
            assert!((m.norm() - direct).abs() <= 1e-12 * direct);
        }
        assert_eq!(DenseTensor::zeros(vec![3, 3]).unwrap().frobenius_norm(), 0.0);
        let ones = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert_eq!(ones.frobenius_norm(), 2.0);
    }

    #[test]
    fn mode_product_identity_and_hand_case() {
        let t = random(&[3, 4, 5], 3);
        for mode in 0..3 {
            let id = Matrix::identity(t.dims()[mode], t.dims()[mode]);
            assert_eq!(t.mode_n_product(&id, mode).unwrap(), t);
        }
        let m = DenseTensor::new(vec![2, 2], vec![1., 3., 2., 4.]).unwrap();
        let b = Matrix::from_row_slice(1, 2, &[1., 1.]);
        let out = m.mode_n_product(&b, 0).unwrap();
        assert_eq!(out.dims(), &[1, 2]);
        assert_eq!(out.values(), &[4., 6.]);
        assert!(m.mode_n_product(&Matrix::zeros(2, 3), 0).is_err());
    }

    #[test]
    fn mode_product_matches_unfolding_product() {
        let t = random(&[3, 4, 5], 4);
        let b = random_matrix(7, 3, 5);
        let lhs = t.mode_n_product(&b, 0).unwrap().matricize(1).unwrap();
        let rhs = &b * t.matricize(1).unwrap();
        assert!((lhs - &rhs).norm() <= 1e-12 * rhs.norm());

        // middle mode against a brute-force loop
        let c = random_matrix(2, 4, 6);
        let out = t.mode_n_product(&c, 1).unwrap();
        assert_eq!(out.dims(), &[3, 2, 5]);
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..5 {
                    let expected: f64 = (0..4).map(|l| c[(j, l)] * t.get(&[i, l, k]).unwrap()).sum();
                    assert!((out.get(&[i, j, k]).unwrap() - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mode_products_compose() {
        let t = random(&[3, 4, 5], 7);
        for mode in 0..3 {
            let i = t.dims()[mode];
            let b = random_matrix(6, i, 8);
            let c = random_matrix(2, 6, 9);
            let two_step = t.mode_n_product(&b, mode).unwrap().mode_n_product(&c, mode).unwrap();
            let one_step = t.mode_n_product(&(&c * &b), mode).unwrap();
            let diff = two_step.sub(&one_step).unwrap().frobenius_norm();
            assert!(diff <= 1e-10 * one_step.frobenius_norm());
        }
    }

    #[test]
    fn contract_inner_product_to_scalar() {
        let v = DenseTensor::new(vec![3], vec![1., 2., 3.]).unwrap();
        let s = v.contract(0, &v, 0).unwrap();
        assert_eq!(s.order(), 0);
        assert_eq!(s.values(), &[14.0]);
    }

    #[test]
    fn contract_matches_matrix_product() {
        let a = random_matrix(3, 4, 10);
        let b = random_matrix(4, 5, 11);
        let c = DenseTensor::from_matrix(&a)
            .contract(1, &DenseTensor::from_matrix(&b), 0)
            .unwrap();
        let expected = &a * &b;
        assert_eq!(c.dims(), &[3, 5]);
        let diff: f64 = c
            .values()
            .iter()
            .zip(expected.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-12);
        assert!(DenseTensor::from_matrix(&a)
            .contract(0, &DenseTensor::from_matrix(&b), 0)
            .is_err());
    }

    #[test]
    fn contract_order3_against_loops() {
        let a = random(&[2, 2, 2], 12);
        let b = random(&[2, 2, 2], 13);
        let c = a.contract(2, &b, 0).unwrap();
        assert_eq!(c.dims(), &[2, 2, 2, 2]);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let expected: f64 = (0..2)
                            .map(|s| a.get(&[i, j, s]).unwrap() * b.get(&[s, k, l]).unwrap())
                            .sum();
                        assert!((c.get(&[i, j, k, l]).unwrap() - expected).abs() <= 1e-12);
                    }
                }
            }
        }
        // non-trailing modes: result order follows remaining modes of a, then b
        let c = a.contract(0, &b, 1).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                for i2 in 0..2 {
                    for k2 in 0..2 {
                        let expected: f64 = (0..2)
                            .map(|s| a.get(&[s, j, k]).unwrap() * b.get(&[i2, s, k2]).unwrap())
                            .sum();
                        assert!((c.get(&[j, k, i2, k2]).unwrap() - expected).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn contract_with_identity_permutes_modes() {
        let a = random(&[2, 3, 4], 14);
        let id = DenseTensor::from_matrix(&Matrix::identity(3, 3));
        let c = a.contract(1, &id, 0).unwrap();
        assert_eq!(c, a.permute(&[0, 2, 1]));
    }
}
