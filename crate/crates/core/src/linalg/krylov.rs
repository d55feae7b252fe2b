use super::{orthonormal_basis, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KrylovOptions {
    /// Stack the raw powers `(AᵀA)^t Ω` and orthonormalize once at the end,
    /// instead of orthonormalizing every block before the next power.
    pub naive: bool,
    /// Prepend the block `Ω` itself to the Krylov space.
    pub include_zeroth_block: bool,
}

/// Orthonormal basis `U` of `span[AᵀAΩ, (AᵀA)²Ω, ..., (AᵀA)^q Ω]`.
///
/// `AᵀA` is never formed: each block is `Aᵀ(A·prev)`. Columns that are
/// numerically dependent on earlier ones are dropped, and at most
/// `min(A.cols, A.rows, q·Ω.cols)` columns are returned (`A.rows` is not a
/// bound when the zeroth block is included).
pub fn block_krylov_basis(a: &Matrix, omega: &Matrix, q: usize, opts: KrylovOptions) -> Result<Matrix> {
    if omega.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "sketch has {} rows but the matrix has {} columns",
            omega.nrows(),
            a.ncols()
        )));
    }
    if q == 0 {
        return Err(Error::invalid("Krylov depth q must be >= 1"));
    }
    let width = omega.ncols();
    let cap = if opts.include_zeroth_block {
        a.ncols().min((q + 1) * width)
    } else {
        a.ncols().min(a.nrows()).min(q * width)
    };

    let mut blocks: Vec<Matrix> = Vec::with_capacity(q + 1);
    if opts.include_zeroth_block {
        blocks.push(omega.clone());
    }
    // explicit transpose: gemm is much faster than nalgebra's dot-based tr_mul
    let a_t = a.transpose();
    let mut prev = omega.clone();
    for _ in 0..q {
        let next = &a_t * (a * &prev);
        prev = if opts.naive {
            next.clone()
        } else {
            orthonormal_basis(&next, next.ncols())
        };
        blocks.push(if opts.naive { next } else { prev.clone() });
    }

    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut k = Matrix::zeros(a.ncols(), total);
    let mut at = 0;
    for b in &blocks {
        k.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    Ok(orthonormal_basis(&k, cap))
}
