//! Dense matrix kernels used by the TT sweeps.
//!
//! Matrices are `nalgebra::DMatrix<f64>` (column-major). The decompositions
//! here are thin wrappers or hand-written kernels with the conventions the
//! sweeps rely on: nonnegative `R` diagonals, column-dropping orthonormal
//! bases, sign-normalized singular vectors and seeded Gaussian sketches.

mod krylov;
mod qr;
mod random;
mod svd;

pub use krylov::{block_krylov_basis, KrylovOptions};
pub use qr::{complete_basis, economy_qr, orthonormal_basis, DROP_TOLERANCE};
pub use random::{gaussian_matrix, RngSeed};
pub use svd::{delta_rank, singular_values, svd, tail_energy, tail_from_values, truncated_svd, SvdResult, Truncation};

pub type Matrix = nalgebra::DMatrix<f64>;

/// `max_ij |QᵀQ − I|`.
pub fn orthogonality_residual(q: &Matrix) -> f64 {
    let g = q.tr_mul(q);
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Frobenius distance between the orthogonal projectors onto span(a) and span(b),
/// both given by orthonormal columns.
pub fn projector_distance(a: &Matrix, b: &Matrix) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    (pa - pb).norm()
}
